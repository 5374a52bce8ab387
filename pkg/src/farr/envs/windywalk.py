"""WindyWalk: a 1-D walk perturbed by beta-distributed gusts.

Each step a gust sample ``X ~ Beta(alpha, beta)`` pushes the walker left when
``X < 0.3`` and right when ``X > 0.7``. A walker that holds still is anchored
and unaffected; a moving walker is displaced by ``GUST_GAIN`` cells. Reward is
the clamped change in position, so the return is ``final - start``.
"""
import numpy as np
from scipy import stats

from .._rng import make_rng
from ..upomdp import BetaParams, Environment, TabularModel, UpomdpSpec, check_beta_params

MIN_POS, MAX_POS = -15, 15
START_POS = 0
HORIZON = 50
ACTIONS = (-1, 0, 1)
LEFT_THRESHOLD, RIGHT_THRESHOLD = 0.3, 0.7
GUST_GAIN = 2
GRID_VALUES = (0.01, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0)

N_POS = MAX_POS - MIN_POS + 1


def theta_grid(values=GRID_VALUES):
    return [BetaParams(a, b) for a in values for b in values]


def gust_direction(x):
    x = np.asarray(x)
    return np.where(x > RIGHT_THRESHOLD, 1, np.where(x < LEFT_THRESHOLD, -1, 0))


def gust_probabilities(theta):
    """(P(left), P(calm), P(right)) for one step."""
    a, b = check_beta_params(theta)
    left = float(stats.beta.cdf(LEFT_THRESHOLD, a, b))
    right = float(stats.beta.sf(RIGHT_THRESHOLD, a, b))
    return left, max(0.0, 1.0 - left - right), right


def _move(pos, action_index, gust):
    step = ACTIONS[action_index]
    push = GUST_GAIN * gust if step != 0 else 0
    return min(MAX_POS, max(MIN_POS, pos + step + push))


def windy_step(state, action, theta, seed):
    """Pure transition from ``state = (position, t)`` using a gust drawn from ``seed``."""
    a, b = check_beta_params(theta)
    pos, t = state
    x = make_rng(seed, "gust", t).beta(a, b)
    new = _move(pos, action, int(gust_direction(x)))
    t += 1
    return (new, t), float(new - pos), t >= HORIZON


class WindyWalkEnv(Environment):
    """Observation is the position index ``position - MIN_POS``."""

    deterministic = False

    def __init__(self, grid_values=GRID_VALUES):
        self.grid_values = tuple(float(v) for v in grid_values)
        self.spec = UpomdpSpec(
            action_count=len(ACTIONS),
            observation_count=N_POS,
            horizon=HORIZON,
            discount=1.0,
            theta_space=tuple(theta_grid(self.grid_values)),
            reward_range=(-1 - GUST_GAIN, 1 + GUST_GAIN),
        )
        self._pos = None

    @property
    def max_return(self):
        return float(MAX_POS - START_POS)

    @property
    def min_return(self):
        return float(MIN_POS - START_POS)

    def validate_theta(self, theta):
        return check_beta_params(BetaParams(*theta))

    def reset(self, theta, rng):
        a, b = self.validate_theta(theta)
        self._gusts = gust_direction(rng.beta(a, b, size=HORIZON))
        self._pos, self._t = START_POS, 0
        return self._pos - MIN_POS

    def step(self, action):
        if self._pos is None:
            raise RuntimeError("step() called before reset() or after episode end")
        old = self._pos
        self._pos = _move(old, action, int(self._gusts[self._t]))
        self._t += 1
        reward = float(self._pos - old)
        obs = self._pos - MIN_POS
        if self._t >= HORIZON:
            self._pos = None
            return obs, reward, True
        return obs, reward, False

    def batch_returns(self, theta, policy, seeds):
        """Vectorized equivalent of ``[rollout(self, theta, policy, s) for s in seeds]``.

        Uses the same per-episode random streams as :func:`rollout`, so the
        returns are identical. Only deterministic policies are supported.
        """
        from ..upomdp import PolicyMixture

        a, b = self.validate_theta(theta)
        members = policy.policies if isinstance(policy, PolicyMixture) else (policy,)
        tables = []
        for p in members:
            p.check_compatible(self.spec)
            g = p.greedy_actions()
            tables.append(g[:HORIZON] if p.time_indexed else np.broadcast_to(g, (HORIZON, N_POS)))
        tables = np.stack(tables)
        n = len(seeds)
        which = np.zeros(n, dtype=int)
        gusts = np.empty((n, HORIZON), dtype=int)
        for k, s in enumerate(seeds):
            if isinstance(policy, PolicyMixture):
                chosen = policy.sample(make_rng(s, "mixture"))
                which[k] = next(i for i, p in enumerate(members) if p is chosen)
            gusts[k] = gust_direction(make_rng(s, "env").beta(a, b, size=HORIZON))
        step_of = np.asarray(ACTIONS)
        pos = np.full(n, START_POS)
        for t in range(HORIZON):
            act = tables[which, t, pos - MIN_POS]
            step = step_of[act]
            push = np.where(step != 0, GUST_GAIN * gusts[:, t], 0)
            pos = np.clip(pos + step + push, MIN_POS, MAX_POS)
        return (pos - START_POS).astype(float)

    def model(self, theta):
        left, calm, right = gust_probabilities(theta)
        P = np.zeros((N_POS, len(ACTIONS), N_POS))
        R = np.zeros((N_POS, len(ACTIONS)))
        for s in range(N_POS):
            pos = s + MIN_POS
            for ai in range(len(ACTIONS)):
                for gust, p in ((-1, left), (0, calm), (1, right)):
                    if p == 0.0:
                        continue
                    new = _move(pos, ai, gust)
                    P[s, ai, new - MIN_POS] += p
                    R[s, ai] += p * (new - pos)
        return TabularModel(P, R, START_POS - MIN_POS)
