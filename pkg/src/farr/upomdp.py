"""Parameterized environments, tabular policies and Monte Carlo utility estimates."""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._rng import derive_seed, make_rng
from ._validation import check_distribution, check_positive_int


class GridGoal(NamedTuple):
    row: int
    col: int

    def fields(self):
        return {"row": self.row, "col": self.col}


class BetaParams(NamedTuple):
    alpha: float
    beta: float

    def fields(self):
        return {"alpha": self.alpha, "beta": self.beta}


def check_beta_params(theta):
    a, b = float(theta.alpha), float(theta.beta)
    if not (0.0 < a <= 10.0 and 0.0 < b <= 10.0):
        raise ValueError(f"beta parameters must lie in (0, 10], got {theta}")
    return BetaParams(a, b)


@dataclass(frozen=True)
class UpomdpSpec:
    action_count: int
    observation_count: int
    horizon: int
    discount: float
    theta_space: tuple
    reward_range: tuple = (-np.inf, np.inf)

    def __post_init__(self):
        check_positive_int(self.horizon, "horizon")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError(f"discount must be in [0, 1], got {self.discount}")


@dataclass(frozen=True, eq=False)
class TabularModel:
    """Exact finite model for one theta.

    ``P[s, a, s2]`` holds probabilities of *continuing* transitions; mass
    missing from a row is the probability of terminating. ``R[s, a]`` is the
    expected immediate reward.
    """

    P: np.ndarray
    R: np.ndarray
    start: int


@dataclass(frozen=True)
class Trajectory:
    steps: tuple
    return_value: float

    def __len__(self):
        return len(self.steps)


class Environment:
    """Base class: subclasses implement ``reset``/``step`` and the theta space.

    Observations are integer ids in ``range(spec.observation_count)``;
    policies also receive the step index, which is part of the observable
    history.
    """

    spec: UpomdpSpec
    deterministic = False

    def thetas(self):
        return list(self.spec.theta_space)

    def validate_theta(self, theta):
        if theta not in self.spec.theta_space:
            raise ValueError(f"illegal theta {theta!r}")
        return theta

    def reset(self, theta, rng):
        raise NotImplementedError

    def step(self, action):
        raise NotImplementedError

    def model(self, theta):
        raise NotImplementedError(f"{type(self).__name__} exposes no exact model")

    @property
    def max_return(self):
        lo, hi = self.spec.reward_range
        return self.spec.horizon * hi


class TabularPolicy:
    """Observation-indexed (optionally also step-indexed) action distributions."""

    def __init__(self, table, time_indexed=False, metadata=None):
        table = np.array(table, dtype=float)
        expected_ndim = 3 if time_indexed else 2
        if table.ndim != expected_ndim:
            raise ValueError(f"table must be {expected_ndim}-D, got shape {table.shape}")
        flat = table.reshape(-1, table.shape[-1])
        if np.any(flat < 0) or np.any(np.abs(flat.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("every policy row must be a probability distribution")
        table.setflags(write=False)
        self.table = table
        self.time_indexed = bool(time_indexed)
        self.metadata = dict(metadata or {})
        self.deterministic = bool(np.all(flat.max(axis=1) == 1.0))
        self._greedy = table.argmax(axis=-1)

    @property
    def action_count(self):
        return self.table.shape[-1]

    @property
    def observation_count(self):
        return self.table.shape[-2]

    @classmethod
    def from_actions(cls, actions, action_count, time_indexed=False, metadata=None):
        actions = np.asarray(actions, dtype=int)
        table = np.zeros(actions.shape + (action_count,))
        np.put_along_axis(table, actions[..., None], 1.0, axis=-1)
        return cls(table, time_indexed, metadata)

    @classmethod
    def random_deterministic(cls, spec, rng, time_indexed=False):
        shape = (spec.horizon, spec.observation_count) if time_indexed else (spec.observation_count,)
        actions = rng.integers(spec.action_count, size=shape)
        return cls.from_actions(actions, spec.action_count, time_indexed, {"kind": "random"})

    def action_probs(self, obs, t):
        return self.table[t, obs] if self.time_indexed else self.table[obs]

    def greedy_actions(self, t=None):
        if self.time_indexed:
            return self._greedy if t is None else self._greedy[t]
        return self._greedy

    def act(self, obs, t, rng):
        if self.deterministic:
            return int(self._greedy[t, obs] if self.time_indexed else self._greedy[obs])
        probs = self.action_probs(obs, t)
        return int(min(np.searchsorted(np.cumsum(probs), rng.random(), side="right"), len(probs) - 1))

    def check_compatible(self, spec):
        if self.action_count != spec.action_count or self.observation_count != spec.observation_count:
            raise ValueError(
                f"policy spaces ({self.observation_count} obs, {self.action_count} actions) do not "
                f"match environment ({spec.observation_count} obs, {spec.action_count} actions)"
            )
        if self.time_indexed and self.table.shape[0] < spec.horizon:
            raise ValueError("time-indexed policy is shorter than the environment horizon")

    def __eq__(self, other):
        return (
            isinstance(other, TabularPolicy)
            and self.time_indexed == other.time_indexed
            and np.array_equal(self.table, other.table)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PolicyMixture:
    """A mixed strategy: one member is sampled at the start of each episode."""

    policies: tuple
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        policies = tuple(self.policies)
        if not policies:
            raise ValueError("mixture needs at least one policy")
        w = np.full(len(policies), 1.0 / len(policies)) if self.weights is None else self.weights
        w = check_distribution(w, "mixture weights", size=len(policies))
        object.__setattr__(self, "policies", policies)
        object.__setattr__(self, "weights", w)

    def support(self):
        return [(p, float(w)) for p, w in zip(self.policies, self.weights) if w > 0]

    def sample(self, rng):
        idx = int(np.searchsorted(np.cumsum(self.weights), rng.random(), side="right"))
        return self.policies[min(idx, len(self.policies) - 1)]

    @property
    def deterministic_members(self):
        return all(p.deterministic for p, _ in self.support())


def _members(policy):
    return policy.policies if isinstance(policy, PolicyMixture) else (policy,)


def rollout(env, theta, policy, seed=0):
    """Run one episode; fully determined by ``(theta, policy, seed)``."""
    env.validate_theta(theta)
    for member in _members(policy):
        member.check_compatible(env.spec)
    if isinstance(policy, PolicyMixture):
        policy = policy.sample(make_rng(seed, "mixture"))
    policy_rng = make_rng(seed, "policy")
    obs = env.reset(theta, make_rng(seed, "env"))
    gamma = env.spec.discount
    steps, ret, disc = [], 0.0, 1.0
    for t in range(env.spec.horizon):
        a = policy.act(obs, t, policy_rng)
        next_obs, r, done = env.step(a)
        steps.append((obs, a, r))
        ret += disc * r
        disc *= gamma
        obs = next_obs
        if done:
            break
    return Trajectory(tuple(steps), ret)


def episode_seed(seed, index):
    return derive_seed(seed, "episode", index)


def estimate_utility(env, theta, policy, episodes=100, seed=0):
    """Mean return over ``episodes`` seeded rollouts and its standard error."""
    episodes = check_positive_int(episodes, "episodes")
    env.validate_theta(theta)
    mixture = isinstance(policy, PolicyMixture)
    if env.deterministic and not mixture and policy.deterministic:
        return rollout(env, theta, policy, seed).return_value, 0.0
    seeds = [episode_seed(seed, i) for i in range(episodes)]
    batch = getattr(env, "batch_returns", None)
    if batch is not None and all(m.deterministic for m in _members(policy)):
        returns = batch(theta, policy, seeds)
    else:
        returns = np.array([rollout(env, theta, policy, s).return_value for s in seeds])
    return _mean_stderr(returns)


def _mean_stderr(returns):
    returns = np.asarray(returns, dtype=float)
    mean = float(returns.mean())
    if returns.size < 2:
        return mean, 0.0
    return mean, float(returns.std(ddof=1) / np.sqrt(returns.size))


def expected_utility(env, theta, policy, episodes=100, seed=0):
    """Utility of a policy or mixture, exact whenever that is cheap.

    On deterministic environments with deterministic members the mixture
    expectation is computed from one rollout per member; otherwise members
    are sampled per episode as in :func:`estimate_utility`.
    """
    members = _members(policy)
    if env.deterministic and all(m.deterministic for m in members):
        if not isinstance(policy, PolicyMixture):
            return rollout(env, theta, policy, seed).return_value, 0.0
        value = sum(w * rollout(env, theta, p, seed).return_value for p, w in policy.support())
        return float(value), 0.0
    return estimate_utility(env, theta, policy, episodes, seed)
