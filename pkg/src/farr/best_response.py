"""Best-response oracles: exact backward induction and tabular Q-learning."""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._rng import derive_seed, make_rng
from ._validation import check_distribution, check_positive_int
from .envs.lavaworld import LAVA_REWARD, STEP_REWARD, LavaWorldEnv
from .upomdp import TabularPolicy, estimate_utility

TIE_ATOL = 1e-12


class IntractableBeliefError(NotImplementedError):
    """No exact solver exists for a hidden-parameter mixture on this environment."""


@dataclass(frozen=True)
class ThetaDistribution:
    """Finite distribution over thetas, e.g. an adversary mixed strategy."""

    thetas: tuple
    weights: np.ndarray = None

    def __post_init__(self):
        thetas = tuple(self.thetas)
        if not thetas:
            raise ValueError("need at least one theta")
        w = np.full(len(thetas), 1.0 / len(thetas)) if self.weights is None else self.weights
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "weights", check_distribution(w, "theta weights", size=len(thetas)))

    def support(self):
        return [(th, float(w)) for th, w in zip(self.thetas, self.weights) if w > 0]

    def sample(self, rng):
        idx = int(np.searchsorted(np.cumsum(self.weights), rng.random(), side="right"))
        return self.thetas[min(idx, len(self.thetas) - 1)]

    __hash__ = None

    def __eq__(self, other):
        return (
            isinstance(other, ThetaDistribution)
            and self.thetas == other.thetas
            and np.array_equal(self.weights, other.weights)
        )


@dataclass(frozen=True)
class BrEstimate:
    theta: object
    value: float
    seeds_used: int
    per_seed_values: tuple
    stderr: float = 0.0
    method: str = "exact"


@dataclass(frozen=True)
class QLearningParams:
    learning_rate: float = 0.1
    epsilon_start: float = 0.5
    epsilon_end: float = 0.01
    epsilon_decay_steps: int = 20_000
    time_indexed: bool = False

    def epsilon(self, step):
        frac = min(1.0, step / max(1, self.epsilon_decay_steps))
        return self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)


def _first_argmax(q):
    """Lowest-index argmax that treats values within ``TIE_ATOL`` as ties."""
    return (q >= q.max(axis=-1, keepdims=True) - TIE_ATOL).argmax(axis=-1)


def value_iteration_br(env, theta, tolerance=TIE_ATOL):
    """Finite-horizon backward induction on the exact model for ``theta``.

    Returns a deterministic step-indexed policy (lowest-index action among
    optimal ones) and the exact start-state value.
    """
    theta = env.validate_theta(theta)
    model = env.model(theta)
    H, gamma = env.spec.horizon, env.spec.discount
    S, A = model.R.shape
    actions = np.zeros((H, S), dtype=int)
    v = np.zeros(S)
    for t in range(H - 1, -1, -1):
        q = model.R + gamma * (model.P @ v)
        actions[t] = (q >= q.max(axis=1, keepdims=True) - tolerance).argmax(axis=1)
        v = q.max(axis=1)
    policy = TabularPolicy.from_actions(
        actions, A, time_indexed=True, metadata={"kind": "exact-br", "theta": theta}
    )
    return policy, float(v[model.start])


def value_iteration_br_mixture(env, thetas, weights=None):
    """Exact best response to a hidden theta drawn from ``weights``.

    The value is ``sum_j weights[j] * U(policy, thetas[j])``. Degenerate
    mixtures reduce to :func:`value_iteration_br`. Lava World is solved on
    the belief-augmented problem: dynamics do not depend on the goal until it
    is found, so the belief is the prior restricted to unvisited cells and a
    deterministic policy is an open-loop route. Other environments raise
    :class:`IntractableBeliefError`.
    """
    dist = ThetaDistribution([env.validate_theta(t) for t in thetas], weights)
    support = dist.support()
    if len(support) == 1:
        return value_iteration_br(env, support[0][0])
    if isinstance(env, LavaWorldEnv):
        return _lava_route_br(env, support)
    raise IntractableBeliefError(
        f"no exact mixture best response for {type(env).__name__}; use Q-learning"
    )


def _lava_route_br(env, support):
    grid = env.grid
    H = env.spec.horizon
    n_actions = env.spec.action_count
    lava_mass = 0.0
    findable = {}
    for theta, w in support:
        cell = grid.index(*theta)
        if grid.is_lava(*theta):
            lava_mass += w
        else:
            findable[cell] = findable.get(cell, 0.0) + w
    cells = sorted(findable)
    bit = {c: 1 << k for k, c in enumerate(cells)}
    is_lava = [grid.is_lava(*grid.coords(s)) for s in range(grid.n_cells)]
    nbr = [[grid.index(*grid.move(*grid.coords(s), a)) for a in range(n_actions)] for s in range(grid.n_cells)]

    @lru_cache(maxsize=None)
    def remaining(mask):
        # Explicit sum over unvisited cells keeps "nothing left" an exact zero.
        return lava_mass + sum(findable[c] for c in cells if not mask & bit[c])

    @lru_cache(maxsize=None)
    def solve(pos, mask, t):
        rem = remaining(mask)
        if t == H or rem == 0.0:
            return 0.0, next((a for a in range(n_actions) if not is_lava[nbr[pos][a]]), 0)
        best_v, best_a = -np.inf, 0
        for a in range(n_actions):
            nxt = nbr[pos][a]
            if is_lava[nxt]:
                v = LAVA_REWARD * rem
            else:
                v = STEP_REWARD * rem + solve(nxt, mask | bit.get(nxt, 0), t + 1)[0]
            if v > best_v + TIE_ATOL:
                best_v, best_a = v, a
        return best_v, best_a

    start = grid.index(*grid.start)
    value = solve(start, 0, 0)[0]
    actions = np.zeros((H, grid.n_cells), dtype=int)
    for s in range(grid.n_cells):
        actions[:, s] = next((a for a in range(n_actions) if not is_lava[nbr[s][a]]), 0)
    pos, mask = start, 0
    for t in range(H):
        a = solve(pos, mask, t)[1]
        actions[t, pos] = a
        nxt = nbr[pos][a]
        if is_lava[nxt]:
            break
        pos, mask = nxt, mask | bit.get(nxt, 0)
    policy = TabularPolicy.from_actions(
        actions, n_actions, time_indexed=True, metadata={"kind": "mixture-br"}
    )
    return policy, float(value)


def q_learning_br(env, theta, budget, params=None, seed=0):
    """Tabular Q-learning with linearly decaying epsilon-greedy exploration.

    ``theta`` is a single theta or a :class:`ThetaDistribution`, in which
    case a fresh theta is drawn every episode. Returns the greedy policy.
    """
    if budget is None or budget <= 0:
        raise ValueError(f"budget must be a positive number of timesteps, got {budget!r}")
    budget = int(budget)
    params = params or QLearningParams()
    spec = env.spec
    H, gamma, A = spec.horizon, spec.discount, spec.action_count
    sampler = theta if isinstance(theta, ThetaDistribution) else None
    if sampler is None:
        theta = env.validate_theta(theta)
    tix = params.time_indexed
    Q = np.zeros((H + 1, spec.observation_count, A) if tix else (spec.observation_count, A))
    rng = make_rng(seed, "qlearning")
    lr = params.learning_rate
    steps = episode = 0
    while steps < budget:
        th = sampler.sample(rng) if sampler is not None else theta
        obs = env.reset(th, make_rng(seed, "qlearning-episode", episode))
        episode += 1
        for t in range(H):
            row = Q[t, obs] if tix else Q[obs]
            if rng.random() < params.epsilon(steps):
                a = int(rng.integers(A))
            else:
                a = int(_first_argmax(row))
            nobs, r, done = env.step(a)
            target = r if done else r + gamma * (Q[t + 1, nobs] if tix else Q[nobs]).max()
            row[a] += lr * (target - row[a])
            obs = nobs
            steps += 1
            if done or steps >= budget:
                break
    greedy = _first_argmax(Q[:H] if tix else Q)
    meta = {"kind": "q-learning", "budget": budget, "seed": seed}
    return TabularPolicy.from_actions(greedy, A, time_indexed=tix, metadata=meta)


def estimate_br_value(
    env, theta, method="exact", seeds=1, budget=None, params=None, seed=0, episodes=100
):
    """Estimate the optimal return on ``theta``.

    ``exact`` runs backward induction (one "seed"); ``qlearning`` averages
    the evaluated greedy returns of ``seeds`` independently trained policies.
    """
    theta = env.validate_theta(theta)
    if method == "exact":
        _, value = value_iteration_br(env, theta)
        return BrEstimate(theta, value, 1, (value,), 0.0, "exact")
    if method != "qlearning":
        raise ValueError(f"unknown best-response method {method!r}")
    seeds = check_positive_int(seeds, "seeds")
    values = []
    for k in range(seeds):
        policy = q_learning_br(env, theta, budget, params, derive_seed(seed, "br-train", theta, k))
        mean, _ = estimate_utility(env, theta, policy, episodes, derive_seed(seed, "br-eval", theta, k))
        values.append(mean)
    values = np.array(values)
    stderr = float(values.std(ddof=1) / np.sqrt(seeds)) if seeds > 1 else 0.0
    return BrEstimate(theta, float(values.mean()), seeds, tuple(values.tolist()), stderr, "qlearning")
