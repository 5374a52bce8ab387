"""Population-based training for the FARR, minimax and regret games.

Each iteration solves the restricted game over the current populations with
fictitious play, adds a protagonist best response to the adversary's
restricted mixture, adds fresh adversary parameters, and fills the new
payoff cells. Domain randomization is a single best response to the uniform
parameter distribution.
"""
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import derive_seed, make_rng
from .best_response import (
    BrEstimate,
    IntractableBeliefError,
    ThetaDistribution,
    estimate_br_value,
    q_learning_br,
    value_iteration_br_mixture,
)
from .feasibility import DEFAULT_QLEARNING_SEEDS, build_feasible_set, farr_utility, worst_case_with_stderr
from .normform import MatrixGame, MixedPair, exploitability, fictitious_play
from .upomdp import PolicyMixture, TabularPolicy, estimate_utility

logger = logging.getLogger(__name__)

OBJECTIVES = ("farr", "minimax", "regret")
BR_METHODS = ("exact", "qlearning")


@dataclass(frozen=True)
class PsroConfig:
    """Solver settings.

    ``rollouts=None`` means one rollout per payoff cell on deterministic
    environments and 100 otherwise. ``evaluator_*`` fields control the
    per-theta best-response estimates used by the feasibility test and the
    regret objective.
    """

    lam: float = -10.0
    penalty_c: float = 50.0
    iterations: int = 25
    fp_iterations: int = 2000
    rollouts: int = None
    initial_thetas: int = 3
    thetas_per_iteration: int = 3
    br_method: str = "exact"
    br_budget: int = None
    q_params: object = None
    evaluator_method: str = "exact"
    evaluator_seeds: int = None
    evaluator_budget: int = None
    eval_episodes: int = 100

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise ValueError(f"lam must be finite, got {self.lam}")
        if not math.isfinite(self.penalty_c):
            raise ValueError(f"penalty_c must be finite, got {self.penalty_c}")
        for name in ("iterations", "fp_iterations", "initial_thetas", "eval_episodes"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if int(self.thetas_per_iteration) != self.thetas_per_iteration or self.thetas_per_iteration < 0:
            raise ValueError(f"thetas_per_iteration must be >= 0, got {self.thetas_per_iteration!r}")
        if self.rollouts is not None and (int(self.rollouts) != self.rollouts or self.rollouts < 1):
            raise ValueError(f"rollouts must be a positive integer, got {self.rollouts!r}")
        for name in ("br_method", "evaluator_method"):
            if getattr(self, name) not in BR_METHODS:
                raise ValueError(f"{name} must be one of {BR_METHODS}, got {getattr(self, name)!r}")
        if self.br_method == "qlearning" and not self.br_budget:
            raise ValueError("br_budget is required when br_method is 'qlearning'")
        if self.evaluator_method == "qlearning" and not self.evaluator_budget:
            raise ValueError("evaluator_budget is required when evaluator_method is 'qlearning'")

    def rollouts_for(self, env):
        if self.rollouts is not None:
            return int(self.rollouts)
        return 1 if env.deterministic else 100

    def check_penalty(self, env):
        if not self.penalty_c > env.max_return:
            raise ValueError(
                f"penalty_c={self.penalty_c} must exceed the largest achievable return {env.max_return}"
            )


def objective_value(objective, utility, theta, br_cache, lam, penalty_c):
    """Map a raw protagonist utility to the payoff of ``objective``."""
    if objective == "minimax":
        return float(utility)
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}")
    if theta not in br_cache:
        raise KeyError(f"no best-response estimate cached for theta {theta!r}")
    br = br_cache[theta].value
    if objective == "farr":
        return float(farr_utility(utility, br, lam, penalty_c))
    return float(utility - br)


def payoff_entry(env, objective, policy, theta, br_cache, lam, penalty_c, rollouts, seed):
    """One restricted-game payoff: the objective applied to a utility estimate."""
    if objective != "minimax" and theta not in br_cache:
        raise KeyError(f"no best-response estimate cached for theta {theta!r}")
    utility, _ = estimate_utility(env, theta, policy, rollouts, seed)
    return objective_value(objective, utility, theta, br_cache, lam, penalty_c)


@dataclass(frozen=True, eq=False)
class PayoffTable:
    """Raw utility estimates with per-cell rollout count and seed."""

    utility: np.ndarray
    stderr: np.ndarray
    rollouts: np.ndarray
    seeds: np.ndarray

    @classmethod
    def empty(cls):
        z = np.zeros((0, 0))
        return cls(z, z.copy(), np.zeros((0, 0), dtype=np.int64), np.zeros((0, 0), dtype=np.int64))

    @property
    def shape(self):
        return self.utility.shape

    def filled(self):
        return not np.isnan(self.utility).any()

    def grow(self, n_rows, n_cols):
        r, c = self.shape
        out = []
        for arr, fill in ((self.utility, np.nan), (self.stderr, np.nan), (self.rollouts, 0), (self.seeds, 0)):
            new = np.full((n_rows, n_cols), fill, dtype=arr.dtype)
            new[:r, :c] = arr
            out.append(new)
        return PayoffTable(*out)

    def objective_matrix(self, objective, thetas, br_cache, lam, penalty_c):
        if not self.filled():
            raise ValueError("payoff table has missing cells")
        m = np.empty(self.shape)
        for j, th in enumerate(thetas):
            for i in range(self.shape[0]):
                m[i, j] = objective_value(objective, self.utility[i, j], th, br_cache, lam, penalty_c)
        return m


@dataclass(frozen=True, eq=False)
class PsroState:
    objective: str
    protagonists: tuple
    thetas: tuple
    payoff: PayoffTable
    br_cache: dict
    restricted_ne: MixedPair
    iteration: int = 0
    exhausted: bool = False
    converged: bool = False
    degenerate: bool = False
    config: PsroConfig = field(default_factory=PsroConfig)

    def __post_init__(self):
        if self.payoff.shape != (len(self.protagonists), len(self.thetas)):
            raise ValueError("payoff table does not match population sizes")
        ne = self.restricted_ne
        if ne is not None and (ne.row_dist.shape[0], ne.col_dist.shape[0]) != self.payoff.shape:
            raise ValueError("restricted equilibrium does not match population sizes")
        if self.objective in ("farr", "regret") and any(th not in self.br_cache for th in self.thetas):
            raise ValueError("best-response cache must cover every adversary theta")

    def game(self):
        c = self.config
        return MatrixGame(self.payoff.objective_matrix(self.objective, self.thetas, self.br_cache, c.lam, c.penalty_c))

    def protagonist_mixture(self):
        return PolicyMixture(self.protagonists, self.restricted_ne.row_dist)

    def sigma_theta(self):
        return dict(zip(self.thetas, self.restricted_ne.col_dist.tolist()))

    def exploitability(self):
        return exploitability(self.game(), self.restricted_ne)


def _evaluator_seeds(config):
    if config.evaluator_method == "exact":
        return 1
    return config.evaluator_seeds or DEFAULT_QLEARNING_SEEDS


def _ensure_br(env, thetas, br_cache, config):
    # Same base seed as the feasible-set builder, so cached and fresh estimates agree.
    for th in thetas:
        if th not in br_cache:
            br_cache[th] = estimate_br_value(
                env, th, config.evaluator_method, _evaluator_seeds(config), config.evaluator_budget,
                config.q_params, derive_seed(0, "feasibility"), config.eval_episodes,
            )


def _cell_seed(seed, i, theta):
    return derive_seed(seed, "payoff", i, theta)


def _fill(env, table, protagonists, thetas, config, seed):
    n = config.rollouts_for(env)
    table = table.grow(len(protagonists), len(thetas))
    for i, policy in enumerate(protagonists):
        for j, th in enumerate(thetas):
            if not np.isnan(table.utility[i, j]):
                continue
            s = _cell_seed(seed, i, th)
            table.utility[i, j], table.stderr[i, j] = estimate_utility(env, th, policy, n, s)
            table.rollouts[i, j], table.seeds[i, j] = n, s
    return table


def _solve_restricted(state):
    c = state.config
    if state.objective == "farr" and all(state.br_cache[th].value < c.lam for th in state.thetas):
        logger.warning("every adversary theta is infeasible; restricted game is constant, using tie-break")
        row = np.zeros(len(state.protagonists))
        row[-1] = 1.0
        col = np.full(len(state.thetas), 1.0 / len(state.thetas))
        return replace(state, restricted_ne=MixedPair(row, col, float(c.penalty_c)), degenerate=True)
    ne = fictitious_play(state.game(), c.fp_iterations)
    return replace(state, restricted_ne=ne, degenerate=False)


def _sample_new_thetas(env, current, k, rng):
    taken = set(current)
    unused = [th for th in env.thetas() if th not in taken]
    if not unused or k == 0:
        return [], not unused
    picks = rng.choice(len(unused), size=min(k, len(unused)), replace=False)
    chosen = [unused[i] for i in picks]
    return chosen, len(unused) == len(chosen)


def init_state(env, objective, config, seed=0, br_cache=None):
    """Initial populations: one random deterministic policy and uniformly sampled thetas."""
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    config.check_penalty(env)
    br_cache = {} if br_cache is None else br_cache
    rng = make_rng(seed, "psro-init")
    policy = TabularPolicy.random_deterministic(env.spec, rng)
    thetas, exhausted = _sample_new_thetas(env, [], config.initial_thetas, rng)
    if objective in ("farr", "regret"):
        _ensure_br(env, thetas, br_cache, config)
    table = _fill(env, PayoffTable.empty(), [policy], thetas, config, seed)
    state = PsroState(objective, (policy,), tuple(thetas), table, br_cache, None, 0, exhausted, config=config)
    return _solve_restricted(state)


def protagonist_best_response(env, thetas, weights, config, seed):
    dist = ThetaDistribution(thetas, weights)
    support = dist.support()
    if config.br_method == "exact":
        policy, _ = value_iteration_br_mixture(env, dist.thetas, dist.weights)
        return policy
    target = support[0][0] if len(support) == 1 else dist
    return q_learning_br(env, target, config.br_budget, config.q_params, seed)


def psro_iterate(state, env, seed=0):
    """One population-growth step; returns a new state (the input is untouched)."""
    c = state.config
    it = state.iteration
    policy = protagonist_best_response(
        env, state.thetas, state.restricted_ne.col_dist, c, derive_seed(seed, "protagonist-br", it)
    )
    novel = not any(policy == p for p in state.protagonists)
    new_thetas, exhausted = [], state.exhausted
    if not exhausted:
        new_thetas, exhausted = _sample_new_thetas(env, state.thetas, c.thetas_per_iteration, make_rng(seed, "psro-adversary", it))
    if not novel and not new_thetas:
        return replace(state, iteration=it + 1, exhausted=exhausted, converged=True)
    protagonists = state.protagonists + ((policy,) if novel else ())
    thetas = state.thetas + tuple(new_thetas)
    if state.objective in ("farr", "regret"):
        _ensure_br(env, new_thetas, state.br_cache, c)
    table = _fill(env, state.payoff, protagonists, thetas, c, seed)
    new = PsroState(
        state.objective, protagonists, thetas, table, state.br_cache, None, it + 1, exhausted, config=c
    )
    return _solve_restricted(new)


@dataclass(frozen=True)
class IterationMetrics:
    iteration: int
    objective: str
    worst_case_feasible_reward: float
    worst_case_stderr: float
    argmin_theta: object
    exploitability: float
    n_protagonists: int
    n_thetas: int
    sigma_theta: dict
    degenerate: bool = False


@dataclass(frozen=True, eq=False)
class PsroResult:
    states: tuple
    metrics: tuple
    feasible_set: object

    @property
    def final(self):
        return self.states[-1]

    @property
    def policy(self):
        return self.final.protagonist_mixture()


def evaluation_seed(seed):
    return derive_seed(seed, "evaluation")


def _metrics(state, env, feasible_set, seed):
    value, theta, se = worst_case_with_stderr(
        state.protagonist_mixture(), feasible_set, env, state.config.eval_episodes, evaluation_seed(seed)
    )
    return IterationMetrics(
        state.iteration, state.objective, float(value), float(se), theta, float(state.exploitability()),
        len(state.protagonists), len(state.thetas), state.sigma_theta(), state.degenerate,
    )


def br_cache_from_feasible_set(feasible_set):
    return {
        r.theta: BrEstimate(r.theta, r.br_value, 1, (r.br_value,), r.stderr, "cached")
        for r in feasible_set.records
    }


def evaluation_feasible_set(env, config, seed=0, n_jobs=1):
    return build_feasible_set(
        env, config.lam, None, config.evaluator_method,
        config.evaluator_seeds, config.evaluator_budget, config.q_params, 0, config.eval_episodes, n_jobs,
    )


def run_psro(env, objective, config, seed=0, feasible_set=None, br_cache=None):
    """Iterate until the iteration cap or until nothing novel can be added.

    ``feasible_set`` is the evaluation set for the worst-case metric; it is
    estimated from ``config`` when omitted and also seeds the best-response
    cache. Returns every intermediate state with its metrics.
    """
    if feasible_set is None:
        feasible_set = evaluation_feasible_set(env, config, seed)
    if br_cache is None:
        br_cache = br_cache_from_feasible_set(feasible_set)
    state = init_state(env, objective, config, seed, br_cache)
    states, metrics = [state], [_metrics(state, env, feasible_set, seed)]
    while state.iteration < config.iterations:
        state = psro_iterate(state, env, seed)
        states.append(state)
        metrics.append(_metrics(state, env, feasible_set, seed))
        if state.converged:
            break
    return PsroResult(tuple(states), tuple(metrics), feasible_set)


def domain_randomization_train(env, theta_space=None, method="exact", budget=None, params=None, seed=0):
    """Single best response to the uniform distribution over ``theta_space``.

    ``method="exact"`` falls back to Q-learning (which then needs ``budget``)
    when no exact mixture solver exists for the environment.
    """
    thetas = env.thetas() if theta_space is None else list(theta_space)
    if not thetas:
        raise ValueError("theta space is empty")
    dist = ThetaDistribution(thetas)
    if method == "exact":
        try:
            return value_iteration_br_mixture(env, dist.thetas, dist.weights)[0]
        except IntractableBeliefError:
            if not budget:
                raise
    elif method != "qlearning":
        raise ValueError(f"unknown method {method!r}")
    target = dist.thetas[0] if len(dist.thetas) == 1 else dist
    return q_learning_br(env, target, budget, params, derive_seed(seed, "domain-randomization"))


def dr_metrics(policy, env, feasible_set, config, seed=0):
    value, theta, se = worst_case_with_stderr(policy, feasible_set, env, config.eval_episodes, evaluation_seed(seed))
    return IterationMetrics(0, "dr", float(value), float(se), theta, float("nan"), 1, len(env.thetas()), {})
