"""scikit-learn style estimator facades over the solvers.

Each estimator stores its settings in ``__init__`` (so ``get_params`` and
``set_params`` work) and exposes fitted state through trailing-underscore
attributes.
"""
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .best_response import ThetaDistribution, q_learning_br, value_iteration_br_mixture
from .feasibility import build_feasible_set, worst_case_with_stderr
from .normform import MatrixGame, exploitability, farr_transform, fictitious_play, infeasible_columns
from .psro import PsroConfig, run_psro


class FictitiousPlaySolver(BaseEstimator):
    """Estimator wrapper around :func:`fictitious_play`.

    ``fit`` takes the protagonist payoff matrix and sets ``row_dist_``,
    ``col_dist_``, ``value_`` and ``exploitability_``.
    """

    def __init__(self, iterations=2000):
        self.iterations = iterations

    def fit(self, X, y=None):
        game = X if isinstance(X, MatrixGame) else MatrixGame(X)
        pair = fictitious_play(game, self.iterations)
        self.row_dist_ = pair.row_dist
        self.col_dist_ = pair.col_dist
        self.value_ = pair.game_value
        self.exploitability_ = exploitability(game, pair)
        return self

    def predict(self, X=None):
        """Most-played (protagonist, adversary) pure strategies."""
        check_is_fitted(self)
        return int(np.argmax(self.row_dist_)), int(np.argmax(self.col_dist_))


class FarrTransformer(TransformerMixin, BaseEstimator):
    """Penalize columns whose best-response value falls below ``lam``.

    ``fit(X, y)`` reads the column best-response values from ``y`` (the
    column maxima of ``X`` when omitted, i.e. pure-strategy best responses).
    """

    def __init__(self, lam=0.0, penalty_c=500.0):
        self.lam = lam
        self.penalty_c = penalty_c

    def fit(self, X, y=None):
        game = X if isinstance(X, MatrixGame) else MatrixGame(X)
        br = game.u.max(axis=0) if y is None else np.asarray(y, dtype=float)
        if br.shape != (game.cols,):
            raise ValueError(f"y must have length {game.cols}")
        self.br_values_ = br
        self.feasible_ = ~infeasible_columns(br, self.lam)
        self.n_features_in_ = game.cols
        return self

    def transform(self, X):
        check_is_fitted(self)
        game = X if isinstance(X, MatrixGame) else MatrixGame(X)
        out = farr_transform(game, self.br_values_, self.lam, self.penalty_c)
        return out if isinstance(X, MatrixGame) else np.array(out.u)


class BestResponseOracle(BaseEstimator):
    """Estimator facade: ``fit(env, thetas, weights)`` computes ``policy_`` and ``value_``.

    With ``method="exact"`` the response is exact (mixtures via
    :func:`value_iteration_br_mixture`); with ``"qlearning"`` thetas are
    resampled from the mixture every episode.
    """

    def __init__(self, method="exact", budget=None, params=None, seed=0):
        self.method = method
        self.budget = budget
        self.params = params
        self.seed = seed

    def fit(self, env, thetas, weights=None):
        dist = ThetaDistribution(thetas, weights)
        if self.method == "exact":
            self.policy_, self.value_ = value_iteration_br_mixture(env, dist.thetas, dist.weights)
        elif self.method == "qlearning":
            support = dist.support()
            target = support[0][0] if len(support) == 1 else dist
            self.policy_ = q_learning_br(env, target, self.budget, self.params, self.seed)
            self.value_ = None
        else:
            raise ValueError(f"unknown method {self.method!r}")
        return self

    def predict(self, obs, t=0):
        check_is_fitted(self)
        return self.policy_.greedy_actions(t)[obs]


class FeasibilityClassifier(ClassifierMixin, BaseEstimator):
    """``fit(thetas)`` estimates best-response values; ``predict`` flags feasibility."""

    def __init__(self, env=None, lam=0.0, br_method="exact", seeds=None, budget=None, params=None, seed=0, episodes=100, n_jobs=1):
        self.env = env
        self.lam = lam
        self.br_method = br_method
        self.seeds = seeds
        self.budget = budget
        self.params = params
        self.seed = seed
        self.episodes = episodes
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        self.feasible_set_ = build_feasible_set(
            self.env, self.lam, X, self.br_method, self.seeds, self.budget, self.params,
            self.seed, self.episodes, self.n_jobs,
        )
        self.classes_ = np.array([False, True])
        return self

    def predict(self, X):
        check_is_fitted(self)
        known = {r.theta: r.feasible for r in self.feasible_set_.records}
        missing = [th for th in X if th not in known]
        if missing:
            extra = build_feasible_set(
                self.env, self.lam, missing, self.br_method, self.seeds, self.budget,
                self.params, self.seed, self.episodes, self.n_jobs,
            )
            known.update({r.theta: r.feasible for r in extra.records})
        return np.array([known[th] for th in X], dtype=bool)


class PSRO(BaseEstimator):
    """Estimator facade over :func:`run_psro`.

    ``fit(env)`` sets ``result_``, ``policy_`` (the protagonist restricted
    mixture), ``metrics_`` and ``sigma_theta_``. ``score(env)`` is the
    worst-case feasible reward of ``policy_``.
    """

    def __init__(self, objective="farr", lam=-10.0, penalty_c=50.0, iterations=25, fp_iterations=2000,
                 br_method="exact", br_budget=None, seed=0):
        self.objective = objective
        self.lam = lam
        self.penalty_c = penalty_c
        self.iterations = iterations
        self.fp_iterations = fp_iterations
        self.br_method = br_method
        self.br_budget = br_budget
        self.seed = seed

    def _config(self):
        return PsroConfig(
            lam=self.lam, penalty_c=self.penalty_c, iterations=self.iterations,
            fp_iterations=self.fp_iterations, br_method=self.br_method, br_budget=self.br_budget,
        )

    def fit(self, env, y=None, feasible_set=None):
        self.result_ = run_psro(env, self.objective, self._config(), self.seed, feasible_set)
        self.policy_ = self.result_.policy
        self.metrics_ = self.result_.metrics
        self.sigma_theta_ = self.result_.final.sigma_theta()
        return self

    def score(self, env, y=None):
        check_is_fitted(self)
        value, _, _ = worst_case_with_stderr(self.policy_, self.result_.feasible_set, env)
        return value
