"""Feasible parameter sets, the penalized utility, and worst-case evaluation."""
import csv
import io
import math
from dataclasses import dataclass, field

from joblib import Parallel, delayed

from ._rng import derive_seed
from .best_response import estimate_br_value
from .upomdp import BetaParams, GridGoal, expected_utility

DEFAULT_QLEARNING_SEEDS = 7


def farr_utility(u_p, br_value, lam, penalty_c):
    """``penalty_c`` when the theta is infeasible (``br_value < lam``), else ``u_p``."""
    return penalty_c if br_value < lam else u_p


@dataclass(frozen=True)
class FeasibilityRecord:
    theta: object
    br_value: float
    lam: float
    feasible: bool
    stderr: float = 0.0

    def __post_init__(self):
        if self.feasible != (self.br_value >= self.lam):
            raise ValueError(f"feasible flag disagrees with br_value >= lambda for {self.theta}")


@dataclass(frozen=True)
class FeasibleSet:
    lam: float
    records: tuple = field(default_factory=tuple)

    def __post_init__(self):
        records = tuple(self.records)
        if any(r.lam != self.lam for r in records):
            raise ValueError("every record must share the set's lambda")
        thetas = [r.theta for r in records]
        if len(set(thetas)) != len(thetas):
            raise ValueError("thetas in a feasible set must be distinct")
        object.__setattr__(self, "records", records)

    @classmethod
    def from_estimates(cls, estimates, lam):
        lam = float(lam)
        return cls(
            lam,
            tuple(
                FeasibilityRecord(e.theta, e.value, lam, bool(e.value >= lam), e.stderr)
                for e in estimates
            ),
        )

    def with_lambda(self, lam):
        lam = float(lam)
        return FeasibleSet(
            lam,
            tuple(FeasibilityRecord(r.theta, r.br_value, lam, bool(r.br_value >= lam), r.stderr) for r in self.records),
        )

    @property
    def thetas(self):
        return [r.theta for r in self.records]

    @property
    def feasible_thetas(self):
        return [r.theta for r in self.records if r.feasible]

    @property
    def infeasible_thetas(self):
        return [r.theta for r in self.records if not r.feasible]

    def br_values(self):
        return {r.theta: r.br_value for r in self.records}

    def __contains__(self, theta):
        return any(r.theta == theta and r.feasible for r in self.records)

    def counts(self):
        n = sum(r.feasible for r in self.records)
        return {"feasible": n, "infeasible": len(self.records) - n}

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        theta_cols = list(self.records[0].theta._fields) if self.records else []
        writer.writerow(theta_cols + ["br_value", "stderr", "lambda", "feasible"])
        for r in self.records:
            writer.writerow(
                [repr(v) if isinstance(v, float) else v for v in r.theta]
                + [repr(float(r.br_value)), repr(float(r.stderr)), repr(float(r.lam)), int(r.feasible)]
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError("feasible-set CSV has no records")
        lam = float(rows[0]["lambda"])
        records = []
        for row in rows:
            if "row" in row:
                theta = GridGoal(int(row["row"]), int(row["col"]))
            else:
                theta = BetaParams(float(row["alpha"]), float(row["beta"]))
            records.append(
                FeasibilityRecord(theta, float(row["br_value"]), float(row["lambda"]), bool(int(row["feasible"])), float(row["stderr"]))
            )
        return cls(lam, tuple(records))


def estimate_br_table(env, thetas, method="exact", seeds=None, budget=None, params=None, seed=0, episodes=100, n_jobs=1):
    """Best-response estimates for every theta, in input order."""
    if method == "qlearning" and seeds is None:
        seeds = DEFAULT_QLEARNING_SEEDS
    seeds = 1 if method == "exact" else seeds
    jobs = (
        delayed(estimate_br_value)(env, th, method, seeds, budget, params, derive_seed(seed, "feasibility"), episodes)
        for th in thetas
    )
    return Parallel(n_jobs=n_jobs)(jobs)


def build_feasible_set(env, lam, theta_grid=None, br_method="exact", seeds=None, budget=None, params=None, seed=0, episodes=100, n_jobs=1):
    """Estimate the best-response value on every grid theta and threshold at ``lam``."""
    if not math.isfinite(lam):
        raise ValueError(f"lambda must be finite, got {lam}")
    thetas = env.thetas() if theta_grid is None else list(theta_grid)
    if not thetas:
        raise ValueError("theta grid is empty")
    estimates = estimate_br_table(env, thetas, br_method, seeds, budget, params, seed, episodes, n_jobs)
    return FeasibleSet.from_estimates(estimates, lam)


def evaluate_on_thetas(policy, thetas, env, episodes=100, seed=0):
    """``{theta: (mean, stderr)}`` with a per-theta derived evaluation seed."""
    return {th: expected_utility(env, th, policy, episodes, derive_seed(seed, "evaluate", th)) for th in thetas}


def worst_case_feasible_reward(policy, feasible_set, env, episodes=100, seed=0):
    """Minimum mean return over the feasible thetas and the theta attaining it.

    Mixed strategies sample a member per episode; on deterministic
    environments the mixture expectation is computed exactly.
    """
    value, theta, _ = worst_case_with_stderr(policy, feasible_set, env, episodes, seed)
    return value, theta


def worst_case_with_stderr(policy, feasible_set, env, episodes=100, seed=0):
    thetas = feasible_set.feasible_thetas
    if not thetas:
        raise ValueError("feasible set is empty; worst-case feasible reward is undefined")
    results = evaluate_on_thetas(policy, thetas, env, episodes, seed)
    theta = min(thetas, key=lambda th: results[th][0])
    return results[theta][0], theta, results[theta][1]
