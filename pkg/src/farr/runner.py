"""Experiment orchestration over the (objective, lambda, seed) grid."""
import csv
import io
import os
from dataclasses import dataclass

from joblib import Parallel, delayed

from .feasibility import build_feasible_set
from .psro import br_cache_from_feasible_set, domain_randomization_train, dr_metrics, run_psro
from .results import format_theta, metrics_csv, save_policy, sigma_theta_csv

SUMMARY_COLUMNS = ("lambda", "objective", "seed", "iterations", "worst_case_feasible_reward", "worst_case_stderr", "argmin_theta")


@dataclass(frozen=True)
class RunOutcome:
    lam: float
    objective: str
    seed: int
    metrics: tuple
    policy: object

    @property
    def final(self):
        return self.metrics[-1]


def lambda_dirname(lam):
    return f"lambda_{lam!r}"


def feasible_sets(cfg, env, n_jobs=1):
    """One feasible set per configured lambda; best responses are estimated once."""
    pc = cfg.psro_config(cfg.lambdas[0])
    base = build_feasible_set(
        env, cfg.lambdas[0], None, pc.evaluator_method, pc.evaluator_seeds, pc.evaluator_budget,
        pc.q_params, 0, pc.eval_episodes, n_jobs,
    )
    return {lam: base.with_lambda(lam) for lam in cfg.lambdas}


def _psro_job(env, objective, pcfg, seed, fs):
    result = run_psro(env, objective, pcfg, seed, fs, br_cache_from_feasible_set(fs))
    return result.metrics, result.policy


def _dr_policy(cfg, env, seed):
    return domain_randomization_train(env, None, cfg["dr.method"], cfg["dr.budget"], cfg.q_params(), seed)


def run_experiment(cfg, n_jobs=None):
    """Run every configured job; returns the feasible sets and outcomes in grid order."""
    n_jobs = cfg["experiment.n_jobs"] if n_jobs is None else n_jobs
    env = cfg.make_env()
    sets = feasible_sets(cfg, env, n_jobs)
    psro_objectives = [o for o in cfg.objectives if o != "dr"]
    grid = [(lam, obj, seed) for lam in cfg.lambdas for obj in psro_objectives for seed in cfg.seeds]
    results = Parallel(n_jobs=n_jobs)(
        delayed(_psro_job)(env, obj, cfg.psro_config(lam), seed, sets[lam]) for lam, obj, seed in grid
    )
    outcomes = [RunOutcome(lam, obj, seed, tuple(m), p) for (lam, obj, seed), (m, p) in zip(grid, results)]
    if "dr" in cfg.objectives:
        # Domain randomization does not depend on lambda: train once per seed.
        policies = Parallel(n_jobs=n_jobs)(delayed(_dr_policy)(cfg, env, seed) for seed in cfg.seeds)
        for lam in cfg.lambdas:
            for seed, policy in zip(cfg.seeds, policies):
                m = dr_metrics(policy, env, sets[lam], cfg.psro_config(lam), seed)
                outcomes.append(RunOutcome(lam, "dr", seed, (m,), policy))
    return sets, outcomes


def summary_csv(outcomes):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for o in outcomes:
        f = o.final
        writer.writerow([
            repr(float(o.lam)), o.objective, o.seed, f.iteration, repr(f.worst_case_feasible_reward),
            repr(f.worst_case_stderr), format_theta(f.argmin_theta),
        ])
    return buf.getvalue()


def _write_text(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def write_outputs(out_dir, cfg, sets, outcomes):
    """Layout: ``config.cfg``, ``summary.csv`` and per lambda
    ``feasible_set.csv`` plus ``<objective>/seed_<s>/{metrics,sigma_theta}.csv``
    and ``policy.npz``."""
    os.makedirs(out_dir, exist_ok=True)
    _write_text(os.path.join(out_dir, "config.cfg"), cfg.to_text())
    for lam, fs in sets.items():
        lam_dir = os.path.join(out_dir, lambda_dirname(lam))
        os.makedirs(lam_dir, exist_ok=True)
        _write_text(os.path.join(lam_dir, "feasible_set.csv"), fs.to_csv())
    for o in outcomes:
        run_dir = os.path.join(out_dir, lambda_dirname(o.lam), o.objective, f"seed_{o.seed}")
        os.makedirs(run_dir, exist_ok=True)
        _write_text(os.path.join(run_dir, "metrics.csv"), metrics_csv(o.metrics, o.lam, o.seed))
        _write_text(os.path.join(run_dir, "sigma_theta.csv"), sigma_theta_csv(o.metrics))
        save_policy(os.path.join(run_dir, "policy.npz"), o.policy)
    _write_text(os.path.join(out_dir, "summary.csv"), summary_csv(outcomes))
