"""CSV and ``.npz`` serialization for run outputs.

Floats are written with ``repr`` so reading a file back reproduces the
in-memory values bit for bit.
"""
import csv
import io

import numpy as np

from .upomdp import BetaParams, GridGoal, PolicyMixture, TabularPolicy

METRIC_COLUMNS = (
    "iteration", "objective", "lambda", "seed", "worst_case_feasible_reward", "worst_case_stderr",
    "argmin_theta", "exploitability", "n_protagonists", "n_thetas", "degenerate",
)
SIGMA_COLUMNS = ("iteration", "theta", "probability")


def format_theta(theta):
    """``row:col`` or ``alpha:beta`` text for a theta."""
    return ":".join(repr(v) if isinstance(v, float) else str(v) for v in theta)


def parse_theta(text):
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"cannot parse theta {text!r}")
    if all(p.lstrip("-").isdigit() for p in parts):
        return GridGoal(int(parts[0]), int(parts[1]))
    return BetaParams(float(parts[0]), float(parts[1]))


def _num(x):
    return repr(float(x))


def metrics_rows(metrics, lam, seed):
    for m in metrics:
        yield {
            "iteration": m.iteration,
            "objective": m.objective,
            "lambda": _num(lam),
            "seed": seed,
            "worst_case_feasible_reward": _num(m.worst_case_feasible_reward),
            "worst_case_stderr": _num(m.worst_case_stderr),
            "argmin_theta": format_theta(m.argmin_theta),
            "exploitability": _num(m.exploitability),
            "n_protagonists": m.n_protagonists,
            "n_thetas": m.n_thetas,
            "degenerate": int(m.degenerate),
        }


def _write(columns, rows):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def metrics_csv(metrics, lam, seed):
    return _write(METRIC_COLUMNS, metrics_rows(metrics, lam, seed))


def sigma_theta_csv(metrics):
    rows = (
        {"iteration": m.iteration, "theta": format_theta(th), "probability": _num(p)}
        for m in metrics
        for th, p in m.sigma_theta.items()
    )
    return _write(SIGMA_COLUMNS, rows)


def read_metrics_csv(text):
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append({
            "iteration": int(row["iteration"]),
            "objective": row["objective"],
            "lambda": float(row["lambda"]),
            "seed": int(row["seed"]),
            "worst_case_feasible_reward": float(row["worst_case_feasible_reward"]),
            "worst_case_stderr": float(row["worst_case_stderr"]),
            "argmin_theta": parse_theta(row["argmin_theta"]),
            "exploitability": float(row["exploitability"]),
            "n_protagonists": int(row["n_protagonists"]),
            "n_thetas": int(row["n_thetas"]),
            "degenerate": bool(int(row["degenerate"])),
        })
    return out


def read_sigma_theta_csv(text):
    out = {}
    for row in csv.DictReader(io.StringIO(text)):
        out.setdefault(int(row["iteration"]), {})[parse_theta(row["theta"])] = float(row["probability"])
    return out


def save_policy(path, policy):
    """Store a policy or mixture as ``.npz`` (member tables plus weights)."""
    members = policy.policies if isinstance(policy, PolicyMixture) else (policy,)
    weights = policy.weights if isinstance(policy, PolicyMixture) else np.ones(1)
    arrays = {f"table_{k}": p.table for k, p in enumerate(members)}
    arrays["time_indexed"] = np.array([p.time_indexed for p in members])
    arrays["weights"] = np.asarray(weights)
    with open(path, "wb") as fh:
        np.savez_compressed(fh, **arrays)


def load_policy(path):
    with np.load(path) as data:
        flags = data["time_indexed"]
        weights = data["weights"]
        members = [TabularPolicy(data[f"table_{k}"], bool(flags[k])) for k in range(len(flags))]
    if len(members) == 1:
        return members[0]
    return PolicyMixture(tuple(members), weights)
