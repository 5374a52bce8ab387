"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""
import argparse
import os
import sys

import numpy as np

from ._validation import ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _format_dist(labels, dist):
    return ", ".join(f"{lab}={p:.4f}" for lab, p in zip(labels, dist))


def matrix_demo_report(iterations=2000):
    from .envs.cabinet import LAMBDA, PENALTY_C, cabinet_br_values, canonical_cabinet_game
    from .normform import exploitability, farr_transform, fictitious_play, format_matrix_text, iesds_reduce, verify_theorem1

    game = canonical_cabinet_game()
    br = cabinet_br_values(game)
    farr_game = farr_transform(game, br, LAMBDA, PENALTY_C)
    lines = []
    for title, g in (("original game", game), (f"FARR game (lambda={LAMBDA}, C={PENALTY_C})", farr_game)):
        ne = fictitious_play(g, iterations)
        rows = [g.row_label(i) for i in range(g.rows)]
        cols = [g.col_label(j) for j in range(g.cols)]
        reduced, removed_rows, removed_cols = iesds_reduce(g)
        lines += [
            f"== {title} ==",
            format_matrix_text(g).rstrip(),
            f"protagonist: {_format_dist(rows, ne.row_dist)}",
            f"adversary:   {_format_dist(cols, ne.col_dist)}",
            f"value: {ne.game_value:.4f}  exploitability: {exploitability(g, ne):.4f}  ({iterations} FP iterations)",
            f"IESDS removes rows {[rows[i] for i in removed_rows]} and columns {[cols[j] for j in removed_cols]}; "
            f"{reduced.rows}x{reduced.cols} remains",
            "",
        ]
    lines.append(f"best-response values per column: {np.array2string(br)}")
    lines.append(f"Theorem-1 check (infeasible columns unused, feasible-game NE recovered): {verify_theorem1(game, br, LAMBDA, PENALTY_C)}")
    return "\n".join(lines)


def _load(args):
    from .config import load_config_file

    overrides = list(args.set or ())
    if getattr(args, "seed", None) is not None:
        overrides.append(f"experiment.seeds={args.seed}")
    if getattr(args, "out", None):
        overrides.append(f"experiment.out={args.out}")
    return load_config_file(args.config, overrides)


def cmd_run(args):
    from .runner import run_experiment, write_outputs

    cfg = _load(args)
    sets, outcomes = run_experiment(cfg, args.jobs)
    out = cfg["experiment.out"]
    write_outputs(out, cfg, sets, outcomes)
    for o in outcomes:
        f = o.final
        print(f"lambda={o.lam} {o.objective:8s} seed={o.seed}: worst-case feasible reward "
              f"{f.worst_case_feasible_reward:.3f} (argmin {tuple(f.argmin_theta)})")
    print(f"outputs written to {out}")
    return EXIT_OK


def cmd_feasible_set(args):
    from .runner import feasible_sets, lambda_dirname

    if args.lam is not None:
        args.set = list(args.set or ()) + [f"experiment.lambdas={args.lam}"]
    cfg = _load(args)
    sets = feasible_sets(cfg, cfg.make_env(), args.jobs or cfg["experiment.n_jobs"])
    out = cfg["experiment.out"]
    for lam, fs in sets.items():
        lam_dir = os.path.join(out, lambda_dirname(lam))
        os.makedirs(lam_dir, exist_ok=True)
        path = os.path.join(lam_dir, "feasible_set.csv")
        with open(path, "w", newline="") as fh:
            fh.write(fs.to_csv())
        c = fs.counts()
        print(f"lambda={lam}: {c['feasible']} feasible, {c['infeasible']} infeasible -> {path}")
    return EXIT_OK


def cmd_matrix_demo(args):
    print(matrix_demo_report(args.iterations))
    return EXIT_OK


def cmd_eval(args):
    from .feasibility import FeasibleSet, worst_case_with_stderr
    from .results import format_theta, load_policy

    cfg = _load(args)
    env = cfg.make_env()
    with open(args.feasible_set) as fh:
        fs = FeasibleSet.from_csv(fh.read())
    policy = load_policy(args.policy)
    seed = cfg.seeds[0]
    value, theta, se = worst_case_with_stderr(policy, fs, env, cfg["evaluator.episodes"], seed)
    print(f"worst_case_feasible_reward={value!r} stderr={se!r} argmin_theta={format_theta(theta)}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="farr", description="Feasible adversarial robust RL experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", required=needs_config, help="key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
        p.add_argument("--seed", type=int, help="run a single seed instead of experiment.seeds")
        p.add_argument("--out", help="output directory (overrides experiment.out)")

    p = sub.add_parser("run", help="run every (objective, lambda, seed) job and write CSVs")
    common(p)
    p.add_argument("--jobs", type=int, default=None, help="parallel workers (default: experiment.n_jobs)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("feasible-set", help="estimate and write the feasible set")
    common(p)
    p.add_argument("--lambda", dest="lam", type=float, help="threshold (overrides experiment.lambdas)")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_feasible_set)

    p = sub.add_parser("matrix-demo", help="cabinet matrix game report")
    p.add_argument("--iterations", type=int, default=2000)
    p.set_defaults(func=cmd_matrix_demo)

    p = sub.add_parser("eval", help="score a saved policy against a saved feasible set")
    common(p)
    p.add_argument("--policy", required=True, help="policy .npz written by 'run'")
    p.add_argument("--feasible-set", required=True, help="feasible_set.csv")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
