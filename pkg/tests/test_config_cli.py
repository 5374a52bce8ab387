import os
import time
from pathlib import Path

import numpy as np
import pytest

from farr._validation import ConfigError
from farr.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main, matrix_demo_report
from farr.config import SCHEMA, load_config, load_config_file
from farr.feasibility import FeasibleSet
from farr.results import (
    format_theta,
    load_policy,
    metrics_csv,
    parse_theta,
    read_metrics_csv,
    read_sigma_theta_csv,
    save_policy,
    sigma_theta_csv,
)
from farr.runner import lambda_dirname, run_experiment
from farr.upomdp import BetaParams, GridGoal, PolicyMixture, TabularPolicy

CONFIG_DIR = Path(__file__).resolve().parents[1] / "src" / "farr" / "configs"
FAST = "psro.iterations = 4\npsro.fp_iterations = 500\n"


def write_cfg(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# --- config parsing ------------------------------------------------------------------

def test_defaults_and_comments():
    cfg = load_config("# nothing but a comment\n\nexperiment.seeds = 3, 4  # trailing\n")
    assert cfg.seeds == (3, 4)
    assert cfg.objectives == ("farr", "minimax", "regret", "dr")
    assert cfg["psro.rollouts"] is None and cfg["evaluator.seeds"] is None


@pytest.mark.parametrize("text, path", [
    ("bogus.key = 1", "bogus.key"),
    ("experiment.seeds = one", "experiment.seeds"),
    ("experiment.seeds = ", "experiment.seeds"),
    ("experiment.lambdas = inf", "experiment.lambdas"),
    ("experiment.penalty_c = -100", "experiment.penalty_c"),
    ("experiment.objectives = farr, selfplay", "experiment.objectives"),
    ("env.name = mujoco", "env.name"),
    ("psro.iterations = 0", "psro.iterations"),
    ("psro.br_method = qlearning", "psro.br_budget"),
    ("evaluator.seeds = 0", "evaluator.seeds"),
    ("dr.method = qlearning", "dr.budget"),
    ("qlearning.time_indexed = maybe", "qlearning.time_indexed"),
    ("env.map = /nonexistent/map.txt", "env.map"),
    ("just some words", "<config>:1"),
])
def test_config_errors_name_the_key(text, path):
    with pytest.raises(ConfigError) as info:
        load_config(text)
    assert info.value.path == path


def test_penalty_relative_to_negative_max_return():
    assert load_config("experiment.penalty_c = 10")["experiment.penalty_c"] == 10.0
    with pytest.raises(ConfigError):
        load_config("experiment.penalty_c = -1")
    with pytest.raises(ConfigError):
        load_config("env.name = windywalk\nexperiment.penalty_c = 15")
    load_config("env.name = windywalk\nexperiment.penalty_c = 15.5")


def test_overrides_win_and_are_checked():
    cfg = load_config("experiment.seeds = 1", ["experiment.seeds=7,8"])
    assert cfg.seeds == (7, 8)
    with pytest.raises(ConfigError):
        load_config("", ["nokey=1"])
    with pytest.raises(ConfigError):
        load_config("", ["experiment.seeds"])


def test_snapshot_round_trip(tmp_path):
    cfg = load_config_file(str(CONFIG_DIR / "windywalk.cfg"))
    again = load_config(cfg.to_text())
    assert again.values == cfg.values
    assert again.to_text() == cfg.to_text()
    assert set(line.split(" = ")[0] for line in cfg.to_text().splitlines()) == set(SCHEMA)


def test_relative_map_path(tmp_path, lava_text):
    (tmp_path / "m.txt").write_text(lava_text)
    cfg = load_config_file(write_cfg(tmp_path, "env.map = m.txt\n"))
    assert cfg.make_env().grid.to_text().split() == lava_text.split()
    assert str(tmp_path / "m.txt") in cfg.to_text()


def test_shipped_configs_load():
    lava = load_config_file(str(CONFIG_DIR / "lavaworld.cfg"))
    windy = load_config_file(str(CONFIG_DIR / "windywalk.cfg"))
    assert lava.objectives == ("farr", "minimax", "regret", "dr")
    assert windy["evaluator.method"] == "qlearning" and windy["evaluator.seeds"] == 7
    assert windy.lambdas == (10.0,)


# --- serialization ----------------------------------------------------------------------

@pytest.mark.parametrize("theta", [GridGoal(0, 4), BetaParams(0.01, 10.0), BetaParams(1.0 / 3, 2.0)])
def test_theta_text_round_trip(theta):
    assert parse_theta(format_theta(theta)) == theta


def test_policy_npz_round_trip(tmp_path, rng):
    from farr.envs.lavaworld import LavaWorldEnv

    spec = LavaWorldEnv().spec
    a = TabularPolicy.random_deterministic(spec, rng, time_indexed=True)
    b = TabularPolicy.random_deterministic(spec, rng)
    mix = PolicyMixture((a, b), [1 / 3, 2 / 3])
    save_policy(tmp_path / "m.npz", mix)
    save_policy(tmp_path / "a.npz", a)
    back = load_policy(tmp_path / "m.npz")
    assert back.policies == mix.policies and np.array_equal(back.weights, mix.weights)
    assert load_policy(tmp_path / "a.npz") == a


def test_metrics_csv_reparses_bit_identical(lava_psro):
    for results in lava_psro.values():
        for seed, r in enumerate(results):
            rows = read_metrics_csv(metrics_csv(r.metrics, -10.0, seed))
            for m, row in zip(r.metrics, rows):
                assert row["worst_case_feasible_reward"] == m.worst_case_feasible_reward
                assert row["exploitability"] == m.exploitability
                assert row["argmin_theta"] == m.argmin_theta
                assert (row["n_protagonists"], row["n_thetas"]) == (m.n_protagonists, m.n_thetas)
            sig = read_sigma_theta_csv(sigma_theta_csv(r.metrics))
            assert [sig[m.iteration] for m in r.metrics] == [m.sigma_theta for m in r.metrics]


# --- CLI ---------------------------------------------------------------------------------

def test_matrix_demo_report():
    text = matrix_demo_report()
    assert "dont-grab=0.9995" in text
    assert "grab=1.0000" in text and "middle=1.0000" in text
    assert text.rstrip().endswith("True")


def test_matrix_demo_cli(capsys):
    assert main(["matrix-demo"]) == EXIT_OK
    assert "Theorem-1" in capsys.readouterr().out


def test_exit_codes(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG
    bad = write_cfg(tmp_path, "experiment.penalty_c = -100\n")
    assert main(["run", "--config", bad]) == EXIT_CONFIG
    good = write_cfg(tmp_path, "experiment.penalty_c = 10\n", "good.cfg")
    assert main(["feasible-set", "--config", good, "--lambda", "inf"]) == EXIT_CONFIG
    assert main(["eval", "--config", good, "--policy", str(tmp_path / "none.npz"),
                 "--feasible-set", str(tmp_path / "none.csv")]) == EXIT_RUNTIME
    err = capsys.readouterr().err
    assert "experiment.penalty_c" in err and "experiment.lambdas" in err


def test_feasible_set_cli_lava(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "")
    out = tmp_path / "out"
    assert main(["feasible-set", "--config", cfg, "--lambda", "-10", "--out", str(out)]) == EXIT_OK
    fs = FeasibleSet.from_csv((out / lambda_dirname(-10.0) / "feasible_set.csv").read_text())
    assert fs.counts() == {"feasible": 10, "infeasible": 14}
    assert "10 feasible, 14 infeasible" in capsys.readouterr().out


def test_feasible_set_cli_windy_exact(tmp_path):
    cfg = write_cfg(tmp_path, "env.name = windywalk\nexperiment.lambdas = 10\nexperiment.penalty_c = 100\n")
    assert main(["feasible-set", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    text = (tmp_path / lambda_dirname(10.0) / "feasible_set.csv").read_text()
    assert len(text.splitlines()) == 122
    assert text.splitlines()[0] == "alpha,beta,br_value,stderr,lambda,feasible"


def test_run_writes_layout_and_eval_reproduces(tmp_path, capsys):
    cfg = write_cfg(tmp_path, FAST + "experiment.seeds = 0, 1\n")
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == EXIT_OK
    lam_dir = out / lambda_dirname(-10.0)
    for obj in ("farr", "minimax", "regret", "dr"):
        for s in (0, 1):
            run = lam_dir / obj / f"seed_{s}"
            assert {p.name for p in run.iterdir()} == {"metrics.csv", "sigma_theta.csv", "policy.npz"}
    assert (out / "config.cfg").exists() and (out / "summary.csv").exists()
    capsys.readouterr()
    run = lam_dir / "farr" / "seed_1"
    assert main(["eval", "--config", str(out / "config.cfg"), "--seed", "1", "--policy", str(run / "policy.npz"),
                 "--feasible-set", str(lam_dir / "feasible_set.csv")]) == EXIT_OK
    printed = capsys.readouterr().out
    final = read_metrics_csv((run / "metrics.csv").read_text())[-1]
    assert f"worst_case_feasible_reward={final['worst_case_feasible_reward']!r}" in printed


def test_snapshot_rerun_reproduces_outputs(tmp_path):
    cfg = write_cfg(tmp_path, FAST)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", cfg, "--out", str(a)]) == EXIT_OK
    assert main(["run", "--config", str(a / "config.cfg"), "--out", str(b)]) == EXIT_OK
    assert csv_tree(a) == csv_tree(b)


def csv_tree(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*.csv"))}


def test_low_lambda_makes_farr_equal_minimax(tmp_path):
    cfg = load_config(FAST + "experiment.objectives = farr, minimax\nexperiment.seeds = 0, 1\n",
                      ["experiment.lambdas=-100"])
    _, outcomes = run_experiment(cfg)
    by = {(o.objective, o.seed): o for o in outcomes}
    for s in (0, 1):
        farr, mm = by["farr", s].metrics, by["minimax", s].metrics
        strip = lambda ms: [{k: v for k, v in vars(m).items() if k != "objective"} for m in ms]
        assert strip(farr) == strip(mm)


def test_lava_run_ordering(tmp_path):
    cfg = load_config_file(str(CONFIG_DIR / "lavaworld.cfg"), ["experiment.seeds=0"])
    _, outcomes = run_experiment(cfg)
    final = {o.objective: o.final.worst_case_feasible_reward for o in outcomes}
    assert final["farr"] > max(v for k, v in final.items() if k != "farr")


def test_matrix_demo_speed():
    start = time.perf_counter()
    matrix_demo_report()
    assert time.perf_counter() - start < 1.0


def test_console_script_declared():
    text = (Path(__file__).resolve().parents[1] / "pyproject.toml").read_text()
    assert 'farr = "farr.cli:main"' in text
    assert os.path.exists(CONFIG_DIR / "lavaworld.cfg")
