import sys
import numpy as np
import pytest

from farr.envs.lavaworld import DEFAULT_MAP_PATH, LavaWorldEnv
from farr.envs.windywalk import WindyWalkEnv


@pytest.fixture(scope="session")
def lava_text():
    return DEFAULT_MAP_PATH.read_text()


@pytest.fixture
def lava_env():
    return LavaWorldEnv()


@pytest.fixture
def windy_env():
    return WindyWalkEnv()


@pytest.fixture(scope="session")
def lava_vstar(lava_text):
    from oracles import lava_vstar

    return lava_vstar(lava_text)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


LAVA_SEEDS = (0, 1, 2)


@pytest.fixture(scope="session")
def lava_feasible_set():
    from farr.feasibility import build_feasible_set

    return build_feasible_set(LavaWorldEnv(), -10.0)


@pytest.fixture(scope="session")
def lava_psro(lava_feasible_set):
    """``{objective: [PsroResult per seed]}`` with default settings (25 iterations, exact BR)."""
    from farr.psro import PsroConfig, br_cache_from_feasible_set, run_psro

    env, config = LavaWorldEnv(), PsroConfig()
    cache = br_cache_from_feasible_set(lava_feasible_set)
    return {
        obj: [run_psro(env, obj, config, s, lava_feasible_set, dict(cache)) for s in LAVA_SEEDS]
        for obj in ("farr", "minimax", "regret")
    }


def pytest_terminal_summary(terminalreporter):
    module = next((m for name, m in list(sys.modules.items()) if name.endswith("test_acceptance")), None)
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
