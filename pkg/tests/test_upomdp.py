import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from farr._rng import derive_seed, make_rng
from farr.envs.lavaworld import LavaWorldEnv
from farr.envs.windywalk import WindyWalkEnv
from farr.upomdp import (
    BetaParams,
    GridGoal,
    PolicyMixture,
    TabularPolicy,
    UpomdpSpec,
    check_beta_params,
    estimate_utility,
    expected_utility,
    rollout,
)
from oracles import windy_always_right

RIGHT, LEFT = 1, 3


def const_policy(env, action):
    return TabularPolicy.from_actions(np.full(env.spec.observation_count, action), env.spec.action_count)


def return_bounds(env):
    lo, hi = env.spec.reward_range
    H = env.spec.horizon
    return min(lo, H * lo), max(hi, H * hi)


def test_derive_seed_is_label_sensitive_and_stable():
    assert derive_seed(1, "a") == derive_seed(1, "a")
    assert derive_seed(1, "a") != derive_seed(1, "b")
    assert derive_seed(1, "a") != derive_seed(2, "a")
    assert 0 <= derive_seed(7, "x", 3) < 2**63
    assert make_rng(3, "s").random() == make_rng(3, "s").random()


@pytest.mark.parametrize("theta", [BetaParams(0.0, 1.0), BetaParams(1.0, 10.5), BetaParams(-1, 2)])
def test_beta_params_domain(theta):
    with pytest.raises(ValueError):
        check_beta_params(theta)


def test_spec_invariants():
    with pytest.raises(ValueError):
        UpomdpSpec(2, 2, 0, 1.0, ())
    with pytest.raises(ValueError):
        UpomdpSpec(2, 2, 5, 1.5, ())


def test_policy_table_validation():
    with pytest.raises(ValueError):
        TabularPolicy(np.ones((3, 2)))
    with pytest.raises(ValueError):
        TabularPolicy(np.full((3, 2), 0.5), time_indexed=True)
    p = TabularPolicy(np.full((3, 2), 0.5))
    assert not p.deterministic


def test_rollout_goal_one_step_right_of_lava():
    env = LavaWorldEnv()
    # Start (1, 4); (2, 4) is floor one step down.
    down = const_policy(env, 2)
    assert rollout(env, GridGoal(2, 4), down, seed=9).return_value == -1.0


def test_rollout_immediate_lava_jump():
    env = LavaWorldEnv()
    # (1, 3) is lava, directly left of the start.
    jump = const_policy(env, LEFT)
    for goal in env.thetas():
        traj = rollout(env, goal, jump, seed=0)
        assert traj.return_value == -15.0 and len(traj) == 1


def test_rollout_rejects_illegal_theta_and_mismatched_policy():
    env = LavaWorldEnv()
    with pytest.raises(ValueError):
        rollout(env, GridGoal(1, 4), const_policy(env, 0))
    with pytest.raises(ValueError):
        rollout(env, GridGoal(9, 9), const_policy(env, 0))
    with pytest.raises(ValueError):
        rollout(env, GridGoal(0, 2), TabularPolicy.from_actions(np.zeros(5, dtype=int), 4))


def test_lava_world_rollouts_ignore_seed(lava_env, rng):
    policy = TabularPolicy.random_deterministic(lava_env.spec, rng, time_indexed=True)
    for goal in lava_env.thetas():
        runs = {rollout(lava_env, goal, policy, seed=s) for s in range(5)}
        assert len(runs) == 1


def test_deterministic_estimate_independent_of_episode_count(lava_env):
    p = const_policy(lava_env, 2)
    assert estimate_utility(lava_env, GridGoal(2, 4), p, 1)[0] == estimate_utility(lava_env, GridGoal(2, 4), p, 100)[0]


def test_estimate_utility_repeatable(windy_env):
    p = const_policy(windy_env, 2)
    a = estimate_utility(windy_env, BetaParams(2.0, 3.0), p, 50, seed=4)
    b = estimate_utility(windy_env, BetaParams(2.0, 3.0), p, 50, seed=4)
    assert a == b


def test_estimate_utility_requires_episodes(windy_env):
    with pytest.raises(ValueError):
        estimate_utility(windy_env, BetaParams(1.0, 1.0), const_policy(windy_env, 2), 0)


def test_windy_strong_right_wind_matches_oracle(windy_env):
    p = const_policy(windy_env, 2)
    mean, se = estimate_utility(windy_env, BetaParams(10.0, 0.01), p, 10_000, seed=1)
    ref, ref_se = windy_always_right(10.0, 0.01, 10_000, seed=99)
    assert abs(mean - ref) <= 3 * np.hypot(se, ref_se) + 1e-9


def test_windy_batch_matches_scalar_rollouts(windy_env, rng):
    from farr.upomdp import episode_seed

    policies = [TabularPolicy.random_deterministic(windy_env.spec, rng) for _ in range(3)]
    mix = PolicyMixture(policies, [0.2, 0.5, 0.3])
    theta = BetaParams(3.0, 2.0)
    seeds = [episode_seed(5, i) for i in range(40)]
    for pol in policies + [mix]:
        batch = windy_env.batch_returns(theta, pol, seeds)
        scalar = [rollout(windy_env, theta, pol, s).return_value for s in seeds]
        assert np.array_equal(batch, scalar)


def test_mixture_expected_utility_exact_on_deterministic_env(lava_env):
    down, left = const_policy(lava_env, 2), const_policy(lava_env, LEFT)
    mix = PolicyMixture((down, left), [0.25, 0.75])
    value, se = expected_utility(lava_env, GridGoal(2, 4), mix)
    assert value == 0.25 * -1 + 0.75 * -15 and se == 0.0


def test_mixture_sampling_per_episode(lava_env):
    down, left = const_policy(lava_env, 2), const_policy(lava_env, LEFT)
    mix = PolicyMixture((down, left), [0.5, 0.5])
    mean, se = estimate_utility(lava_env, GridGoal(2, 4), mix, 2000, seed=3)
    assert abs(mean - (-8.0)) <= 4 * se


def test_mixture_weights_validated():
    p = TabularPolicy.from_actions([0, 1], 2)
    with pytest.raises(ValueError):
        PolicyMixture((p, p), [0.7, 0.7])
    with pytest.raises(ValueError):
        PolicyMixture(())


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 2**32), st.booleans())
def test_trajectory_return_and_bounds_lava(policy_seed, seed, time_indexed):
    env = LavaWorldEnv()
    policy = TabularPolicy.random_deterministic(env.spec, np.random.default_rng(policy_seed), time_indexed)
    goal = env.thetas()[seed % len(env.thetas())]
    traj = rollout(env, goal, policy, seed)
    lo, hi = return_bounds(env)
    assert 1 <= len(traj) <= env.spec.horizon
    assert traj.return_value == pytest.approx(sum(r for _, _, r in traj.steps), abs=1e-9)
    assert lo <= traj.return_value <= hi


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(WindyWalkEnv().thetas()))
def test_trajectory_return_and_bounds_windy(seed, theta):
    env = WindyWalkEnv()
    policy = TabularPolicy.random_deterministic(env.spec, np.random.default_rng(seed))
    traj = rollout(env, theta, policy, seed)
    lo, hi = return_bounds(env)
    assert len(traj) == env.spec.horizon
    assert traj.return_value == pytest.approx(sum(r for _, _, r in traj.steps), abs=1e-9)
    assert lo <= traj.return_value <= hi
    assert env.min_return <= traj.return_value <= env.max_return


def test_results_independent_of_evaluation_order(windy_env):
    p = const_policy(windy_env, 2)
    thetas = windy_env.thetas()[:6]
    forward = [estimate_utility(windy_env, th, p, 30, seed=8) for th in thetas]
    backward = [estimate_utility(windy_env, th, p, 30, seed=8) for th in reversed(thetas)][::-1]
    assert forward == backward
