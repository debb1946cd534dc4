import math

import numpy as np
import pytest

from mppi_planner import (
    ControlInput,
    CostWeights,
    InputCostParams,
    ObstacleTrack,
    Planner,
    PlannerConfig,
    PlannerFault,
    ReferencePath,
    Scene,
    VehicleState,
    default_sg_coeffs,
    sample_noise,
    shift_warm_start,
    smooth,
    step,
    update_inputs,
)
from mppi_planner.costs import input_cost, running_state_cost, terminal_cost
from mppi_planner.planner import _draw_noise

V30 = 30.0 / 3.6


def straight_path(n=220, spacing=1.0, speed=V30):
    xs = np.arange(n) * spacing
    wp = np.column_stack([xs, np.zeros(n), np.zeros(n), np.full(n, speed)])
    return ReferencePath(wp, np.array([xs[-1], 0.0]))


# -- noise sampling ------------------------------------------------------------


def test_noise_clamped_at_box_boundary():
    cfg = PlannerConfig(M=4, T=3, seed=0)
    nominal = np.full((3, 2), [cfg.a_max, 0.0])
    rng = np.random.default_rng(0)
    eps = sample_noise(rng, nominal, cfg)
    # at nominal a = a_max any positive draw clamps to zero perturbation
    assert np.all(eps[:, :, 0] <= 0.0)
    assert np.all(nominal[None, :, 0] + eps[:, :, 0] >= cfg.a_min)


def test_noise_vanishes_with_tiny_sigma():
    cfg = PlannerConfig(M=16, T=4, sigma_a=1e-12, sigma_omega=1e-12, seed=1)
    eps = sample_noise(np.random.default_rng(1), np.zeros((4, 2)), cfg)
    assert np.abs(eps).max() < 1e-10


def test_noise_statistics():
    cfg = PlannerConfig(M=100_000, T=1, seed=7, a_max=1e9, a_min=-1e9, omega_max=1e9)
    raw, clamped = _draw_noise(np.random.default_rng(7), np.zeros((1, 2)), cfg)
    n = raw[:, :, 0].size
    assert abs(raw[:, :, 0].mean()) < 3.0 * cfg.sigma_a / math.sqrt(n)
    assert abs(raw[:, :, 1].mean()) < 3.0 * cfg.sigma_omega / math.sqrt(n)
    cfg2 = PlannerConfig(M=100_000, T=1, seed=7)
    raw2, clamped2 = _draw_noise(np.random.default_rng(7), np.zeros((1, 2)), cfg2)
    assert np.all(clamped2[:, :, 0] >= cfg2.a_min) and np.all(clamped2[:, :, 0] <= cfg2.a_max)
    assert np.all(np.abs(clamped2[:, :, 1]) <= cfg2.omega_max)
    # pre-clamp draws are identical for the same seed
    assert np.array_equal(raw, raw2)


# -- input update ----------------------------------------------------------------


def test_update_equal_costs_is_plain_mean():
    rng = np.random.default_rng(2)
    noise = rng.normal(0, 1, (8, 5, 2))
    nominal = np.zeros((5, 2))
    out = update_inputs(nominal, np.full(8, 3.0), noise, 150.0)
    np.testing.assert_allclose(out, noise.mean(axis=0), rtol=1e-12)


def test_update_two_rollout_hand_value():
    lam = 150.0
    nominal = np.zeros((1, 2))
    noise = np.array([[[1.0, 1.0]], [[-1.0, -1.0]]])
    out = update_inputs(nominal, np.array([0.0, lam]), noise, lam)
    expected = (1.0 - math.exp(-1.0)) / (1.0 + math.exp(-1.0))  # tanh(1/2)
    np.testing.assert_allclose(out, expected, rtol=1e-12)


def test_update_cost_shift_invariance():
    rng = np.random.default_rng(3)
    noise = rng.normal(0, 1, (12, 6, 2))
    costs = rng.uniform(0, 500, 12)
    nominal = rng.normal(0, 0.2, (6, 2))
    a = update_inputs(nominal, costs, noise, 150.0)
    b = update_inputs(nominal, costs + 1e3, noise, 150.0)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_update_matches_bruteforce_eq():
    rng = np.random.default_rng(4)
    for _ in range(25):
        M = int(rng.integers(1, 17))
        T = int(rng.integers(1, 5))
        noise = rng.normal(0, 1, (M, T, 2))
        costs = rng.uniform(0, 2000, M)
        nominal = rng.normal(0, 0.3, (T, 2))
        lam = float(rng.uniform(1, 500))
        got = update_inputs(nominal, costs, noise, lam)
        s_min = costs.min()
        expected = np.empty((T, 2))
        for t in range(T):
            for c in range(2):
                num = sum(
                    math.exp(-(costs[m] - s_min) / lam) * noise[m, t, c] for m in range(M)
                )
                den = sum(math.exp(-(costs[m] - s_min) / lam) for m in range(M))
                expected[t, c] = nominal[t, c] + num / den
        np.testing.assert_allclose(got, expected, rtol=1e-12, atol=1e-14)


def test_update_concentrates_on_argmin_as_lambda_vanishes():
    rng = np.random.default_rng(5)
    noise = rng.normal(0, 1, (10, 4, 2))
    costs = rng.uniform(10, 100, 10)
    nominal = np.zeros((4, 2))
    out = update_inputs(nominal, costs, noise, 1e-9)
    np.testing.assert_allclose(out, noise[int(np.argmin(costs))], rtol=1e-9)


def test_update_flat_for_huge_lambda():
    rng = np.random.default_rng(6)
    M = 4096
    noise = rng.normal(0, 0.85, (M, 3, 2))
    costs = rng.uniform(0, 100, M)
    out = update_inputs(np.zeros((3, 2)), costs, noise, 1e9)
    assert np.abs(out).max() < 3.0 * 0.85 / math.sqrt(M) * 2.0


def test_update_clamps_to_bounds():
    noise = np.full((2, 2, 2), 5.0)
    out = update_inputs(
        np.zeros((2, 2)), np.zeros(2), noise, 1.0,
        bounds=(np.array([-2.5, -0.11]), np.array([1.1, 0.11])),
    )
    np.testing.assert_array_equal(out, np.tile([1.1, 0.11], (2, 1)))


# -- smoothing ---------------------------------------------------------------------


def test_smooth_preserves_constants_exactly():
    u = np.full((16, 2), [0.37, -0.085])
    out = smooth(u)
    assert np.array_equal(out, u)


def test_smooth_preserves_interior_ramp_exactly():
    t = np.arange(16.0)
    u = np.column_stack([t, -t])
    out = smooth(u)
    assert np.array_equal(out[2:-2], u[2:-2])


def test_smooth_impulse_reads_off_kernel():
    u = np.zeros((5, 2))
    u[2, 0] = 1.0
    u[2, 1] = 1.0
    out = smooth(u)
    kernel = np.array([-3.0, 12.0, 17.0, 12.0, -3.0]) / 35.0
    np.testing.assert_allclose(out[:, 0], kernel, rtol=0, atol=2e-16)
    # off-center taps are exact
    assert out[0, 0] == kernel[0]
    assert out[1, 0] == kernel[1]
    assert out[3, 0] == kernel[3]
    assert out[4, 0] == kernel[4]


def test_smooth_single_entry():
    u = np.array([[0.4, -0.02]])
    assert np.array_equal(smooth(u), u)


def test_smooth_clamps_when_asked():
    u = np.zeros((8, 2))
    u[4] = [5.0, 1.0]
    out = smooth(u, bounds=(np.array([-2.5, -0.11]), np.array([1.1, 0.11])))
    assert out[:, 0].max() <= 1.1
    assert np.abs(out[:, 1]).max() <= 0.11


def test_default_kernel_sums_to_one():
    assert sum(default_sg_coeffs()) == pytest.approx(1.0, abs=1e-15)


def test_shift_duplicates_last():
    u = np.arange(10.0).reshape(5, 2)
    out = shift_warm_start(u)
    assert np.array_equal(out[:-1], u[1:])
    assert np.array_equal(out[-1], u[-1])


# -- rollout evaluation ---------------------------------------------------------------


def exact_path_for(v=8.0, T=8, dt=0.25):
    """Waypoints exactly on the rollout grid so on-path costs vanish."""
    xs = np.arange(3 * T + 1) * (v * dt)
    wp = np.column_stack([xs, np.zeros_like(xs), np.zeros_like(xs), np.full(xs.size, v)])
    return ReferencePath(wp, np.array([xs[-1], 0.0]))


def test_on_path_rollout_costs_exactly_zero():
    cfg = PlannerConfig(M=3, T=8, dt=0.25, v_goal=8.0, seed=0)
    planner = Planner(cfg)
    path = exact_path_for(v=8.0, T=8)
    state = VehicleState(0.0, 0.0, 0.0, 8.0, 0.0)
    batch = planner.evaluate_rollouts(
        state, np.zeros((8, 2)), np.zeros((3, 8, 2)), Scene.empty(), path
    )
    assert np.array_equal(batch.costs, np.zeros(3))


def test_single_rollout_matches_scalar_accumulation():
    cfg = PlannerConfig(M=1, T=8, seed=0)
    weights = CostWeights(w_terminal=2.0)
    planner = Planner(cfg, weights)
    path = straight_path(80)
    scene = Scene([ObstacleTrack(40.0, 1.0, 0.0, 4.5, 1.8, vx=0.6, vy=0.0, kind="moving")], 0.9)
    rng = np.random.default_rng(11)
    nominal = rng.normal(0, 0.3, (cfg.T, 2)).clip(
        [cfg.a_min, -cfg.omega_max], [cfg.a_max, cfg.omega_max]
    )
    noise = rng.normal(0, 0.2, (1, cfg.T, 2))
    batch = planner.evaluate_rollouts(
        VehicleState(2.0, 0.5, 0.05, 7.0, 0.01), nominal, noise, scene, path
    )

    # independent scalar accumulation through the public cost/dynamics ops
    state = VehicleState(2.0, 0.5, 0.05, 7.0, 0.01)
    total = 0.0
    for t in range(cfg.T):
        a = nominal[t, 0] + noise[0, t, 0]
        om = nominal[t, 1] + noise[0, t, 1]
        cap = (cfg.v_goal - state.v) / cfg.dt
        a = max(cfg.a_min, min(a, cap))
        new = step(state, ControlInput(a, om), planner.vehicle)
        total += running_state_cost(new, state, scene, path, weights, t=(t + 1) * cfg.dt)
        state = new
    total += terminal_cost(state, path.target, weights)
    assert batch.costs[0] == pytest.approx(total, rel=1e-12)


def test_single_rollout_with_input_cost():
    icp = InputCostParams(R=np.array([[0.5, 0.1], [0.1, 0.3]]), gamma=2.0)
    cfg = PlannerConfig(M=1, T=5, seed=0)
    planner = Planner(cfg, input_cost=icp)
    path = straight_path(40)
    rng = np.random.default_rng(12)
    nominal = rng.normal(0, 0.2, (cfg.T, 2)).clip(
        [cfg.a_min, -cfg.omega_max], [cfg.a_max, cfg.omega_max]
    )
    noise = rng.normal(0, 0.1, (1, cfg.T, 2))
    batch = planner.evaluate_rollouts(
        VehicleState(0, 0, 0, 6.0, 0), nominal, noise, Scene.empty(), path
    )
    state = VehicleState(0, 0, 0, 6.0, 0)
    total = 0.0
    for t in range(cfg.T):
        a = nominal[t, 0] + noise[0, t, 0]
        om = nominal[t, 1] + noise[0, t, 1]
        cap = (cfg.v_goal - state.v) / cfg.dt
        a = max(cfg.a_min, min(a, cap))
        new = step(state, ControlInput(a, om), planner.vehicle)
        total += running_state_cost(new, state, Scene.empty(), path, planner.weights, t=(t + 1) * cfg.dt)
        total += input_cost(nominal[t], noise[0, t], icp)
        state = new
    assert batch.costs[0] == pytest.approx(total, rel=1e-12)


def test_single_rollout_matches_scalar_far_off_grid():
    # starting far outside the padded candidate grid exercises the kernel's
    # full-scan waypoint fallback
    cfg = PlannerConfig(M=1, T=6, seed=0)
    planner = Planner(cfg)
    path = straight_path(60)
    noise = np.random.default_rng(3).normal(0, 0.2, (1, cfg.T, 2))
    start = VehicleState(-80.0, 120.0, -0.5, 7.0, 0.0)
    batch = planner.evaluate_rollouts(start, np.zeros((cfg.T, 2)), noise, Scene.empty(), path)
    state = start
    total = 0.0
    for t in range(cfg.T):
        a = noise[0, t, 0]
        om = noise[0, t, 1]
        cap = (cfg.v_goal - state.v) / cfg.dt
        a = max(cfg.a_min, min(a, cap))
        new = step(state, ControlInput(a, om), planner.vehicle)
        total += running_state_cost(new, state, Scene.empty(), path, planner.weights, t=(t + 1) * cfg.dt)
        state = new
    assert batch.costs[0] == pytest.approx(total, rel=1e-12)


def test_worker_counts_are_bit_identical():
    from dataclasses import replace

    base = PlannerConfig(M=8, T=16, seed=5)
    path = straight_path()
    scene = Scene([ObstacleTrack(60.0, 0.0, 0.0, 4.5, 1.8)], 0.9)
    state = VehicleState(0, 0.5, 0, V30, 0)
    ref = None
    for w in (1, 8):
        planner = Planner(replace(base, workers=w))
        noise = sample_noise(np.random.default_rng(5), np.zeros((16, 2)), base)
        batch = planner.evaluate_rollouts(state, np.zeros((16, 2)), noise, scene, path)
        if ref is None:
            ref = batch.costs
        else:
            assert np.array_equal(ref, batch.costs)


def test_non_finite_costs_raise_planner_fault():
    cfg = PlannerConfig(M=8, T=4, seed=0)
    planner = Planner(cfg)
    wp = np.column_stack([np.arange(10.0), np.zeros(10), np.zeros(10), np.full(10, np.nan)])
    bad_path = ReferencePath(wp, np.array([9.0, 0.0]))
    with pytest.raises(PlannerFault):
        planner.plan(VehicleState(0, 0, 0, 5.0, 0), Scene.empty(), bad_path)


# -- full cycle -------------------------------------------------------------------------


def test_plan_respects_hard_bounds_and_speed_cap():
    cfg = PlannerConfig(M=64, T=16, seed=9)
    planner = Planner(cfg)
    path = straight_path()
    scene = Scene([ObstacleTrack(50.0, 0.0, 0.0, 4.5, 1.8)], 0.9)
    warm = None
    for k in range(5):
        traj, warm = planner.plan(VehicleState(0, 1.0, 0, V30, 0), scene, path, warm)
        assert traj.inputs[:, 0].min() >= cfg.a_min
        assert traj.inputs[:, 0].max() <= cfg.a_max
        assert np.abs(traj.inputs[:, 1]).max() <= cfg.omega_max
        assert traj.states[:, 3].max() <= cfg.v_goal + 1e-9


def test_planned_trajectory_resimulates_bit_exactly():
    cfg = PlannerConfig(M=32, T=16, seed=2)
    planner = Planner(cfg)
    path = straight_path()
    traj, _ = planner.plan(VehicleState(0, 0.5, 0.02, 6.0, 0.01), Scene.empty(), path)
    state = VehicleState.from_array(traj.states[0])
    for t in range(cfg.T):
        state = step(state, ControlInput(traj.inputs[t, 0], traj.inputs[t, 1]), planner.vehicle)
        assert np.array_equal(state.as_array(), traj.states[t + 1])


def test_plan_deterministic_for_seed():
    cfg = PlannerConfig(M=64, T=16, seed=4)
    path = straight_path()
    scene = Scene([ObstacleTrack(60.0, 0.0, 0.0, 4.5, 1.8)], 0.9)
    t1, w1 = Planner(cfg).plan(VehicleState(0, 0, 0, V30, 0), scene, path)
    t2, w2 = Planner(cfg).plan(VehicleState(0, 0, 0, V30, 0), scene, path)
    assert np.array_equal(t1.states, t2.states)
    assert np.array_equal(t1.inputs, t2.inputs)
    assert np.array_equal(w1, w2)


def test_warm_start_is_shift_of_smoothed_sequence():
    path = straight_path()
    # away from the speed cap the executed inputs equal the smoothed sequence,
    # so the warm start is their documented shift with the tail duplicated
    planner = Planner(PlannerConfig(M=16, T=8, seed=1, v_goal=50.0))
    traj, warm = planner.plan(VehicleState(0, 0, 0, 5.0, 0), Scene.empty(), path)
    assert warm.shape == (8, 2)
    assert np.array_equal(warm[:-1], traj.inputs[1:])
    assert np.array_equal(warm[-1], traj.inputs[-1])


def test_converged_plan_holds_near_target_speed():
    cfg = PlannerConfig(seed=0)
    planner = Planner(cfg)
    path = straight_path(260)
    state = VehicleState(10.0, 0.0, 0.0, cfg.v_goal, 0.0)
    warm = None
    for _ in range(10):
        traj, warm = planner.plan(state, Scene.empty(), path, warm)
    assert traj.states[:, 3].min() >= cfg.v_goal - 0.5
    assert traj.states[:, 3].max() <= cfg.v_goal + 1e-9


def test_invalid_warm_start_shape_rejected():
    cfg = PlannerConfig(M=4, T=8, seed=0)
    planner = Planner(cfg)
    with pytest.raises(ValueError):
        planner.plan(VehicleState(0, 0, 0, 5, 0), Scene.empty(), straight_path(), np.zeros((3, 2)))


def test_config_validation():
    with pytest.raises(ValueError):
        PlannerConfig(M=0)
    with pytest.raises(ValueError):
        PlannerConfig(lambda_=0.0)
    with pytest.raises(ValueError):
        PlannerConfig(a_min=0.5)
    with pytest.raises(ValueError):
        PlannerConfig(sg_coeffs=(0.5, 0.5))  # even length
    with pytest.raises(ValueError):
        PlannerConfig(sg_coeffs=(0.2, 0.2, 0.2))  # does not sum to 1
