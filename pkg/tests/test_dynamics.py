"""Overdamped stepping: equilibria, symmetry, convergence, failure modes."""

import math
from dataclasses import replace

import numpy as np
import pytest

from flagsim import (ConfigError, FlagellumConfig, GaitSchedule,
                     JointActuation, NewtonConvergenceError, RobotConfig,
                     SimSettings, SingularConfigurationError,
                     coordinate_dimension, preset_gait, reciprocal_sinusoid,
                     simulate, simulate_prescribed, solve_velocity, step,
                     traveling_wave, warped_reciprocal)
from flagsim.dynamics import PrescribedTrajectory


def single_flagellum():
    """Axis-aligned tail, so the robot is mirror symmetric about y = 0."""
    return RobotConfig(flagella=(FlagellumConfig(
        n_segments=4, segment_length=0.02, segment_radius=0.002,
        attachment_offset=-0.05, attachment_angle=0.0),))


def rigid_straight():
    """Stiff joints relaxing to a straight shape: a dead scallop."""
    return replace(preset_gait("fully_rigid"), beta=0.0)


def test_equilibrium_velocity_is_zero(cfg, dim):
    v = solve_velocity(np.zeros(dim), 0.0, cfg, rigid_straight())
    assert np.all(v == 0.0)


def test_velocity_scales_linearly_with_stiffness(cfg, dim):
    rng = np.random.default_rng(7)
    q = 0.4 * rng.standard_normal(dim)
    v1 = solve_velocity(q, None, cfg, JointActuation(0.3, 0.1))
    v2 = solve_velocity(q, None, cfg, JointActuation(0.6, 0.1))
    np.testing.assert_allclose(v2, 2.0 * v1, rtol=1e-14)


def test_velocity_scales_inversely_with_viscosity(cfg, dim):
    rng = np.random.default_rng(8)
    q = 0.4 * rng.standard_normal(dim)
    thin = replace(cfg, fluid=replace(cfg.fluid,
                                      viscosity=cfg.fluid.viscosity / 2.0))
    v1 = solve_velocity(q, None, cfg, JointActuation(0.5, 0.2))
    v2 = solve_velocity(q, None, thin, JointActuation(0.5, 0.2))
    np.testing.assert_allclose(v2, 2.0 * v1, rtol=1e-12)


def test_solve_velocity_argument_dispatch(cfg, dim):
    q = np.zeros(dim)
    with pytest.raises(TypeError, match="JointActuation"):
        solve_velocity(q, None, cfg, GaitSchedule())
    with pytest.raises(TypeError, match="t=None"):
        solve_velocity(q, 0.0, cfg, JointActuation(1.0, 0.0))
    with pytest.raises(ConfigError, match="prescribed"):
        solve_velocity(q, 0.0, cfg, preset_gait("reciprocal_prescribed"))


def test_singular_configuration_raises(cfg, dim):
    with pytest.raises(SingularConfigurationError, match="condition"):
        solve_velocity(np.zeros(dim), 0.0, cfg, preset_gait("fully_rigid"),
                       SimSettings(condition_limit=2.0))


@pytest.mark.parametrize("scheme", ["implicit_midpoint", "backward_euler"])
def test_step_fixed_point_at_equilibrium(cfg, dim, scheme):
    q0 = np.zeros(dim)
    q1 = step(q0, 0.0, 0.05, cfg, rigid_straight(),
              SimSettings(scheme=scheme))
    assert np.max(np.abs(q1 - q0)) <= 1e-12


def test_step_rejects_bad_dt(cfg, dim):
    for dt in (0.0, -0.01):
        with pytest.raises(ValueError, match="dt must be > 0"):
            step(np.zeros(dim), 0.0, dt, cfg, preset_gait("fully_rigid"))


def test_step_rejects_prescribed_mode(cfg, dim):
    with pytest.raises(ConfigError, match="prescribed"):
        step(np.zeros(dim), 0.0, 0.01, cfg,
             preset_gait("reciprocal_prescribed"))


def test_elastic_energy_dissipates(cfg, dim):
    # no driving (constant rest shape), so V = k/2 * sum(theta^2) can only
    # fall as the stored energy drains into the fluid
    gait = rigid_straight()
    q0 = np.zeros(dim)
    q0[3:] = 0.3
    traj = simulate(cfg, gait, n_cycles=1, settings=SimSettings(dt=0.05),
                    initial_state=q0)
    energy = 0.5 * gait.k_max * np.sum(traj.joint_angles ** 2, axis=1)
    assert energy[0] > energy[-1]
    assert np.all(np.diff(energy) <= 1e-12 * energy[0])


def test_order_of_accuracy(cfg):
    gait = preset_gait("controlled_flexible")
    finals = []
    for n in (250, 500, 1000):
        traj = simulate(cfg, gait, n_cycles=1,
                        settings=SimSettings(dt=gait.period / n))
        finals.append(traj.q[-1, 0])
    order = math.log2(abs(finals[0] - finals[1]) / abs(finals[1] - finals[2]))
    assert order >= 1.9


def test_backward_euler_is_first_order(cfg):
    gait = preset_gait("controlled_flexible")
    finals = []
    for n in (250, 500, 1000):
        traj = simulate(cfg, gait, n_cycles=1,
                        settings=SimSettings(dt=gait.period / n,
                                             scheme="backward_euler"))
        finals.append(traj.q[-1, 0])
    assert np.all(np.isfinite(finals))
    order = math.log2(abs(finals[0] - finals[1]) / abs(finals[1] - finals[2]))
    assert 0.7 <= order <= 1.3


def test_simulation_is_deterministic(cfg, coarse):
    gait = preset_gait("controlled_flexible")
    a = simulate(cfg, gait, n_cycles=2, settings=coarse)
    b = simulate(cfg, gait, n_cycles=2, settings=coarse)
    assert np.array_equal(a.q, b.q)
    assert np.array_equal(a.t, b.t)
    assert np.array_equal(a.stiffness, b.stiffness)


def _se2_apply(shift, pose):
    dx, dy, dphi = shift
    c, s = math.cos(dphi), math.sin(dphi)
    x = dx + c * pose[0] - s * pose[1]
    y = dy + s * pose[0] + c * pose[1]
    return np.array([x, y, pose[2] + dphi])


def test_se2_equivariance(cfg, dim):
    gait = preset_gait("controlled_flexible")
    settings = SimSettings(dt=0.02)
    shift = (0.37, -0.21, 0.9)
    base = simulate(cfg, gait, n_cycles=2, settings=settings)
    q0 = np.zeros(dim)
    q0[:3] = _se2_apply(shift, q0[:3])
    moved = simulate(cfg, gait, n_cycles=2, settings=settings,
                     initial_state=q0)
    expected = _se2_apply(shift, base.q[-1, :3])
    assert np.max(np.abs(moved.q[-1, :3] - expected)) <= 1e-8
    np.testing.assert_allclose(moved.q[-1, 3:], base.q[-1, 3:], atol=1e-8)


def test_mirror_pairs_swim_straight(cfg):
    # the default robot carries mirrored flagella, so starting on the axis
    # it must stay there
    traj = simulate(cfg, preset_gait("controlled_flexible"), n_cycles=2,
                    settings=SimSettings(dt=0.02))
    assert np.max(np.abs(traj.q[:, 1])) <= 1e-12
    assert np.max(np.abs(traj.q[:, 2])) <= 1e-12


def test_beta_flip_mirrors_trajectory():
    cfg = single_flagellum()
    gait = preset_gait("controlled_flexible")
    settings = SimSettings(dt=0.02)
    a = simulate(cfg, gait, n_cycles=2, settings=settings)
    b = simulate(cfg, replace(gait, beta=-gait.beta), n_cycles=2,
                 settings=settings)
    np.testing.assert_allclose(b.q[:, 0], a.q[:, 0], atol=1e-12)
    np.testing.assert_allclose(b.q[:, 1], -a.q[:, 1], atol=1e-12)
    np.testing.assert_allclose(b.q[:, 2], -a.q[:, 2], atol=1e-12)
    np.testing.assert_allclose(b.q[:, 3:], -a.q[:, 3:], atol=1e-12)


def test_prescribed_sinusoid_is_reciprocal(cfg):
    prescribed = reciprocal_sinusoid(cfg, 0.5, 10.0)
    traj = simulate_prescribed(cfg, prescribed, n_cycles=1,
                               settings=SimSettings(dt=0.02))
    drift = np.hypot(*(traj.q[-1, :2] - traj.q[0, :2])) / cfg.body.length
    assert drift <= 1e-6


def test_prescribed_residual_shrinks_second_order(cfg):
    # the warped stroke is reciprocal too, but only C1 in time; its
    # residual is pure integrator error and must fall ~4x per dt halving
    residuals = []
    for n in (250, 500):
        traj = simulate_prescribed(cfg, warped_reciprocal(cfg, 0.5, 10.0),
                                   n_cycles=1,
                                   settings=SimSettings(dt=10.0 / n))
        residuals.append(np.hypot(*(traj.q[-1, :2] - traj.q[0, :2])))
    assert residuals[0] / residuals[1] >= 3.5


def test_prescribed_constant_shape_is_stationary(cfg):
    n_joints = coordinate_dimension(cfg) - 3
    frozen = PrescribedTrajectory(
        period=10.0,
        angles=lambda t: np.full(n_joints, 0.2),
        rates=lambda t: np.zeros(n_joints))
    traj = simulate_prescribed(cfg, frozen, n_cycles=1,
                               settings=SimSettings(dt=0.05))
    assert np.max(np.abs(traj.q[:, :3] - traj.q[0, :3])) <= 1e-14


def test_prescribed_traveling_wave_advances():
    cfg = single_flagellum()
    traj = simulate_prescribed(cfg, traveling_wave(cfg, 0.6, 10.0),
                               n_cycles=2, settings=SimSettings(dt=0.04))
    per_cycle = np.hypot(*(traj.q[-1, :2] - traj.q[0, :2])) / 2.0
    assert per_cycle / cfg.body.length > 1e-2


def test_newton_failure_raises(cfg, dim):
    with pytest.raises(NewtonConvergenceError, match="converge"):
        step(np.zeros(dim), 0.0, 5.0, cfg, preset_gait("controlled_flexible"),
             SimSettings(newton_max_iter=1, max_halvings=0))


def test_trajectory_layout(cfg, dim):
    gait = preset_gait("controlled_flexible")
    traj = simulate(cfg, gait, n_cycles=3, settings=SimSettings(dt=0.05))
    n = traj.steps_per_cycle * 3 + 1
    assert traj.n_samples == n
    assert traj.n_cycles == 3
    assert traj.q.shape == (n, dim)
    assert traj.t.shape == (n,)
    assert traj.phase.shape == (n,)
    assert traj.stiffness.shape == (n,)
    assert traj.settings.dt == 0.05
    assert traj.period == gait.period
    dts = np.diff(traj.t)
    assert np.all(dts > 0)
    np.testing.assert_allclose(dts, 0.05, rtol=1e-9)
    assert np.all((traj.phase >= 0.0) & (traj.phase < 1.0))
    assert traj.body_xy.shape == (n, 2)
    assert traj.heading.shape == (n,)
    assert traj.joint_angles.shape == (n, dim - 3)


def test_initial_state_default_and_override(cfg, dim, coarse):
    gait = preset_gait("controlled_flexible")
    traj = simulate(cfg, gait, n_cycles=1, settings=coarse)
    # the controlled schedule starts at its rest shape, a straight chain
    assert np.all(traj.q[0] == 0.0)
    q0 = np.zeros(dim)
    q0[0], q0[5] = 0.3, -0.2
    moved = simulate(cfg, gait, n_cycles=1, settings=coarse,
                     initial_state=q0)
    assert np.array_equal(moved.q[0], q0)


def test_simulate_rejects_bad_cycle_count(cfg, coarse):
    with pytest.raises(ValueError, match="n_cycles"):
        simulate(cfg, preset_gait("fully_rigid"), n_cycles=0,
                 settings=coarse)
