"""Drive mechanism arithmetic and the stiffness/rest-angle schedules."""

import math
from dataclasses import replace

import numpy as np
import pytest

from flagsim import (ConfigError, GaitSchedule, JointActuation,
                     MechanismConfig, carriage_position,
                     coordinate_dimension, default_mechanism_config,
                     default_robot_config, elastic_generalized_force,
                     gait_evaluate, validate_gait, validate_mechanism)
from flagsim import _kernel
from flagsim.actuation import _gait_codes


def test_carriage_reference_values():
    mech = default_mechanism_config()
    # 100 RPM at 2.5 mm per turn for 5 s: 100/60 * 0.0025 * 5 = 20.833 mm
    assert carriage_position(5.0, mech) == pytest.approx(0.0208333, abs=1e-6)
    assert carriage_position(0.0, mech) == 0.0
    assert carriage_position(10.0, mech) == pytest.approx(0.0, abs=1e-12)
    assert carriage_position(2.5, mech) == pytest.approx(0.0104167, abs=1e-6)
    # triangular wave: retraction mirrors extension
    assert carriage_position(7.5, mech) == \
        pytest.approx(carriage_position(2.5, mech), rel=1e-12)
    # periodic
    assert carriage_position(12.5, mech) == \
        pytest.approx(carriage_position(2.5, mech), rel=1e-12)


def test_carriage_stays_within_travel():
    mech = default_mechanism_config()
    t = np.linspace(0, 20, 1001)
    pos = carriage_position(t, mech)
    assert pos.max() <= mech.shaft_travel
    assert pos.min() >= 0.0
    assert pos.max() == pytest.approx(0.0208333, abs=1e-6)


def test_mechanism_validation():
    validate_mechanism(default_mechanism_config())
    with pytest.raises(ConfigError, match="motor_rpm"):
        validate_mechanism(MechanismConfig(motor_rpm=0.0))
    # carriage would overrun the shaft
    with pytest.raises(ConfigError, match="travel"):
        validate_mechanism(MechanismConfig(half_period=20.0))


def test_controlled_schedule_reference_points():
    g = GaitSchedule()
    assert g.mode == "controlled_flexible"
    assert (g.k_min, g.k_max, g.beta, g.period) == (1e-4, 1.0, 0.7, 10.0)

    a0 = gait_evaluate(g, 0.0)
    assert a0.stiffness == pytest.approx(g.k_max, rel=1e-15)
    assert a0.rest_angle == 0.0

    a25 = gait_evaluate(g, 0.25)
    assert a25.stiffness == pytest.approx(0.5 * (g.k_min + g.k_max), rel=1e-12)
    assert a25.rest_angle == pytest.approx(0.5 * g.beta, rel=1e-12)

    a50 = gait_evaluate(g, 0.5)
    assert a50.stiffness == pytest.approx(g.k_min, rel=1e-12, abs=1e-18)
    assert a50.rest_angle == pytest.approx(g.beta, rel=1e-12)


def test_constant_stiffness_presets_share_the_rest_schedule():
    soft = GaitSchedule(mode="fully_flexible")
    hard = GaitSchedule(mode="fully_rigid")
    ref = GaitSchedule()
    for phase in (0.0, 0.3, 0.5, 0.77):
        a_soft = gait_evaluate(soft, phase)
        a_hard = gait_evaluate(hard, phase)
        a_ref = gait_evaluate(ref, phase)
        assert a_soft.stiffness == soft.k_min
        assert a_hard.stiffness == hard.k_max
        assert a_soft.rest_angle == a_ref.rest_angle
        assert a_hard.rest_angle == a_ref.rest_angle


def test_gait_evaluate_vectorizes():
    g = GaitSchedule()
    phases = np.linspace(0.0, 0.999, 64)
    act = gait_evaluate(g, phases)
    singles = [gait_evaluate(g, float(p)) for p in phases]
    assert np.allclose(act.stiffness, [a.stiffness for a in singles],
                       rtol=1e-15)
    assert np.allclose(act.rest_angle, [a.rest_angle for a in singles],
                       rtol=1e-15)


def test_gait_validation_errors():
    with pytest.raises(ConfigError, match="mode"):
        validate_gait(GaitSchedule(mode="wiggle"))
    with pytest.raises(ConfigError, match="ramp"):
        validate_gait(GaitSchedule(ramp="cubic"))
    with pytest.raises(ConfigError, match="period"):
        validate_gait(GaitSchedule(period=0.0))
    with pytest.raises(ConfigError, match="k_min"):
        validate_gait(GaitSchedule(k_min=0.0))
    with pytest.raises(ConfigError, match="k_min"):
        validate_gait(GaitSchedule(k_min=2.0, k_max=1.0))
    with pytest.raises(ConfigError, match="ratio"):
        validate_gait(GaitSchedule(k_min=1e-7, k_max=1.0))
    with pytest.raises(ConfigError, match="beta"):
        validate_gait(GaitSchedule(beta=math.pi / 2))
    with pytest.raises(ConfigError, match="duty"):
        validate_gait(GaitSchedule(duty=1.0))
    with pytest.raises(ConfigError, match="phase_offset"):
        validate_gait(GaitSchedule(phase_offset=1.0))


def test_gait_evaluate_domain():
    g = GaitSchedule()
    with pytest.raises(ValueError, match="phase"):
        gait_evaluate(g, 1.0)
    with pytest.raises(ValueError, match="phase"):
        gait_evaluate(g, -0.1)
    with pytest.raises(ConfigError, match="prescribed"):
        gait_evaluate(GaitSchedule(mode="reciprocal_prescribed"), 0.5)


@pytest.mark.parametrize("duty,offset", [(0.5, 0.0), (0.3, 0.0), (0.5, 0.25),
                                         (0.15, 0.6)])
def test_schedules_are_c1_periodic(duty, offset):
    g = GaitSchedule(duty=duty, phase_offset=offset)
    k = lambda u: gait_evaluate(g, u).stiffness
    r = lambda u: gait_evaluate(g, u).rest_angle
    h = 1e-7
    # value continuity across the wrap
    assert abs(k(1.0 - h) - k(0.0)) <= 1e-5 * g.k_max
    assert abs(r(1.0 - h) - r(0.0)) <= 1e-5 * abs(g.beta)
    # slope continuity where the piecewise-linear warp is kinked (the start
    # of the stiffness ramp and the duty seam): the cosine ramp has zero
    # slope exactly there, so both one-sided slopes must vanish like h
    # (C1 but not C2)
    h = 1e-6
    warp_peak = 0.5 / min(duty, 1.0 - duty)
    bound = 8.0 * math.pi ** 2 * h * warp_peak ** 2 * (g.k_max - g.k_min)
    for u in (offset % 1.0, (offset + duty) % 1.0):
        right = (k((u + h) % 1.0) - k(u)) / h
        left = (k(u) - k((u - h) % 1.0)) / h
        assert abs(left) <= bound and abs(right) <= bound
    # the global wrap sits mid-ramp when the offset is nonzero: slope need
    # not vanish there, but it must match from both sides
    wrap_right = (k(h) - k(0.0)) / h
    wrap_left = (k(0.0) - k(1.0 - h)) / h
    assert abs(wrap_left - wrap_right) <= bound
    # the rest schedule's slope also vanishes at the wrap
    assert abs(r(h) - r(0.0)) / h <= 8.0 * math.pi ** 2 * h * abs(g.beta)


def test_beta_sign_flip_mirrors_rest_angles():
    g = GaitSchedule(beta=0.7)
    gm = replace(g, beta=-0.7)
    for phase in (0.1, 0.4, 0.9):
        a, am = gait_evaluate(g, phase), gait_evaluate(gm, phase)
        assert am.rest_angle == pytest.approx(-a.rest_angle, rel=1e-15)
        assert am.stiffness == a.stiffness


def test_elastic_force_layout():
    cfg = default_robot_config()
    d = coordinate_dimension(cfg)
    q = np.zeros(d)
    q[3:] = 0.3
    Q = elastic_generalized_force(q, JointActuation(stiffness=2.0,
                                                    rest_angle=0.1), cfg)
    assert Q.shape == (d,)
    assert np.all(Q[:3] == 0.0)          # no direct body forcing
    assert np.allclose(Q[3:], -2.0 * 0.2, rtol=1e-15)
    # at the rest shape the force vanishes identically
    q[3:] = 0.1
    Q0 = elastic_generalized_force(q, JointActuation(2.0, 0.1), cfg)
    assert np.all(Q0 == 0.0)


def test_kernel_schedule_matches_reference_implementation():
    # the jitted schedule evaluator must agree with the numpy one bit-for-bit
    # in role, to 1e-15 in value
    for mode in ("controlled_flexible", "fully_flexible", "fully_rigid"):
        for duty, offset in [(0.5, 0.0), (0.2, 0.35), (0.8, 0.9)]:
            g = GaitSchedule(mode=mode, duty=duty, phase_offset=offset)
            mode_code, ramp_code = _gait_codes(g)[:2]
            for phase in np.linspace(0.0, 0.999, 41):
                k_np = gait_evaluate(g, float(phase))
                k_j, r_j = _kernel.gait_eval(mode_code, ramp_code,
                                             float(phase), g.k_min, g.k_max,
                                             g.beta, g.duty, g.phase_offset)
                assert abs(k_j - k_np.stiffness) <= 1e-15 * g.k_max
                assert abs(r_j - k_np.rest_angle) <= 1e-15
