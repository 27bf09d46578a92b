"""Self-checking property suite behind the ``verify`` command.

Each check exercises one physical or numerical invariant on the supplied
configuration and reports pass/fail with a measured number.  All checks pass
on the default configuration; a deliberately exotic config can legitimately
fail some of them, which is the point of running the suite.
"""

import math
from dataclasses import replace
from typing import NamedTuple

import numpy as np

from .actuation import carriage_position, gait_evaluate
from .dynamics import SimSettings, simulate
from .experiments import displacement_per_cycle, scallop_check
from .hydrodynamics import assemble_resistance_matrix, reynolds_number
from .kinematics import coordinate_dimension

__all__ = ["CheckResult", "VerificationReport", "run_verification"]


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


class VerificationReport(NamedTuple):
    checks: tuple
    passed: bool

    def lines(self):
        out = []
        for c in self.checks:
            mark = "PASS" if c.passed else "FAIL"
            out.append(f"[{mark}] {c.name}: {c.detail}")
        out.append(f"verification {'PASSED' if self.passed else 'FAILED'} "
                   f"({sum(c.passed for c in self.checks)}/"
                   f"{len(self.checks)} checks)")
        return out


def _random_states(config, count, seed=2024):
    rng = np.random.default_rng(seed)
    dim = coordinate_dimension(config)
    states = rng.uniform(-1.2, 1.2, size=(count, dim))
    states[:, 0:2] *= 0.1
    return states


def _check_resistance(config):
    worst_asym = 0.0
    worst_eig = math.inf
    for q in _random_states(config, 25):
        R = assemble_resistance_matrix(q, config)
        scale = np.abs(R).max()
        worst_asym = max(worst_asym, np.abs(R - R.T).max() / scale)
        worst_eig = min(worst_eig, float(np.linalg.eigvalsh(R).min()))
    ok = worst_asym <= 1e-12 and worst_eig > 0.0
    return CheckResult(
        "resistance_symmetric_positive_definite", ok,
        f"max relative asymmetry {worst_asym:.2e}, "
        f"min eigenvalue {worst_eig:.3e}")


def _check_viscosity_linearity(config):
    q = _random_states(config, 1, seed=7)[0]
    R1 = assemble_resistance_matrix(q, config)
    doubled = replace(config, fluid=replace(config.fluid,
                                            viscosity=2 * config.fluid.viscosity))
    R2 = assemble_resistance_matrix(q, doubled)
    err = np.abs(R2 - 2.0 * R1).max() / np.abs(R1).max()
    ok = err <= 1e-12
    return CheckResult("drag_linear_in_viscosity", ok,
                       f"relative deviation {err:.2e}")


def _check_equilibrium(config, settings):
    # constant stiffness, zero rest angle: the straight state is a fixed point
    gait = replace(_quiet_gait(), period=2.0)
    traj = simulate(config, gait, n_cycles=1, settings=settings)
    drift = np.abs(traj.q - traj.q[0]).max()
    ok = drift <= 1e-12
    return CheckResult("equilibrium_is_fixed_point", ok,
                       f"max drift over one cycle {drift:.2e}")


def _quiet_gait():
    from .actuation import GaitSchedule
    return GaitSchedule(mode="fully_rigid", beta=0.0)


def _check_scallop(config, settings):
    report = scallop_check(config, settings=settings)
    ratio = report.refinement_ratio
    ratio_txt = "inf (both at floor)" if math.isinf(ratio) else f"{ratio:.2f}"
    return CheckResult(
        "reciprocal_stroke_nets_zero", report.passed,
        f"sinusoid residual {report.sinusoid_residual:.2e} BL, "
        f"warped {report.warped_residual:.2e} BL, refinement x{ratio_txt}")


def _se2_map(q, shift):
    dx, dy, dphi = shift
    out = q.copy()
    c, s = math.cos(dphi), math.sin(dphi)
    out[..., 0] = c * q[..., 0] - s * q[..., 1] + dx
    out[..., 1] = s * q[..., 0] + c * q[..., 1] + dy
    out[..., 2] = q[..., 2] + dphi
    return out


def _check_se2(config, gait, settings):
    shift = (0.37, -0.21, 0.9)
    base = simulate(config, gait, n_cycles=2, settings=settings)
    dim = coordinate_dimension(config)
    moved_start = _se2_map(np.zeros(dim), shift)
    if gait.mode == "reciprocal_prescribed":
        moved_start = moved_start[:3]
    moved = simulate(config, gait, n_cycles=2, settings=settings,
                     initial_state=moved_start)
    err = np.abs(_se2_map(base.q, shift) - moved.q).max()
    ok = err <= 1e-8
    return CheckResult("se2_equivariance", ok,
                       f"max deviation after rigid remap {err:.2e}")


def _is_mirror_symmetric(config):
    from collections import Counter
    def key(f):
        return (f.n_segments, f.segment_length, f.segment_radius,
                f.attachment_offset, f.attachment_angle, f.mirror)
    bag = Counter(key(f) for f in config.flagella)
    flipped = Counter(key(replace(f, mirror=not f.mirror))
                      for f in config.flagella)
    return bag == flipped


def _check_mirror(config, gait, settings):
    if not _is_mirror_symmetric(config):
        return CheckResult("mirror_symmetry", True,
                           "skipped: flagella are not mirror-paired")
    traj = simulate(config, gait, n_cycles=2, settings=settings)
    err = max(np.abs(traj.q[:, 1]).max(), np.abs(traj.q[:, 2]).max())
    ok = err <= 1e-8
    return CheckResult("mirror_symmetry", ok,
                       f"max |y|, |heading| over 2 cycles {err:.2e}")


def _check_determinism(config, gait, settings):
    a = simulate(config, gait, n_cycles=1, settings=settings)
    b = simulate(config, gait, n_cycles=1, settings=settings)
    identical = np.array_equal(a.q, b.q)
    return CheckResult("deterministic_repeat", identical,
                       "bit-identical repeat run" if identical
                       else "repeat run differs")


def _check_displacement(config, gait, settings, n_cycles):
    traj = simulate(config, gait, n_cycles=n_cycles, settings=settings)
    m = displacement_per_cycle(traj)
    steady = m.per_cycle[1:] if m.n_cycles >= 2 else m.per_cycle
    mean = float(np.mean(steady))
    if abs(mean) <= 1e-9:
        return CheckResult(
            "per_cycle_consistency", True,
            f"net motion below 1e-9 m/cycle ({mean:.2e}); spread "
            f"check not applicable")
    cv = float(np.std(steady) / abs(mean))
    ok = cv < 0.10
    return CheckResult(
        "per_cycle_consistency", ok,
        f"mean {mean:.3e} m/cycle, spread/mean {cv:.3%} over "
        f"cycles 2..{m.n_cycles}")


def _check_mechanism(mechanism):
    t = np.linspace(0.0, 2.0 * mechanism.half_period, 501)
    pos = np.array([carriage_position(ti, mechanism) for ti in t])
    reach = float(pos.max())
    ok = (pos.min() >= -1e-15 and reach <= mechanism.shaft_travel + 1e-15
          and abs(pos[-1]) <= 1e-12)
    return CheckResult(
        "carriage_within_travel", ok,
        f"peak {reach * 1e3:.3f} mm of {mechanism.shaft_travel * 1e3:.1f} mm "
        f"travel, returns to 0")


def _check_reynolds(config, gait, settings):
    traj = simulate(config, gait, n_cycles=2, settings=settings)
    m = displacement_per_cycle(traj)
    speed = abs(m.mean) / m.period
    re = reynolds_number(max(speed, 1e-12), config.body.length, config.fluid)
    ok = re < 1e-2
    return CheckResult("creeping_flow_regime", ok,
                       f"Re = {re:.3e} at {speed:.3e} m/s")


def _check_gait_continuity(gait):
    if gait.mode == "reciprocal_prescribed":
        return CheckResult("gait_schedule_periodic", True,
                           "skipped: prescribed-angle mode")
    h = 1e-7
    a0 = gait_evaluate(gait, 0.0)
    a1 = gait_evaluate(gait, 1.0 - h)
    jump = max(abs(a1.stiffness - a0.stiffness) / gait.k_max,
               abs(a1.rest_angle - a0.rest_angle) / max(abs(gait.beta), 1e-12))
    ok = jump <= 1e-5
    return CheckResult("gait_schedule_periodic", ok,
                       f"relative wrap mismatch {jump:.2e}")


def run_verification(config, mechanism, gait, settings=None, n_cycles=None):
    """Run every invariant check; returns a VerificationReport."""
    settings = settings or SimSettings()
    cycles = n_cycles or min(settings.n_cycles, 10)
    checks = (
        _check_resistance(config),
        _check_viscosity_linearity(config),
        _check_equilibrium(config, settings),
        _check_gait_continuity(gait),
        _check_mechanism(mechanism),
        _check_determinism(config, gait, settings),
        _check_mirror(config, gait, settings),
        _check_se2(config, gait, settings),
        _check_displacement(config, gait, settings, cycles),
        _check_reynolds(config, gait, settings),
        _check_scallop(config, settings),
    )
    return VerificationReport(checks=checks,
                              passed=all(c.passed for c in checks))
