"""Actuation: stroke-cycle stiffness/rest-shape schedules and the drive mechanism.

The swimmer's joints share one time-varying torsional stiffness k and one
rest angle.  Over a cycle of period T the schedule sweeps stiffness from
k_max (rigid) down to k_min (flexible) and back while the rest shape bends
from straight to a curl of amplitude beta and back.  Because stiffness and
shape follow different effective waveforms, the stroke is non-reciprocal
even though each scalar schedule retraces itself.

The physical drive is a motor-driven lead screw shuttling a carriage back
and forth; its kinematics fix the cycle period and are modeled here only to
pin the time scale and validate travel limits.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .kinematics import ConfigError, layout, validate_config

__all__ = [
    "MechanismConfig",
    "GaitSchedule",
    "JointActuation",
    "GAIT_MODES",
    "RAMP_SHAPES",
    "default_mechanism_config",
    "validate_mechanism",
    "validate_gait",
    "carriage_position",
    "gait_evaluate",
    "elastic_generalized_force",
]

# schedule modes: how the shared stiffness behaves over the cycle
GAIT_MODES = ("controlled_flexible", "fully_flexible", "fully_rigid",
              "reciprocal_prescribed")
RAMP_SHAPES = ("cosine", "linear_smoothed")

_MODE_CODES = {
    "controlled_flexible": _kernel.MODE_CONTROLLED,
    "fully_flexible": _kernel.MODE_FLEXIBLE,
    "fully_rigid": _kernel.MODE_RIGID,
}
_RAMP_CODES = {
    "cosine": _kernel.RAMP_COSINE,
    "linear_smoothed": _kernel.RAMP_LINEAR_SMOOTHED,
}


@dataclass(frozen=True)
class MechanismConfig:
    """Lead-screw drive: motor speed, screw pitch, travel limit, stroke time.

    motor_rpm: motor speed in revolutions per minute.
    thread_pitch: carriage advance per revolution, meters.
    shaft_travel: usable shaft length, meters; the carriage must never
        run past it.
    half_period: seconds spent moving one way before reversing.
    """

    motor_rpm: float = 100.0
    thread_pitch: float = 0.0025
    shaft_travel: float = 0.053
    half_period: float = 5.0


def default_mechanism_config():
    """Drive settings of the reference build (100 rpm, 2.5 mm pitch)."""
    return MechanismConfig()


def validate_mechanism(mech):
    """Check drive invariants; return mech unchanged."""
    for name in ("motor_rpm", "thread_pitch", "shaft_travel", "half_period"):
        value = getattr(mech, name)
        if not value > 0:
            raise ConfigError(f"mechanism.{name} must be > 0, got {value}")
    reach = mech.motor_rpm / 60.0 * mech.thread_pitch * mech.half_period
    if reach > mech.shaft_travel:
        raise ConfigError(
            "mechanism: carriage would overrun the shaft: reach "
            f"{reach:.6g} m > shaft_travel {mech.shaft_travel:.6g} m")
    return mech


def carriage_position(t, mech):
    """Carriage displacement at time t: a triangular wave starting at 0.

    Constant speed motor_rpm/60 * thread_pitch, reversing every half_period.
    Accepts scalar or array t; negative t wraps periodically.
    """
    validate_mechanism(mech)
    speed = mech.motor_rpm / 60.0 * mech.thread_pitch
    period = 2.0 * mech.half_period
    tau = np.asarray(t, dtype=float) % period
    pos = speed * np.where(tau <= mech.half_period, tau, period - tau)
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(pos)
    return pos


@dataclass(frozen=True)
class GaitSchedule:
    """One stroke cycle of the shared stiffness and rest-shape schedules.

    mode: "controlled_flexible" sweeps stiffness k_max -> k_min -> k_max;
        "fully_flexible" / "fully_rigid" hold k at k_min / k_max (controls);
        "reciprocal_prescribed" ignores elasticity and drives the joint
        angles directly through a reciprocal sinusoid of amplitude beta.
    period: cycle duration in seconds.
    k_min, k_max: stiffness extremes, N m / rad.
    beta: rest-curl amplitude per joint, rad; |beta| < pi/2 keeps segments
        from folding onto each other.
    ramp: waveform of both schedules, "cosine" or "linear_smoothed".
    duty: fraction of the cycle the stiffness spends reaching its flexible
        extreme; 0.5 gives the symmetric waveform.  Warps the stiffness
        schedule only.
    phase_offset: cycle fraction by which the stiffness schedule is delayed
        relative to the rest-shape schedule (which always peaks mid-cycle).
    """

    mode: str = "controlled_flexible"
    period: float = 10.0
    k_min: float = 1e-4
    k_max: float = 1.0
    beta: float = 0.7
    ramp: str = "cosine"
    duty: float = 0.5
    phase_offset: float = 0.0


@dataclass(frozen=True)
class JointActuation:
    """Snapshot of the elastic drive at one instant: stiffness and rest angle.

    Either field may be a scalar shared by all joints or a per-joint array.
    """

    stiffness: object
    rest_angle: object


def validate_gait(gait):
    """Check schedule invariants; return gait unchanged."""
    if gait.mode not in GAIT_MODES:
        raise ConfigError(
            f"gait.mode must be one of {GAIT_MODES}, got {gait.mode!r}")
    if gait.ramp not in RAMP_SHAPES:
        raise ConfigError(
            f"gait.ramp must be one of {RAMP_SHAPES}, got {gait.ramp!r}")
    if not gait.period > 0:
        raise ConfigError(f"gait.period must be > 0, got {gait.period}")
    if not 0 < gait.k_min <= gait.k_max:
        raise ConfigError(
            "gait stiffness must satisfy 0 < k_min <= k_max, got "
            f"k_min={gait.k_min} k_max={gait.k_max}")
    if gait.k_max / gait.k_min > 1e6:
        raise ConfigError(
            "gait stiffness ratio k_max/k_min must be <= 1e6, got "
            f"{gait.k_max / gait.k_min:.3g}")
    if not abs(gait.beta) < math.pi / 2:
        raise ConfigError(f"gait.beta must satisfy |beta| < pi/2, got {gait.beta}")
    if not 0 < gait.duty < 1:
        raise ConfigError(f"gait.duty must lie in (0, 1), got {gait.duty}")
    if not 0 <= gait.phase_offset < 1:
        raise ConfigError(
            f"gait.phase_offset must lie in [0, 1), got {gait.phase_offset}")
    return gait


def _ramp_shape(ramp, u):
    if ramp == "cosine":
        return 0.5 * (1.0 - np.cos(2.0 * np.pi * u))
    tri = 1.0 - np.abs(2.0 * u - 1.0)
    return tri * tri * (3.0 - 2.0 * tri)


def _phase_warp(phase, duty):
    p = np.mod(phase, 1.0)
    return np.where(p < duty, 0.5 * p / duty,
                    0.5 + 0.5 * (p - duty) / (1.0 - duty))


def gait_evaluate(gait, phase):
    """Stiffness and rest angle at a cycle phase in [0, 1).

    Scalar phase gives scalar fields; an array of phases gives arrays.
    Prescribed-mode schedules have no elastic state and are rejected.
    """
    validate_gait(gait)
    if gait.mode == "reciprocal_prescribed":
        raise ConfigError(
            "gait.mode 'reciprocal_prescribed' drives angles directly and has "
            "no stiffness schedule")
    p = np.asarray(phase, dtype=float)
    if np.any(p < 0) or np.any(p >= 1):
        raise ValueError(f"phase must lie in [0, 1), got {phase}")
    # duty and phase_offset deform the stiffness schedule only; the
    # rest-angle schedule always follows the plain ramp of the cycle
    lam_k = _ramp_shape(gait.ramp, _phase_warp(p - gait.phase_offset, gait.duty))
    lam_r = _ramp_shape(gait.ramp, p)
    if gait.mode == "fully_flexible":
        k = np.full_like(lam_k, gait.k_min)
    elif gait.mode == "fully_rigid":
        k = np.full_like(lam_k, gait.k_max)
    else:
        k = gait.k_max + (gait.k_min - gait.k_max) * lam_k
    rest = gait.beta * lam_r
    if p.ndim == 0:
        return JointActuation(stiffness=float(k), rest_angle=float(rest))
    return JointActuation(stiffness=k, rest_angle=rest)


def elastic_generalized_force(q, actuation, config):
    """Generalized force of the torsional springs: -k (theta - rest) per joint.

    Body rows are exactly zero; the swimmer is force- and torque-free, all
    net motion comes through the drag coupling.
    """
    validate_config(config)
    lay = layout(config)
    q = np.asarray(q, dtype=float)
    if q.shape != (lay.dim,):
        raise ValueError(f"q must have shape ({lay.dim},), got {q.shape}")
    k = np.asarray(actuation.stiffness, dtype=float)
    rest = np.asarray(actuation.rest_angle, dtype=float)
    for name, arr in (("stiffness", k), ("rest_angle", rest)):
        if arr.ndim not in (0, 1) or (arr.ndim == 1 and len(arr) != lay.n_joints):
            raise ValueError(
                f"actuation.{name} must be scalar or shape ({lay.n_joints},), "
                f"got shape {arr.shape}")
    if np.any(k < 0):
        raise ConfigError(f"actuation.stiffness must be >= 0, got {actuation.stiffness}")
    Q = np.zeros(lay.dim)
    Q[3:] = -k * (q[3:] - rest)
    return Q


def _gait_codes(gait):
    """Kernel-facing scalar tuple (mode, ramp, period, k_min, k_max, beta,
    duty, phase_offset)."""
    validate_gait(gait)
    return (_MODE_CODES[gait.mode], _RAMP_CODES[gait.ramp], gait.period,
            gait.k_min, gait.k_max, gait.beta, gait.duty, gait.phase_offset)
