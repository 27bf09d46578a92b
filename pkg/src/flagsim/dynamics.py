"""Overdamped equations of motion and their implicit time integration.

In the Stokes regime inertia is negligible, so the state evolves by the
first-order balance R(q) qdot = Q(q, t): drag against elastic joint torque.
The body rows of Q are zero (the swimmer is force- and torque-free), which
is what makes net locomotion a pure consequence of drag anisotropy.

Two A-stable one-step schemes are provided.  The default implicit midpoint
rule is second order and time-symmetric; backward Euler is first order and
heavily damped.  Both solve their stage equation with a quasi-Newton
iteration whose matrix R + w dt K captures the stiff elastic term exactly,
and retry with halved substeps if the iteration stalls.
"""

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from . import _kernel
from .actuation import GaitSchedule, gait_evaluate, validate_gait, _gait_codes
from .hydrodynamics import _drag_arrays, assemble_resistance_matrix
from .kinematics import (ConfigError, GeneralizedCoords, layout,
                         validate_config)

__all__ = [
    "SimSettings",
    "Trajectory",
    "PrescribedTrajectory",
    "SimulationError",
    "NewtonConvergenceError",
    "SingularConfigurationError",
    "validate_settings",
    "solve_velocity",
    "step",
    "simulate",
    "simulate_prescribed",
    "reciprocal_sinusoid",
    "warped_reciprocal",
    "traveling_wave",
]

_SCHEME_CODES = {
    "implicit_midpoint": _kernel.SCHEME_MIDPOINT,
    "backward_euler": _kernel.SCHEME_BACKWARD_EULER,
}


class SimulationError(RuntimeError):
    """Base class for numerical failures during integration."""


class NewtonConvergenceError(SimulationError):
    """The implicit stage iteration did not converge even after halving."""


class SingularConfigurationError(SimulationError):
    """The resistance matrix lost definiteness or exceeded the condition limit."""


@dataclass(frozen=True)
class SimSettings:
    """Integration controls.

    dt: step size in seconds; None picks period/2000.  The actual step is
        rounded so a cycle holds a whole number of steps.
    scheme: "implicit_midpoint" (default) or "backward_euler".
    newton_tol: stage-iteration tolerance on the displacement-form residual.
    newton_max_iter: iteration cap per stage before halving kicks in.
    max_halvings: how many times a failing step may be cut in half.
    condition_limit: reject states whose resistance matrix is worse
        conditioned than this.
    n_cycles: default cycle count for simulate() and the CLI.
    """

    dt: Optional[float] = None
    scheme: str = "implicit_midpoint"
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    max_halvings: int = 10
    condition_limit: float = 1e12
    n_cycles: int = 10


def validate_settings(settings):
    """Check integration-control invariants; return settings unchanged."""
    if settings.dt is not None and not settings.dt > 0:
        raise ConfigError(f"sim.dt must be > 0 or None, got {settings.dt}")
    if settings.scheme not in _SCHEME_CODES:
        raise ConfigError(
            f"sim.scheme must be one of {tuple(_SCHEME_CODES)}, got "
            f"{settings.scheme!r}")
    if not settings.newton_tol > 0:
        raise ConfigError(
            f"sim.newton_tol must be > 0, got {settings.newton_tol}")
    if not (isinstance(settings.newton_max_iter, int)
            and settings.newton_max_iter >= 1):
        raise ConfigError(
            f"sim.newton_max_iter must be an int >= 1, got "
            f"{settings.newton_max_iter}")
    if not (isinstance(settings.max_halvings, int)
            and settings.max_halvings >= 0):
        raise ConfigError(
            f"sim.max_halvings must be an int >= 0, got {settings.max_halvings}")
    if not settings.condition_limit > 1:
        raise ConfigError(
            f"sim.condition_limit must be > 1, got {settings.condition_limit}")
    if not (isinstance(settings.n_cycles, int) and settings.n_cycles >= 1):
        raise ConfigError(
            f"sim.n_cycles must be an int >= 1, got {settings.n_cycles}")
    return settings


@dataclass(frozen=True)
class Trajectory:
    """Recorded states of one run, sampled on the integration grid.

    t: sample times (n,), starting at 0.
    q: generalized coordinates (n, dim); columns are x, y, body heading,
        then joint angles flagellum by flagellum.
    phase: cycle phase (t / period) mod 1 at each sample.
    stiffness: shared joint stiffness at each sample; NaN for prescribed runs.
    steps_per_cycle: integration steps per cycle (cycle boundaries land
        exactly on samples).
    gait: schedule that produced the run, None for prescribed-angle runs.
    settings: integration controls with the rounded dt filled in.
    """

    t: np.ndarray
    q: np.ndarray
    phase: np.ndarray
    stiffness: np.ndarray
    period: float
    steps_per_cycle: int
    config: object
    gait: Optional[GaitSchedule]
    settings: SimSettings

    @property
    def n_samples(self):
        return len(self.t)

    @property
    def n_cycles(self):
        return (self.n_samples - 1) // self.steps_per_cycle

    @property
    def body_xy(self):
        """Body center positions, shape (n, 2)."""
        return self.q[:, 0:2]

    @property
    def heading(self):
        """Body axis angle at each sample."""
        return self.q[:, 2]

    @property
    def joint_angles(self):
        """Joint angles, shape (n, n_joints)."""
        return self.q[:, 3:]


@dataclass(frozen=True)
class PrescribedTrajectory:
    """Joint angles imposed as a function of time, bypassing elasticity.

    angles(t) must return all joint angles at time t; rates(t), when given,
    returns their exact time derivatives (otherwise a central difference
    with h = 1e-6 * period is used).
    """

    period: float
    angles: Callable[[float], np.ndarray]
    rates: Optional[Callable[[float], np.ndarray]] = None


@lru_cache(maxsize=64)
def _compiled(config):
    validate_config(config)
    lay = layout(config)
    drag = _drag_arrays(config)
    return lay, drag


def _kernel_args(lay, drag):
    return (lay.flag_start, lay.flag_id, lay.sign, lay.base_angle,
            lay.seg_length, lay.attach_offset) + drag


def _raise_for_status(status, t):
    if status == 1:
        raise NewtonConvergenceError(
            f"implicit stage iteration failed to converge near t={t:.6g} s")
    if status == 2:
        raise SingularConfigurationError(
            f"resistance matrix lost positive definiteness near t={t:.6g} s")
    if status == 3:
        raise SingularConfigurationError(
            f"resistance matrix condition estimate exceeded the limit near "
            f"t={t:.6g} s")


def _as_state(state, dim):
    if isinstance(state, GeneralizedCoords):
        state = state.as_vector()
    q = np.ascontiguousarray(state, dtype=float)
    if q.shape != (dim,):
        raise ValueError(f"state must have shape ({dim},), got {q.shape}")
    return q


def solve_velocity(q, t, config, gait, settings=None):
    """Instantaneous generalized velocity qdot = R(q)^-1 Q at time t.

    Q is the elastic generalized force of the gait's schedule evaluated at
    phase (t / period) mod 1; a JointActuation may be passed directly in
    place of (t, gait) by giving t=None.  Solves to a residual of at most
    1e-12 * |Q| by iterative refinement and raises
    SingularConfigurationError when R is not positive definite or its exact
    condition number exceeds settings.condition_limit.
    """
    from .actuation import JointActuation, elastic_generalized_force

    if settings is None:
        settings = SimSettings()
    validate_settings(settings)
    if t is None:
        if not isinstance(gait, JointActuation):
            raise TypeError("with t=None, gait must be a JointActuation")
        actuation = gait
    else:
        if isinstance(gait, JointActuation):
            raise TypeError("a JointActuation carries no clock; pass t=None")
        validate_gait(gait)
        if gait.mode == "reciprocal_prescribed":
            raise ConfigError(
                "solve_velocity applies to elastic gaits; prescribed-angle "
                "runs fix the joint rates instead")
        actuation = gait_evaluate(gait, (t / gait.period) % 1.0)
    R = assemble_resistance_matrix(q, config)
    Q = elastic_generalized_force(q, actuation, config)
    eig = scipy.linalg.eigvalsh(R)
    if eig[0] <= 0:
        raise SingularConfigurationError(
            f"resistance matrix is not positive definite (min eigenvalue "
            f"{eig[0]:.3e})")
    cond = eig[-1] / eig[0]
    if cond > settings.condition_limit:
        raise SingularConfigurationError(
            f"resistance matrix condition number {cond:.3e} exceeds the limit "
            f"{settings.condition_limit:.3e}")
    norm_q = np.linalg.norm(Q)
    if norm_q == 0.0:
        return np.zeros_like(Q)
    cho = scipy.linalg.cho_factor(R, lower=True)
    v = scipy.linalg.cho_solve(cho, Q)
    for _ in range(5):
        r = Q - R @ v
        if np.linalg.norm(r) <= 1e-12 * norm_q:
            return v
        v = v + scipy.linalg.cho_solve(cho, r)
    raise SingularConfigurationError(
        "velocity solve could not reach the required residual; the "
        "configuration is too ill-conditioned")


def step(q, t, dt, config, gait, settings=None):
    """Advance one step of size dt from (t, q); returns the new state.

    Retries internally with up to settings.max_halvings halvings when the
    stage iteration stalls.
    """
    if settings is None:
        settings = SimSettings()
    validate_settings(settings)
    validate_gait(gait)
    if gait.mode == "reciprocal_prescribed":
        raise ConfigError(
            "step() integrates elastic gaits; use simulate_prescribed for "
            "prescribed-angle runs")
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    lay, drag = _compiled(config)
    q = _as_state(q, lay.dim)
    codes = _gait_codes(gait)
    act = gait_evaluate(gait, (t / gait.period) % 1.0)
    v_pred, status = _kernel.velocity(q, act.stiffness, act.rest_angle,
                                      *_kernel_args(lay, drag),
                                      settings.condition_limit)
    _raise_for_status(status, t)
    qn, status = _kernel.advance(q, t, dt, v_pred, settings.max_halvings,
                                 _SCHEME_CODES[settings.scheme], *codes,
                                 settings.newton_tol, settings.newton_max_iter,
                                 settings.condition_limit,
                                 *_kernel_args(lay, drag))
    _raise_for_status(status, t)
    return qn


def _time_grid(period, settings, n_cycles):
    dt_nominal = settings.dt if settings.dt is not None else period / 2000.0
    steps_per_cycle = max(1, round(period / dt_nominal))
    dt = period / steps_per_cycle
    return dt, steps_per_cycle, steps_per_cycle * n_cycles


def simulate(config, gait, n_cycles=None, settings=None, initial_state=None):
    """Integrate n_cycles stroke cycles; returns the recorded Trajectory.

    The default initial state sits at the origin with every joint at its
    phase-0 rest angle.  Prescribed-mode gaits are dispatched to
    simulate_prescribed with a reciprocal sinusoid of amplitude gait.beta.
    """
    if settings is None:
        settings = SimSettings()
    validate_settings(settings)
    validate_config(config)
    validate_gait(gait)
    if n_cycles is None:
        n_cycles = settings.n_cycles
    if not (isinstance(n_cycles, int) and n_cycles >= 1):
        raise ValueError(f"n_cycles must be an int >= 1, got {n_cycles}")
    if gait.mode == "reciprocal_prescribed":
        prescribed = reciprocal_sinusoid(config, gait.beta, gait.period)
        return simulate_prescribed(config, prescribed, n_cycles=n_cycles,
                                   settings=settings,
                                   initial_body=initial_state)
    lay, drag = _compiled(config)
    dt, spc, n_steps = _time_grid(gait.period, settings, n_cycles)
    if initial_state is None:
        q0 = np.zeros(lay.dim)
        q0[3:] = gait_evaluate(gait, 0.0).rest_angle
    else:
        q0 = _as_state(initial_state, lay.dim)
    out_q = np.empty((n_steps + 1, lay.dim))
    codes = _gait_codes(gait)
    n_done, status = _kernel.simulate_loop(
        q0, n_steps, dt, out_q, settings.max_halvings,
        _SCHEME_CODES[settings.scheme], *codes, settings.newton_tol,
        settings.newton_max_iter, settings.condition_limit,
        *_kernel_args(lay, drag))
    if status != 0:
        _raise_for_status(status, n_done * dt)
    t = np.arange(n_steps + 1) * dt
    phase = (t / gait.period) % 1.0
    stiffness = np.asarray(gait_evaluate(gait, phase).stiffness, dtype=float)
    return Trajectory(t=t, q=out_q, phase=phase, stiffness=stiffness,
                      period=gait.period, steps_per_cycle=spc, config=config,
                      gait=gait, settings=replace(settings, dt=dt))


def simulate_prescribed(config, prescribed, n_cycles=None, settings=None,
                        initial_body=None):
    """Integrate the free body while the joint angles follow a prescription.

    Only the three body coordinates are unknowns; each implicit step solves
    the body-block balance R_bb bdot = -R_bj thetadot at the stage point.
    An extra polishing iteration after the tolerance is met keeps the
    per-step error well below newton_tol, which matters when checking that
    reciprocal prescriptions produce no net motion.
    """
    if settings is None:
        settings = SimSettings()
    validate_settings(settings)
    validate_config(config)
    if not prescribed.period > 0:
        raise ConfigError(
            f"prescribed period must be > 0, got {prescribed.period}")
    if n_cycles is None:
        n_cycles = settings.n_cycles
    if not (isinstance(n_cycles, int) and n_cycles >= 1):
        raise ValueError(f"n_cycles must be an int >= 1, got {n_cycles}")
    lay, drag = _compiled(config)
    args = _kernel_args(lay, drag)
    period = prescribed.period
    dt, spc, n_steps = _time_grid(period, settings, n_cycles)
    midpoint = settings.scheme == "implicit_midpoint"

    def angles_at(t):
        th = np.asarray(prescribed.angles(t), dtype=float)
        if th.shape != (lay.n_joints,):
            raise ValueError(
                f"prescribed.angles(t) must have shape ({lay.n_joints},), "
                f"got {th.shape}")
        return th

    if prescribed.rates is not None:
        rates_at = lambda t: np.asarray(prescribed.rates(t), dtype=float)
    else:
        h = 1e-6 * period
        rates_at = lambda t: (angles_at(t + h) - angles_at(t - h)) / (2.0 * h)

    if initial_body is None:
        b = np.zeros(3)
    else:
        b = np.ascontiguousarray(initial_body, dtype=float)
        if b.shape != (3,):
            raise ValueError(
                f"initial_body must have shape (3,), got {b.shape}")

    def body_block(bvec, theta):
        qfull = np.concatenate([bvec, theta])
        R = _kernel.assemble_resistance(qfull, *args)
        return R[:3, :3], R[:3, 3:]

    out_q = np.empty((n_steps + 1, lay.dim))
    out_q[0, :3] = b
    out_q[0, 3:] = angles_at(0.0)
    Rbb, Rbj = body_block(b, out_q[0, 3:])
    v_pred = np.linalg.solve(Rbb, -Rbj @ rates_at(0.0))
    for i in range(n_steps):
        t0 = i * dt
        tc = t0 + 0.5 * dt if midpoint else t0 + dt
        theta_c = angles_at(tc)
        dtheta = dt * rates_at(tc)
        y = b + dt * v_pred
        converged = False
        for _ in range(settings.newton_max_iter):
            bc = 0.5 * (b + y) if midpoint else y
            Rbb, Rbj = body_block(bc, theta_c)
            G = Rbb @ (y - b) + Rbj @ dtheta
            delta = np.linalg.solve(Rbb, G)
            y = y - delta
            if converged:
                break
            if np.linalg.norm(delta) <= settings.newton_tol:
                converged = True  # one more polish pass, then stop
        if not converged:
            raise NewtonConvergenceError(
                f"prescribed-mode stage iteration failed near t={t0:.6g} s")
        v_pred = (y - b) / dt
        b = y
        out_q[i + 1, :3] = b
        out_q[i + 1, 3:] = angles_at((i + 1) * dt)
    t = np.arange(n_steps + 1) * dt
    phase = (t / period) % 1.0
    return Trajectory(t=t, q=out_q, phase=phase,
                      stiffness=np.full(n_steps + 1, np.nan), period=period,
                      steps_per_cycle=spc, config=config, gait=None,
                      settings=replace(settings, dt=dt))


def reciprocal_sinusoid(config, amplitude, period):
    """All joints follow one sinusoid: the canonical reciprocal stroke.

    The shape path is a straight segment in joint space traced forth and
    back, so by the scallop theorem the exact dynamics return the body to
    its starting pose every cycle.
    """
    lay = layout(config)
    n = lay.n_joints
    w = 2.0 * math.pi / period

    def angles(t):
        return np.full(n, amplitude * math.sin(w * t))

    def rates(t):
        return np.full(n, amplitude * w * math.cos(w * t))

    return PrescribedTrajectory(period=period, angles=angles, rates=rates)


def warped_reciprocal(config, amplitude, period, rise_fraction=0.4):
    """Reciprocal stroke with different rise and fall waveforms.

    Still retraces the same joint-space segment (so exact dynamics give zero
    net motion) but is not symmetric under time reversal about any point,
    which defeats the exact error cancellation a time-symmetric integrator
    enjoys on plain sinusoids.  Useful as a discretization-error probe.
    """
    lay = layout(config)
    n = lay.n_joints
    if not 0 < rise_fraction < 1:
        raise ValueError(
            f"rise_fraction must lie in (0, 1), got {rise_fraction}")
    t_rise = rise_fraction * period
    t_fall = period - t_rise

    def envelope(t):
        tau = t % period
        if tau < t_rise:
            s = tau / t_rise
            return 0.5 * (1.0 - math.cos(math.pi * s))
        s = (tau - t_rise) / t_fall
        return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)

    def envelope_rate(t):
        tau = t % period
        if tau < t_rise:
            s = tau / t_rise
            return 0.5 * math.pi * math.sin(math.pi * s) / t_rise
        s = (tau - t_rise) / t_fall
        return -30.0 * s * s * (1.0 - s) * (1.0 - s) / t_fall

    def angles(t):
        return np.full(n, amplitude * envelope(t))

    def rates(t):
        return np.full(n, amplitude * envelope_rate(t))

    return PrescribedTrajectory(period=period, angles=angles, rates=rates)


def traveling_wave(config, amplitude, period, lag=0.7):
    """Phase-lagged sinusoids along each flagellum: a non-reciprocal stroke.

    Adjacent joints lag by `lag` radians, so the joint-space path encloses
    area and the swimmer must drift; serves as the moving counterexample
    next to the reciprocal strokes.
    """
    lay = layout(config)
    w = 2.0 * math.pi / period
    index_along = np.empty(lay.n_joints)
    for j in range(lay.n_joints):
        index_along[j] = j - lay.flag_start[lay.flag_id[j]]

    def angles(t):
        return amplitude * np.sin(w * t - lag * index_along)

    def rates(t):
        return amplitude * w * np.cos(w * t - lag * index_along)

    return PrescribedTrajectory(period=period, angles=angles, rates=rates)
