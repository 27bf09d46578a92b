"""Low-Reynolds drag model: slender-rod coefficients and the resistance matrix.

Each link is a straight rod dragged through Stokes flow.  Local resistive
coefficients (force per unit length per unit speed) come from the classical
slender-body logarithm evaluated with the full filament length; the normal
coefficient is an anisotropy ratio times the tangential one.  Integrating the
local law over a rod moving rigidly gives a per-link 3x3 drag block, and
mapping those blocks through the link Jacobians yields the grand resistance
matrix R(q), symmetric positive definite for any valid configuration.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernel
from .kinematics import (ConfigError, FluidModel, FlagellumConfig, LinkFrame,
                         layout, validate_config)

__all__ = [
    "DragCoefficients",
    "rft_coefficients",
    "link_drag_wrench",
    "assemble_resistance_matrix",
    "reynolds_number",
]


@dataclass(frozen=True)
class DragCoefficients:
    """Per-unit-length resistive coefficients of a slender rod.

    tangential: drag per unit length per unit speed along the rod axis.
    normal: same across the axis; exceeds tangential for a slender rod,
    which is the anisotropy that makes drag-based swimming possible.
    """

    tangential: float
    normal: float

    def __post_init__(self):
        if not self.tangential > 0:
            raise ConfigError(
                f"drag tangential coefficient must be > 0, got {self.tangential}")
        if not self.normal > self.tangential:
            raise ConfigError(
                "drag normal coefficient must exceed the tangential one, got "
                f"normal={self.normal} tangential={self.tangential}")


def _rod_coefficients(viscosity, total_length, radius, ratio):
    # 2 L / r must stay above 1 or the slender-rod log changes sign
    slenderness = 2.0 * total_length / radius
    if slenderness <= 1.0:
        raise ConfigError(
            "rod is too thick for slender-rod drag: need 2*length/radius > 1, "
            f"got length={total_length} radius={radius}")
    tangential = 2.0 * math.pi * viscosity / math.log(slenderness)
    return DragCoefficients(tangential=tangential, normal=ratio * tangential)


def rft_coefficients(fluid, flagellum, ratio=2.0):
    """Resistive coefficients for one flagellum in the given fluid.

    The logarithm uses the whole filament length (all segments), not the
    single-segment length, so splitting a filament into more segments does
    not change its drag per unit length.
    """
    if not isinstance(fluid, FluidModel):
        raise TypeError(f"expected FluidModel, got {type(fluid).__name__}")
    if not isinstance(flagellum, FlagellumConfig):
        raise TypeError(
            f"expected FlagellumConfig, got {type(flagellum).__name__}")
    if not ratio > 1:
        raise ConfigError(f"drag anisotropy ratio must be > 1, got {ratio}")
    total = flagellum.n_segments * flagellum.segment_length
    return _rod_coefficients(fluid.viscosity, total, flagellum.segment_radius,
                             ratio)


def link_drag_wrench(frame, velocity, coeffs):
    """Drag force and torque on one rigidly moving rod.

    velocity is (vx, vy, omega) of the rod center.  The force opposes the
    center velocity split into tangential and normal parts; spin about the
    center costs a torque of normal-coefficient * L^3 / 12 per unit rate
    (the second moment of the normal drag along the rod).  Returns
    (force (2,), torque float).
    """
    if not isinstance(frame, LinkFrame):
        raise TypeError(f"expected LinkFrame, got {type(frame).__name__}")
    v = np.asarray(velocity, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"velocity must have shape (3,), got {v.shape}")
    tangent = np.array([math.cos(frame.angle), math.sin(frame.angle)])
    v_t = float(v[:2] @ tangent)
    v_n = v[:2] - v_t * tangent
    force = -frame.length * (coeffs.tangential * v_t * tangent
                             + coeffs.normal * v_n)
    torque = -coeffs.normal * frame.length ** 3 / 12.0 * float(v[2])
    return force, torque


@lru_cache(maxsize=128)
def _drag_arrays(config):
    """Per-joint-link drag products (c_t L, c_n L, c_n L^3/12) plus body's."""
    lay = layout(config)
    ct_l = np.empty(lay.n_joints)
    cn_l = np.empty(lay.n_joints)
    cn_l3 = np.empty(lay.n_joints)
    for f, flag in enumerate(config.flagella):
        coeffs = rft_coefficients(config.fluid, flag, config.drag_ratio)
        seg = flag.segment_length
        lo = lay.flag_start[f]
        hi = lo + flag.n_segments
        ct_l[lo:hi] = coeffs.tangential * seg
        cn_l[lo:hi] = coeffs.normal * seg
        cn_l3[lo:hi] = coeffs.normal * seg ** 3 / 12.0
    body = _rod_coefficients(config.fluid.viscosity, config.body.length,
                             config.body.radius, config.drag_ratio)
    bl = config.body.length
    for arr in (ct_l, cn_l, cn_l3):
        arr.setflags(write=False)
    return (ct_l, cn_l, cn_l3, body.tangential * bl, body.normal * bl,
            body.normal * bl ** 3 / 12.0)


def assemble_resistance_matrix(q, config):
    """Grand resistance matrix R(q), shape (dim, dim).

    R maps generalized velocity to generalized drag wrench with a minus sign:
    drag = -R qdot.  Symmetric positive definite whenever the config passes
    validation; scales linearly with viscosity.  A config with no flagella is
    accepted here (only here): the result is the 3x3 resistance of the bare
    body rod.
    """
    validate_config(config, allow_empty_flagella=True)
    lay = layout(config)
    q = np.ascontiguousarray(q, dtype=float)
    if q.shape != (lay.dim,):
        raise ValueError(f"q must have shape ({lay.dim},), got {q.shape}")
    drag = _drag_arrays(config)
    return _kernel.assemble_resistance(q, lay.flag_start, lay.flag_id, lay.sign,
                                       lay.base_angle, lay.seg_length,
                                       lay.attach_offset, *drag)


def reynolds_number(speed, length, fluid):
    """Re = density * speed * length / viscosity for a given scale pair."""
    if not isinstance(fluid, FluidModel):
        raise TypeError(f"expected FluidModel, got {type(fluid).__name__}")
    if speed < 0:
        raise ValueError(f"speed must be >= 0, got {speed}")
    if not length > 0:
        raise ValueError(f"length must be > 0, got {length}")
    if not (fluid.viscosity > 0 and fluid.density > 0):
        raise ConfigError("fluid viscosity and density must be > 0")
    return fluid.density * speed * length / fluid.viscosity
