"""Planar articulated kinematics of a body with hinged multi-segment flagella.

Conventions used throughout the package:

* The generalized coordinate vector is ``q = [x, y, phi, theta_0, theta_1, ...]``
  where ``(x, y)`` is the body center in the world frame, ``phi`` the body
  orientation, and the joint angles are stacked flagellum-major (all joints of
  flagellum 0, then flagellum 1, ...).  ``dim(q) = 3 + total joint count``.
* Link 0 is the body.  Flagellum segments follow in the same flagellum-major
  order, one rigid link per segment.
* Each segment hinges at its proximal end; joint ``j`` of a flagellum measures
  the angle of segment ``j`` relative to the previous link (the body axis plus
  the attachment angle for ``j = 0``).
* A mirrored flagellum is the reflection of the unmirrored one across the body
  axis: with equal joint angles its frames are reflections of the original.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "ConfigError",
    "FluidModel",
    "BodyConfig",
    "FlagellumConfig",
    "RobotConfig",
    "GeneralizedCoords",
    "LinkFrames",
    "default_robot_config",
    "validate_config",
    "forward_kinematics",
    "link_jacobian",
    "coordinate_dimension",
]


class ConfigError(ValueError):
    """A configuration invariant is violated.  The message names the field."""


@dataclass(frozen=True)
class FluidModel:
    """Newtonian fluid: dynamic viscosity [Pa s] and density [kg/m^3]."""

    viscosity: float = 1.49
    density: float = 1000.0


@dataclass(frozen=True)
class BodyConfig:
    """Rigid body treated as a slender rod of given length and radius [m].

    ``mass`` is carried for completeness only; inertia plays no role in the
    overdamped force balance.
    """

    length: float = 0.126
    radius: float = 0.02
    mass: float = 0.125


@dataclass(frozen=True)
class FlagellumConfig:
    """One flagellum: a chain of identical hinged segments.

    attachment_offset is measured along the body axis from the body center;
    attachment_angle is the rest orientation of the first segment relative to
    the body axis.  ``mirror`` reflects the whole chain across the body axis.
    """

    n_segments: int = 6
    segment_length: float = 0.024
    segment_radius: float = 0.0025
    attachment_offset: float = 0.0
    attachment_angle: float = 0.0
    mirror: bool = False


@dataclass(frozen=True)
class RobotConfig:
    """Fluid, body and at least one flagellum.

    ``drag_ratio`` is the normal-to-tangential resistive-coefficient ratio
    applied to every link (must exceed 1 for anisotropic drag propulsion).
    """

    fluid: FluidModel = field(default_factory=FluidModel)
    body: BodyConfig = field(default_factory=BodyConfig)
    flagella: tuple = ()
    drag_ratio: float = 2.0


def default_robot_config():
    """Four-flagella reference morphology: two mirrored pairs, fore and aft.

    Segment size and attachment angle were tuned by sweeping the admissible
    range for the largest stiffness-controlled displacement relative to the
    fixed-stiffness controls; the swimmer advances along +x (nose first).
    """
    pair = dict(
        n_segments=6,
        segment_length=0.02,
        segment_radius=0.002,
        attachment_angle=1.0,
    )
    return RobotConfig(
        flagella=(
            FlagellumConfig(attachment_offset=0.045, mirror=False, **pair),
            FlagellumConfig(attachment_offset=0.045, mirror=True, **pair),
            FlagellumConfig(attachment_offset=-0.045, mirror=False, **pair),
            FlagellumConfig(attachment_offset=-0.045, mirror=True, **pair),
        )
    )


@dataclass(frozen=True)
class GeneralizedCoords:
    """Structured view of the state: body pose plus flat joint-angle vector."""

    x: float = 0.0
    y: float = 0.0
    phi_body: float = 0.0
    joint_angles: tuple = ()

    def as_vector(self):
        return np.concatenate(
            ([self.x, self.y, self.phi_body], np.asarray(self.joint_angles, float))
        )

    @staticmethod
    def from_vector(q):
        q = np.asarray(q, dtype=float)
        return GeneralizedCoords(q[0], q[1], q[2], tuple(q[3:]))


@dataclass(frozen=True)
class LinkFrames:
    """World-frame pose of every link: centers (n,2), angles (n,), lengths (n,)."""

    centers: np.ndarray
    angles: np.ndarray
    lengths: np.ndarray

    @property
    def n_links(self):
        return len(self.lengths)

    def endpoints(self):
        """Proximal and distal endpoints of every link, each (n, 2)."""
        half = 0.5 * self.lengths[:, None]
        tangent = np.stack([np.cos(self.angles), np.sin(self.angles)], axis=1)
        return self.centers - half * tangent, self.centers + half * tangent

    def frame(self, link_id):
        """Pose of a single link as a LinkFrame."""
        if not 0 <= link_id < self.n_links:
            raise ValueError(f"link_id {link_id} out of range [0, {self.n_links})")
        return LinkFrame(center=self.centers[link_id].copy(),
                         angle=float(self.angles[link_id]),
                         length=float(self.lengths[link_id]))


@dataclass(frozen=True)
class LinkFrame:
    """World-frame pose of one straight link."""

    center: np.ndarray
    angle: float
    length: float


def validate_config(config, allow_empty_flagella=False):
    """Check every structural invariant; return the config unchanged.

    Raises ConfigError naming the first violated field, e.g.
    ``flagella[2].segment_length``.  ``allow_empty_flagella`` admits a bare
    body, the single-rod limit used when checking drag in isolation.
    """
    f = config.fluid
    if not f.viscosity > 0:
        raise ConfigError(f"fluid.viscosity must be > 0, got {f.viscosity}")
    if not f.density > 0:
        raise ConfigError(f"fluid.density must be > 0, got {f.density}")
    b = config.body
    if not b.length > 0:
        raise ConfigError(f"body.length must be > 0, got {b.length}")
    if not b.radius > 0:
        raise ConfigError(f"body.radius must be > 0, got {b.radius}")
    if not b.radius < b.length:
        raise ConfigError(
            f"body.radius must be smaller than body.length, got {b.radius}"
        )
    if len(config.flagella) < 1 and not allow_empty_flagella:
        raise ConfigError("flagella must contain at least one entry")
    if not config.drag_ratio > 1:
        raise ConfigError(f"drag_ratio must be > 1, got {config.drag_ratio}")
    for i, fl in enumerate(config.flagella):
        where = f"flagella[{i}]"
        if int(fl.n_segments) != fl.n_segments or fl.n_segments < 1:
            raise ConfigError(f"{where}.n_segments must be an integer >= 1, got {fl.n_segments}")
        if not fl.segment_length > 0:
            raise ConfigError(f"{where}.segment_length must be > 0, got {fl.segment_length}")
        if not fl.segment_radius > 0:
            raise ConfigError(f"{where}.segment_radius must be > 0, got {fl.segment_radius}")
        if not fl.segment_radius < fl.segment_length:
            raise ConfigError(
                f"{where}.segment_radius must be smaller than segment_length, "
                f"got {fl.segment_radius}"
            )
        if abs(fl.attachment_offset) > b.length / 2:
            raise ConfigError(
                f"{where}.attachment_offset must lie within the body, "
                f"[-{b.length / 2}, {b.length / 2}], got {fl.attachment_offset}"
            )
    return config


@dataclass(frozen=True)
class ModelLayout:
    """Flat per-joint/per-flagellum index arrays precomputed from a config.

    Internal helper shared by the kinematics, hydrodynamics and dynamics
    modules; all arrays are read-only.
    """

    n_flagella: int
    n_joints: int
    dim: int
    flag_start: np.ndarray   # (n_flagella,) first joint index of each flagellum
    flag_id: np.ndarray      # (n_joints,) flagellum index per joint
    sign: np.ndarray         # (n_joints,) +1, or -1 for mirrored flagella
    base_angle: np.ndarray   # (n_joints,) attachment angle of the joint's flagellum
    seg_length: np.ndarray   # (n_joints,)
    seg_radius: np.ndarray   # (n_joints,)
    attach_offset: np.ndarray  # (n_flagella,)


@lru_cache(maxsize=128)
def _layout_cached(config):
    starts, fid, sign, base, slen, srad, aoff = [], [], [], [], [], [], []
    n = 0
    for i, fl in enumerate(config.flagella):
        starts.append(n)
        aoff.append(fl.attachment_offset)
        s = -1.0 if fl.mirror else 1.0
        for _ in range(int(fl.n_segments)):
            fid.append(i)
            sign.append(s)
            base.append(fl.attachment_angle)
            slen.append(fl.segment_length)
            srad.append(fl.segment_radius)
            n += 1
    def arr(x, dt=float):
        a = np.asarray(x, dtype=dt)
        a.setflags(write=False)
        return a
    return ModelLayout(
        n_flagella=len(config.flagella),
        n_joints=n,
        dim=3 + n,
        flag_start=arr(starts, np.int64),
        flag_id=arr(fid, np.int64),
        sign=arr(sign),
        base_angle=arr(base),
        seg_length=arr(slen),
        seg_radius=arr(srad),
        attach_offset=arr(aoff),
    )


def layout(config):
    """ModelLayout for a config (cached; config must be valid)."""
    return _layout_cached(config)


def coordinate_dimension(config):
    """dim(q) = 3 body coordinates + one angle per segment."""
    return layout(config).dim


def _as_vector(q, config):
    if isinstance(q, GeneralizedCoords):
        q = q.as_vector()
    q = np.asarray(q, dtype=float)
    dim = layout(config).dim
    if q.shape != (dim,):
        raise ValueError(f"state vector must have shape ({dim},), got {q.shape}")
    return q


def _chain_state(q, lay):
    """Orientations, hinge positions and centers of all flagellum links."""
    x, y, phi = q[0], q[1], q[2]
    theta = q[3:]
    # cumulative joint angle within each flagellum
    cs = np.cumsum(theta)
    start_cs = cs[lay.flag_start] - theta[lay.flag_start]
    within = cs - start_cs[lay.flag_id]
    psi = phi + lay.sign * (lay.base_angle + within)
    step = lay.seg_length[:, None] * np.stack([np.cos(psi), np.sin(psi)], axis=1)
    # attachment points in the world frame
    c, s = np.cos(phi), np.sin(phi)
    attach = np.stack(
        [x + c * lay.attach_offset, y + s * lay.attach_offset], axis=1
    )
    # hinge positions: attachment plus cumulative sum of preceding steps
    cum = np.cumsum(step, axis=0)
    cum_start = cum[lay.flag_start] - step[lay.flag_start]
    hinges = attach[lay.flag_id] + (cum - step) - cum_start[lay.flag_id]
    centers = hinges + 0.5 * step
    return psi, hinges, centers


def forward_kinematics(q, config):
    """World-frame LinkFrames for state ``q`` (body link first).

    Adjacent links share hinge points exactly: the distal end of segment j
    coincides with the proximal end of segment j+1, and the first hinge sits
    at the flagellum's attachment point on the body axis.
    """
    lay = layout(config)
    q = _as_vector(q, config)
    psi, _, centers = _chain_state(q, lay)
    all_centers = np.vstack([[q[0], q[1]], centers])
    all_angles = np.concatenate([[q[2]], psi])
    all_lengths = np.concatenate([[config.body.length], lay.seg_length])
    return LinkFrames(centers=all_centers, angles=all_angles, lengths=all_lengths)


def link_jacobian(q, config, link_id):
    """3 x dim(q) Jacobian of link ``link_id``'s center velocity and spin.

    Rows are (vx, vy, omega) of the link center; columns follow the ordering
    of q.  The body link's Jacobian is [I3 | 0].  Columns of joints distal to
    the link are zero.
    """
    lay = layout(config)
    q = _as_vector(q, config)
    n_links = 1 + lay.n_joints
    if not 0 <= link_id < n_links:
        raise ValueError(f"link_id must be in [0, {n_links}), got {link_id}")
    J = np.zeros((3, lay.dim))
    if link_id == 0:
        J[0, 0] = J[1, 1] = J[2, 2] = 1.0
        return J
    _, hinges, centers = _chain_state(q, lay)
    l = link_id - 1
    c = centers[l]
    J[0, 0] = 1.0
    J[1, 1] = 1.0
    # rotation about the body center moves every downstream point
    r = c - q[:2]
    J[0, 2] = -r[1]
    J[1, 2] = r[0]
    J[2, 2] = 1.0
    f = lay.flag_id[l]
    for j in range(lay.flag_start[f], l + 1):
        rj = c - hinges[j]
        J[0, 3 + j] = -lay.sign[j] * rj[1]
        J[1, 3 + j] = lay.sign[j] * rj[0]
        J[2, 3 + j] = lay.sign[j]
    return J
