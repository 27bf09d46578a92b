"""Chain geometry: frames, closure, Jacobians, symmetry."""

import math

import numpy as np
import pytest

from flagsim import (BodyConfig, ConfigError, FlagellumConfig, FluidModel,
                     GeneralizedCoords, RobotConfig, coordinate_dimension,
                     default_robot_config, forward_kinematics, link_jacobian,
                     validate_config)

from conftest import random_states


def two_flagella():
    """One plain and one mirrored flagellum at the same attachment."""
    shared = dict(n_segments=3, segment_length=0.03, segment_radius=0.002,
                  attachment_offset=0.04, attachment_angle=0.9)
    return RobotConfig(flagella=(FlagellumConfig(mirror=False, **shared),
                                 FlagellumConfig(mirror=True, **shared)))


def test_default_config_accepted(cfg):
    validate_config(cfg)
    assert len(cfg.flagella) == 4
    assert all(f.n_segments == 6 for f in cfg.flagella)
    assert coordinate_dimension(cfg) == 3 + 24


def test_validate_reports_field_paths(cfg):
    bad = RobotConfig(flagella=(
        FlagellumConfig(segment_length=0.0, segment_radius=0.001),))
    with pytest.raises(ConfigError, match=r"segment_length must be > 0"):
        validate_config(bad)

    off = RobotConfig(body=BodyConfig(length=0.126),
                      flagella=(FlagellumConfig(
                          segment_length=0.02, segment_radius=0.002,
                          attachment_offset=0.126),))
    with pytest.raises(ConfigError, match=r"attachment_offset"):
        validate_config(off)

    with pytest.raises(ConfigError, match=r"flagella"):
        validate_config(RobotConfig(flagella=()))
    with pytest.raises(ConfigError, match=r"n_segments"):
        validate_config(RobotConfig(flagella=(
            FlagellumConfig(n_segments=0),)))
    with pytest.raises(ConfigError, match=r"viscosity"):
        validate_config(RobotConfig(fluid=FluidModel(viscosity=-1.0),
                                    flagella=(FlagellumConfig(),)))
    with pytest.raises(ConfigError, match=r"segment_radius"):
        validate_config(RobotConfig(flagella=(
            FlagellumConfig(segment_length=0.001, segment_radius=0.002),)))
    with pytest.raises(ConfigError, match=r"drag_ratio"):
        validate_config(RobotConfig(flagella=(FlagellumConfig(),),
                                    drag_ratio=1.0))


def test_straight_chain_at_zero_angles(cfg):
    q = np.zeros(coordinate_dimension(cfg))
    frames = forward_kinematics(q, cfg)
    # body link first
    assert np.allclose(frames.centers[0], [0.0, 0.0])
    assert frames.angles[0] == 0.0
    assert frames.lengths[0] == cfg.body.length
    link = 1
    for flag in cfg.flagella:
        sgn = -1.0 if flag.mirror else 1.0
        direction = sgn * flag.attachment_angle
        attach = np.array([flag.attachment_offset, 0.0])
        u = np.array([math.cos(direction), math.sin(direction)])
        for j in range(flag.n_segments):
            expected = attach + (j + 0.5) * flag.segment_length * u
            assert np.allclose(frames.centers[link], expected, atol=1e-14)
            assert frames.angles[link] == pytest.approx(direction, abs=1e-14)
            link += 1


def test_chain_closure_random_states(cfg):
    lay_links = 1 + sum(f.n_segments for f in cfg.flagella)
    for q in random_states(cfg, 10, seed=11):
        frames = forward_kinematics(q, cfg)
        assert frames.n_links == lay_links
        prox, dist = frames.endpoints()
        link = 1
        for flag in cfg.flagella:
            # first hinge sits on the body axis at the attachment offset
            c, s = math.cos(q[2]), math.sin(q[2])
            attach = q[0:2] + flag.attachment_offset * np.array([c, s])
            assert np.linalg.norm(prox[link] - attach) <= 1e-12
            for _ in range(flag.n_segments - 1):
                assert np.linalg.norm(dist[link] - prox[link + 1]) <= 1e-12
                link += 1
            link += 1


def test_rigid_rotation_moves_all_frames(cfg):
    d = coordinate_dimension(cfg)
    rng = np.random.default_rng(3)
    q = np.zeros(d)
    q[3:] = rng.uniform(-1, 1, d - 3)
    dphi = 0.8
    base = forward_kinematics(q, cfg)
    q2 = q.copy()
    q2[2] += dphi
    rot = forward_kinematics(q2, cfg)
    c, s = math.cos(dphi), math.sin(dphi)
    R = np.array([[c, -s], [s, c]])
    assert np.allclose(rot.centers, base.centers @ R.T, atol=1e-12)
    assert np.allclose(rot.angles, base.angles + dphi, atol=1e-12)


def test_mirror_flagellum_reflects_frames():
    cfg = two_flagella()
    d = coordinate_dimension(cfg)
    q = np.zeros(d)
    q[3:6] = [0.4, -0.2, 0.7]
    q[6:9] = [0.4, -0.2, 0.7]   # same joint angles on the mirrored copy
    frames = forward_kinematics(q, cfg)
    plain = slice(1, 4)
    mirrored = slice(4, 7)
    assert np.allclose(frames.centers[mirrored, 0],
                       frames.centers[plain, 0], atol=1e-12)
    assert np.allclose(frames.centers[mirrored, 1],
                       -frames.centers[plain, 1], atol=1e-12)
    assert np.allclose(frames.angles[mirrored], -frames.angles[plain],
                       atol=1e-12)


def test_se2_equivariance_of_forward_kinematics(cfg):
    dx, dy, dphi = 0.5, -0.3, 1.1
    c, s = math.cos(dphi), math.sin(dphi)
    R = np.array([[c, -s], [s, c]])
    for q in random_states(cfg, 5, seed=21):
        g_q = q.copy()
        g_q[0:2] = R @ q[0:2] + [dx, dy]
        g_q[2] = q[2] + dphi
        base = forward_kinematics(q, cfg)
        moved = forward_kinematics(g_q, cfg)
        assert np.abs(moved.centers - (base.centers @ R.T + [dx, dy])).max() \
            <= 1e-10
        assert np.abs(moved.angles - (base.angles + dphi)).max() <= 1e-10


def test_dimension_mismatch_rejected(cfg):
    with pytest.raises(ValueError, match="shape"):
        forward_kinematics(np.zeros(5), cfg)
    with pytest.raises(ValueError, match="shape"):
        link_jacobian(np.zeros(5), cfg, 0)


def test_generalized_coords_roundtrip(cfg):
    d = coordinate_dimension(cfg)
    q = np.arange(d, dtype=float) / 10.0
    gc = GeneralizedCoords.from_vector(q)
    assert gc.x == q[0] and gc.y == q[1] and gc.phi_body == q[2]
    assert np.array_equal(gc.as_vector(), q)
    frames_vec = forward_kinematics(q, cfg)
    frames_gc = forward_kinematics(gc, cfg)
    assert np.array_equal(frames_vec.centers, frames_gc.centers)


def test_body_jacobian_is_pose_identity(cfg):
    d = coordinate_dimension(cfg)
    J = link_jacobian(np.zeros(d), cfg, 0)
    expected = np.zeros((3, d))
    expected[0, 0] = expected[1, 1] = expected[2, 2] = 1.0
    assert np.array_equal(J, expected)


def test_invalid_link_id(cfg):
    d = coordinate_dimension(cfg)
    n_links = 1 + sum(f.n_segments for f in cfg.flagella)
    with pytest.raises(ValueError, match="link_id"):
        link_jacobian(np.zeros(d), cfg, n_links)
    with pytest.raises(ValueError, match="link_id"):
        link_jacobian(np.zeros(d), cfg, -1)
    frames = forward_kinematics(np.zeros(d), cfg)
    with pytest.raises(ValueError, match="link_id"):
        frames.frame(n_links)


def _fd_jacobian(q, cfg, link_id, eps=1e-7):
    d = len(q)
    J = np.zeros((3, d))
    for j in range(d):
        qp, qm = q.copy(), q.copy()
        qp[j] += eps
        qm[j] -= eps
        fp = forward_kinematics(qp, cfg)
        fm = forward_kinematics(qm, cfg)
        J[0:2, j] = (fp.centers[link_id] - fm.centers[link_id]) / (2 * eps)
        J[2, j] = (fp.angles[link_id] - fm.angles[link_id]) / (2 * eps)
    return J


def test_jacobian_matches_finite_differences(cfg):
    # 20 random states, every link, central differences at eps=1e-7
    n_links = 1 + sum(f.n_segments for f in cfg.flagella)
    for q in random_states(cfg, 20, seed=42):
        for link in range(n_links):
            J = link_jacobian(q, cfg, link)
            J_fd = _fd_jacobian(q, cfg, link)
            scale = max(1.0, np.abs(J).max())
            assert np.abs(J - J_fd).max() / scale <= 1e-6


def test_distal_and_foreign_joint_columns_are_zero():
    cfg = two_flagella()
    d = coordinate_dimension(cfg)
    q = random_states(cfg, 1, seed=5)[0]
    # link 1 = first segment of flagellum 0: depends on pose and joint 0 only
    J = link_jacobian(q, cfg, 1)
    assert np.all(J[:, 4:] == 0.0)
    assert np.any(J[:, 3] != 0.0)
    # last link of flagellum 0 must not see flagellum 1's joints
    J_last = link_jacobian(q, cfg, 3)
    assert np.all(J_last[:, 6:] == 0.0)
