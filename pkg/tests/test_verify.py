"""Self-check suite: every invariant holds on a sane setup, and a broken
setup is actually flagged."""

import pytest

from flagsim import (FlagellumConfig, RobotConfig, SimSettings,
                     default_mechanism_config, preset_gait, run_verification)
from flagsim import cli

EXPECTED_CHECKS = {
    "resistance_symmetric_positive_definite",
    "drag_linear_in_viscosity",
    "equilibrium_is_fixed_point",
    "gait_schedule_periodic",
    "carriage_within_travel",
    "deterministic_repeat",
    "mirror_symmetry",
    "se2_equivariance",
    "per_cycle_consistency",
    "creeping_flow_regime",
    "reciprocal_stroke_nets_zero",
}


def verification(cfg, gait="controlled_flexible", **settings):
    return run_verification(cfg, default_mechanism_config(),
                            preset_gait(gait),
                            settings=SimSettings(**settings))


def test_default_setup_passes_every_check(cfg):
    report = verification(cfg, dt=0.05, n_cycles=2)
    assert report.passed
    assert {c.name for c in report.checks} == EXPECTED_CHECKS
    assert all(c.passed for c in report.checks)
    lines = report.lines()
    assert len(lines) == len(report.checks) + 1
    assert all(ln.startswith("[PASS] ") for ln in lines[:-1])
    assert lines[-1] == "verification PASSED (11/11 checks)"


def test_too_coarse_step_is_flagged(cfg):
    # 4 steps per cycle: the run completes but the physics is junk, and at
    # least one invariant must catch that
    report = verification(cfg, dt=2.5)
    assert not report.passed
    failed = [c.name for c in report.checks if not c.passed]
    assert failed
    assert report.lines()[-1].startswith("verification FAILED")
    assert any(ln.startswith("[FAIL] ") for ln in report.lines())


def test_mirror_check_skips_asymmetric_robot():
    lopsided = RobotConfig(flagella=(FlagellumConfig(
        n_segments=4, segment_length=0.02, segment_radius=0.002,
        attachment_offset=-0.05, attachment_angle=0.4),))
    report = verification(lopsided, dt=0.05, n_cycles=2)
    assert report.passed
    mirror = {c.name: c for c in report.checks}["mirror_symmetry"]
    assert mirror.passed
    assert "skipped" in mirror.detail


def test_prescribed_gait_is_verifiable(cfg):
    report = verification(cfg, gait="reciprocal_prescribed", dt=0.05,
                          n_cycles=2)
    assert report.passed
    assert {c.name for c in report.checks} == EXPECTED_CHECKS


def test_cli_verify_fails_on_broken_setup(tmp_path, capsys):
    path = tmp_path / "coarse.json"
    path.write_text('{"version": 1, "sim": {"dt": 2.5}}', encoding="ascii")
    rc = cli.main(["verify", "--config", str(path)])
    assert rc == 1
    assert "[FAIL]" in capsys.readouterr().out
