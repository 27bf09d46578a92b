"""Config documents, trajectory CSV, metrics JSON, and SVG rendering.

The config document is strict JSON: a mandatory version key, known sections
only, unknown keys rejected with a nearest-key suggestion, missing keys
falling back to the package defaults.  Strictness is deliberate: a silent
typo must never alter physics.  Serialized metrics carry their units in the
key names for the same reason.
"""

import difflib
import io as _io
import json
import math
from typing import NamedTuple

import numpy as np

from .actuation import (GaitSchedule, MechanismConfig, validate_gait,
                        validate_mechanism)
from .dynamics import SimSettings, validate_settings
from .kinematics import (BodyConfig, ConfigError, FlagellumConfig, FluidModel,
                         RobotConfig, default_robot_config, validate_config)

__all__ = [
    "RunSetup",
    "parse_config",
    "serialize_config",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "metrics_to_dict",
    "write_metrics_json",
    "comparison_to_dict",
    "scallop_to_dict",
    "optimization_to_dict",
    "render_trajectory_svg",
]

CONFIG_VERSION = 1


class RunSetup(NamedTuple):
    """Everything a run needs, as parsed from one config document."""

    robot: RobotConfig
    mechanism: MechanismConfig
    gait: GaitSchedule
    settings: SimSettings


def _reject_unknown(section_name, given, allowed):
    for key in given:
        if key not in allowed:
            hint = difflib.get_close_matches(key, allowed, n=1)
            suggestion = f"; did you mean {hint[0]!r}?" if hint else ""
            where = f" in {section_name}" if section_name else ""
            raise ConfigError(f"unknown key {key!r}{where}{suggestion}")


def _need_number(section, key, value, default):
    if value is None:
        return default
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(
            f"{section}.{key} must be a number, got {value!r}")
    return float(value)


def _need_int(section, key, value, default):
    if value is None:
        return default
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(
            f"{section}.{key} must be an integer, got {value!r}")
    return value


def _need_bool(section, key, value, default):
    if value is None:
        return default
    if not isinstance(value, bool):
        raise ConfigError(
            f"{section}.{key} must be true or false, got {value!r}")
    return value


def _need_str(section, key, value, default):
    if value is None:
        return default
    if not isinstance(value, str):
        raise ConfigError(
            f"{section}.{key} must be a string, got {value!r}")
    return value


def _section(doc, name):
    raw = doc.get(name)
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section {name!r} must be an object")
    return raw


def parse_config(text):
    """Parse and validate one config document; returns a RunSetup.

    Missing keys take the package defaults; the gait period is always
    2 * mechanism.half_period (one carriage round trip per stroke cycle).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(
            f"config is not valid JSON: line {err.lineno} column {err.colno}: "
            f"{err.msg}") from err
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    _reject_unknown("", doc, ("version", "fluid", "body", "flagella",
                              "mechanism", "gait", "sim"))
    if "version" not in doc:
        raise ConfigError("config must declare a version key")
    if doc["version"] is True or doc["version"] is False \
            or doc["version"] != CONFIG_VERSION:
        raise ConfigError(
            f"unsupported config version {doc['version']!r}; this build reads "
            f"version {CONFIG_VERSION}")

    fluid_raw = _section(doc, "fluid")
    _reject_unknown("fluid", fluid_raw, ("viscosity", "density"))
    fluid_defaults = FluidModel()
    fluid = FluidModel(
        viscosity=_need_number("fluid", "viscosity", fluid_raw.get("viscosity"),
                               fluid_defaults.viscosity),
        density=_need_number("fluid", "density", fluid_raw.get("density"),
                             fluid_defaults.density))

    body_raw = _section(doc, "body")
    _reject_unknown("body", body_raw, ("length", "radius"))
    body_defaults = BodyConfig()
    body = BodyConfig(
        length=_need_number("body", "length", body_raw.get("length"),
                            body_defaults.length),
        radius=_need_number("body", "radius", body_raw.get("radius"),
                            body_defaults.radius))

    if "flagella" in doc:
        raw_list = doc["flagella"]
        if not isinstance(raw_list, list):
            raise ConfigError("section 'flagella' must be an array of objects")
        flagella = []
        flag_defaults = FlagellumConfig()
        for i, item in enumerate(raw_list):
            section = f"flagella[{i}]"
            if not isinstance(item, dict):
                raise ConfigError(f"{section} must be an object")
            _reject_unknown(section, item,
                            ("n_segments", "segment_length", "segment_radius",
                             "attachment_offset", "attachment_angle", "mirror"))
            flagella.append(FlagellumConfig(
                n_segments=_need_int(section, "n_segments",
                                     item.get("n_segments"),
                                     flag_defaults.n_segments),
                segment_length=_need_number(section, "segment_length",
                                            item.get("segment_length"),
                                            flag_defaults.segment_length),
                segment_radius=_need_number(section, "segment_radius",
                                            item.get("segment_radius"),
                                            flag_defaults.segment_radius),
                attachment_offset=_need_number(section, "attachment_offset",
                                               item.get("attachment_offset"),
                                               flag_defaults.attachment_offset),
                attachment_angle=_need_number(section, "attachment_angle",
                                              item.get("attachment_angle"),
                                              flag_defaults.attachment_angle),
                mirror=_need_bool(section, "mirror", item.get("mirror"),
                                  flag_defaults.mirror)))
        flagella = tuple(flagella)
    else:
        flagella = default_robot_config().flagella

    robot = RobotConfig(fluid=fluid, body=body, flagella=flagella)
    validate_config(robot)

    mech_raw = _section(doc, "mechanism")
    _reject_unknown("mechanism", mech_raw,
                    ("motor_rpm", "thread_pitch", "shaft_travel",
                     "half_period"))
    mech_defaults = MechanismConfig()
    mechanism = MechanismConfig(
        motor_rpm=_need_number("mechanism", "motor_rpm",
                               mech_raw.get("motor_rpm"),
                               mech_defaults.motor_rpm),
        thread_pitch=_need_number("mechanism", "thread_pitch",
                                  mech_raw.get("thread_pitch"),
                                  mech_defaults.thread_pitch),
        shaft_travel=_need_number("mechanism", "shaft_travel",
                                  mech_raw.get("shaft_travel"),
                                  mech_defaults.shaft_travel),
        half_period=_need_number("mechanism", "half_period",
                                 mech_raw.get("half_period"),
                                 mech_defaults.half_period))
    validate_mechanism(mechanism)

    gait_raw = _section(doc, "gait")
    _reject_unknown("gait", gait_raw,
                    ("mode", "k_min", "k_max", "beta", "duty", "phase_offset"))
    gait_defaults = GaitSchedule()
    gait = GaitSchedule(
        mode=_need_str("gait", "mode", gait_raw.get("mode"),
                       gait_defaults.mode),
        period=2.0 * mechanism.half_period,
        k_min=_need_number("gait", "k_min", gait_raw.get("k_min"),
                           gait_defaults.k_min),
        k_max=_need_number("gait", "k_max", gait_raw.get("k_max"),
                           gait_defaults.k_max),
        beta=_need_number("gait", "beta", gait_raw.get("beta"),
                          gait_defaults.beta),
        duty=_need_number("gait", "duty", gait_raw.get("duty"),
                          gait_defaults.duty),
        phase_offset=_need_number("gait", "phase_offset",
                                  gait_raw.get("phase_offset"),
                                  gait_defaults.phase_offset))
    validate_gait(gait)

    sim_raw = _section(doc, "sim")
    _reject_unknown("sim", sim_raw, ("dt", "scheme", "n_cycles"))
    sim_defaults = SimSettings()
    dt_raw = sim_raw.get("dt")
    if dt_raw is None:
        dt = sim_defaults.dt
    else:
        dt = _need_number("sim", "dt", dt_raw, sim_defaults.dt)
    settings = SimSettings(
        dt=dt,
        scheme=_need_str("sim", "scheme", sim_raw.get("scheme"),
                         sim_defaults.scheme),
        n_cycles=_need_int("sim", "n_cycles", sim_raw.get("n_cycles"),
                           sim_defaults.n_cycles))
    validate_settings(settings)
    return RunSetup(robot=robot, mechanism=mechanism, gait=gait,
                    settings=settings)


def serialize_config(setup):
    """Render a RunSetup back to config-document text (round-trip stable)."""
    doc = {
        "version": CONFIG_VERSION,
        "fluid": {
            "viscosity": setup.robot.fluid.viscosity,
            "density": setup.robot.fluid.density,
        },
        "body": {
            "length": setup.robot.body.length,
            "radius": setup.robot.body.radius,
        },
        "flagella": [
            {
                "n_segments": f.n_segments,
                "segment_length": f.segment_length,
                "segment_radius": f.segment_radius,
                "attachment_offset": f.attachment_offset,
                "attachment_angle": f.attachment_angle,
                "mirror": f.mirror,
            }
            for f in setup.robot.flagella
        ],
        "mechanism": {
            "motor_rpm": setup.mechanism.motor_rpm,
            "thread_pitch": setup.mechanism.thread_pitch,
            "shaft_travel": setup.mechanism.shaft_travel,
            "half_period": setup.mechanism.half_period,
        },
        "gait": {
            "mode": setup.gait.mode,
            "k_min": setup.gait.k_min,
            "k_max": setup.gait.k_max,
            "beta": setup.gait.beta,
            "duty": setup.gait.duty,
            "phase_offset": setup.gait.phase_offset,
        },
        "sim": {
            "dt": setup.settings.dt,
            "scheme": setup.settings.scheme,
            "n_cycles": setup.settings.n_cycles,
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def _joint_column_names(config):
    names = []
    for f, flag in enumerate(config.flagella):
        for j in range(flag.n_segments):
            names.append(f"theta_{f}_{j}")
    return names


def write_trajectory_csv(traj, destination):
    """Write the trajectory as CSV; returns the byte count written.

    Columns: t, x, y, phi, phase, k, then joint angles flagellum-major.
    Values carry 17 significant digits so a read-back is exact; rows are in
    time order with plain newline endings and a final newline.
    """
    if traj.n_samples < 1:
        raise ValueError("trajectory is empty")
    header = ["t", "x", "y", "phi", "phase", "k"]
    header += _joint_column_names(traj.config)
    buf = _io.StringIO()
    buf.write(",".join(header) + "\n")
    for i in range(traj.n_samples):
        row = [traj.t[i], traj.q[i, 0], traj.q[i, 1], traj.q[i, 2],
               traj.phase[i], traj.stiffness[i]]
        row.extend(traj.q[i, 3:])
        buf.write(",".join(f"{v:.17e}" for v in row) + "\n")
    text = buf.getvalue()
    data = text.encode("ascii")
    if hasattr(destination, "write"):
        try:
            destination.write(data)
        except TypeError:  # text-mode handle
            destination.write(text)
    else:
        with open(destination, "wb") as fh:
            fh.write(data)
    return len(data)


def read_trajectory_csv(source):
    """Read a trajectory CSV back into {column name: float array}."""
    if hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("ascii")
    else:
        with open(source, "r", encoding="ascii") as fh:
            text = fh.read()
    lines = [ln for ln in text.split("\n") if ln]
    names = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    if data.size and data.shape[1] != len(names):
        raise ValueError("CSV row width does not match its header")
    return {name: data[:, i] if data.size else np.empty(0)
            for i, name in enumerate(names)}


def metrics_to_dict(metrics):
    """CycleMetrics as a JSON-ready dict with units in the key names."""
    return {
        "per_cycle_displacement_m": list(metrics.per_cycle),
        "mean_displacement_m_per_cycle": metrics.mean,
        "std_displacement_m_per_cycle": metrics.std,
        "net_displacement_m": metrics.net,
        "travel_direction_unit": list(metrics.direction),
        "n_cycles": metrics.n_cycles,
        "cycle_period_s": metrics.period,
    }


def write_metrics_json(metrics, destination, extra=None):
    """Serialize CycleMetrics (plus optional extra keys) to a JSON file."""
    doc = metrics_to_dict(metrics)
    if extra:
        doc.update(extra)
    text = json.dumps(doc, indent=2) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="ascii") as fh:
            fh.write(text)
    return len(text)


def comparison_to_dict(report):
    """ComparisonReport as a JSON-ready dict (NaN/inf become strings)."""
    def clean(x):
        if isinstance(x, float) and not math.isfinite(x):
            return repr(x)
        return x
    return {
        "metrics": {name: metrics_to_dict(m)
                    for name, m in report.metrics.items()},
        "ranking_by_mean_displacement": list(report.ranking),
        "controlled_over_rigid_ratio": clean(report.controlled_over_rigid),
        "controlled_over_flexible_ratio": clean(report.controlled_over_flexible),
        "n_cycles": report.n_cycles,
        "cycle_period_s": report.period,
    }


def scallop_to_dict(report):
    """ScallopReport as a JSON-ready dict."""
    def clean(x):
        if isinstance(x, float) and not math.isfinite(x):
            return repr(x)
        return x
    return {
        "passed": report.passed,
        "sinusoid_residual_body_lengths": report.sinusoid_residual,
        "sinusoid_residual_halved_dt_body_lengths":
            report.sinusoid_residual_halved,
        "warped_residual_body_lengths": report.warped_residual,
        "warped_residual_halved_dt_body_lengths": report.warped_residual_halved,
        "refinement_ratio": clean(report.refinement_ratio),
        "threshold_body_lengths": report.threshold,
        "floor_body_lengths": report.floor,
        "amplitude_rad": report.amplitude,
        "steps_per_cycle": report.n_steps,
    }


def optimization_to_dict(result):
    """OptimizationResult as a JSON-ready dict (history included)."""
    def params_dict(p):
        return {"k_min": p.k_min, "k_max": p.k_max, "beta": p.beta,
                "duty": p.duty, "phase_offset": p.phase_offset}
    def clean(v):
        return repr(v) if isinstance(v, float) and not math.isfinite(v) else v
    return {
        "best_params": params_dict(result.best_params),
        "best_objective_m_per_cycle": result.best_objective,
        "evaluations": result.evaluations,
        "budget": result.budget,
        "seed": result.seed,
        "history": [
            {"params": params_dict(p), "objective_m_per_cycle": clean(v)}
            for p, v in result.history
        ],
    }


_GRADIENT = ((0.267, 0.005, 0.329), (0.128, 0.567, 0.551),
             (0.993, 0.906, 0.144))  # dark violet -> teal -> yellow


def _time_color(f):
    f = min(max(f, 0.0), 1.0)
    if f < 0.5:
        a, b, u = _GRADIENT[0], _GRADIENT[1], 2.0 * f
    else:
        a, b, u = _GRADIENT[1], _GRADIENT[2], 2.0 * f - 1.0
    rgb = [round(255 * ((1 - u) * a[i] + u * b[i])) for i in range(3)]
    return f"#{rgb[0]:02x}{rgb[1]:02x}{rgb[2]:02x}"


def _svg_ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    raw = np.linspace(lo, hi, n)
    return [float(v) for v in raw]


def render_trajectory_svg(traj, max_segments=1200):
    """Standalone SVG of the nose path, colored by time, markers per cycle.

    Axes are in meters with equal scale on both; a run that never moves
    renders as a single marker with no path segments.
    """
    from .experiments import tip_trajectory

    if traj.n_samples < 1:
        raise ValueError("trajectory is empty")
    tip = tip_trajectory(traj)
    xs, ys = tip[:, 1], tip[:, 2]
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    span = max(x_hi - x_lo, y_hi - y_lo)
    stationary = span < 1e-12
    if stationary:
        span = max(traj.config.body.length, 1e-6)
    pad = 0.08 * span
    x_lo, x_hi = x_lo - pad, x_hi + pad
    y_lo, y_hi = y_lo - pad, y_hi + pad

    width, height, margin = 820.0, 560.0, 70.0
    plot_w, plot_h = width - 2 * margin, height - 2 * margin
    scale = min(plot_w / (x_hi - x_lo), plot_h / (y_hi - y_lo))

    def to_px(x, y):
        cx = margin + plot_w / 2 + (x - 0.5 * (x_lo + x_hi)) * scale
        cy = margin + plot_h / 2 - (y - 0.5 * (y_lo + y_hi)) * scale
        return cx, cy

    parts = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">')
    parts.append(f'<rect width="{width:.0f}" height="{height:.0f}" '
                 f'fill="#ffffff"/>')
    parts.append(f'<text x="{width / 2:.1f}" y="28" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="16" fill="#222222">'
                 f'Nose path, {traj.n_cycles} cycles, T={traj.period:g} s'
                 f'</text>')

    # axes with meter labels
    ax_y = height - margin
    parts.append(f'<line x1="{margin:.1f}" y1="{ax_y:.1f}" '
                 f'x2="{width - margin:.1f}" y2="{ax_y:.1f}" '
                 f'stroke="#444444" stroke-width="1"/>')
    parts.append(f'<line x1="{margin:.1f}" y1="{margin:.1f}" '
                 f'x2="{margin:.1f}" y2="{ax_y:.1f}" '
                 f'stroke="#444444" stroke-width="1"/>')
    for xv in _svg_ticks(x_lo, x_hi):
        px, _ = to_px(xv, y_lo)
        parts.append(f'<line x1="{px:.1f}" y1="{ax_y:.1f}" x2="{px:.1f}" '
                     f'y2="{ax_y + 5:.1f}" stroke="#444444" stroke-width="1"/>')
        parts.append(f'<text x="{px:.1f}" y="{ax_y + 20:.1f}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11" fill="#444444">{xv:.4g}</text>')
    for yv in _svg_ticks(y_lo, y_hi):
        _, py = to_px(x_lo, yv)
        parts.append(f'<line x1="{margin - 5:.1f}" y1="{py:.1f}" '
                     f'x2="{margin:.1f}" y2="{py:.1f}" stroke="#444444" '
                     f'stroke-width="1"/>')
        parts.append(f'<text x="{margin - 9:.1f}" y="{py + 4:.1f}" '
                     f'text-anchor="end" font-family="sans-serif" '
                     f'font-size="11" fill="#444444">{yv:.4g}</text>')
    parts.append(f'<text x="{width / 2:.1f}" y="{height - 18:.1f}" '
                 f'text-anchor="middle" font-family="sans-serif" '
                 f'font-size="13" fill="#222222">x [m]</text>')
    parts.append(f'<text x="20" y="{height / 2:.1f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13" fill="#222222" '
                 f'transform="rotate(-90 20 {height / 2:.1f})">y [m]</text>')

    if stationary:
        px, py = to_px(xs[0], ys[0])
        parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="5" '
                     f'fill="{_time_color(0.0)}"/>')
        parts.append(f'<text x="{px + 10:.1f}" y="{py + 4:.1f}" '
                     f'font-family="sans-serif" font-size="12" '
                     f'fill="#222222">stationary</text>')
    else:
        n = traj.n_samples
        if n - 1 > max_segments:
            idx = np.unique(np.linspace(0, n - 1, max_segments + 1)
                            .round().astype(int))
        else:
            idx = np.arange(n)
        t_span = traj.t[-1] - traj.t[0] or 1.0
        for a, b in zip(idx[:-1], idx[1:]):
            x1, y1 = to_px(xs[a], ys[a])
            x2, y2 = to_px(xs[b], ys[b])
            color = _time_color((0.5 * (traj.t[a] + traj.t[b]) - traj.t[0])
                                / t_span)
            parts.append(f'<line class="seg" x1="{x1:.2f}" y1="{y1:.2f}" '
                         f'x2="{x2:.2f}" y2="{y2:.2f}" stroke="{color}" '
                         f'stroke-width="2" stroke-linecap="round"/>')
        # cycle-boundary markers C1..Cn
        for m in range(1, traj.n_cycles + 1):
            i = m * traj.steps_per_cycle
            px, py = to_px(xs[i], ys[i])
            parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="4" '
                         f'fill="none" stroke="#222222" stroke-width="1.4"/>')
            parts.append(f'<text x="{px:.1f}" y="{py - 9:.1f}" '
                         f'text-anchor="middle" font-family="sans-serif" '
                         f'font-size="11" fill="#222222">C{m}</text>')
        # time colorbar
        bar_x, bar_y, bar_w, bar_h = width - margin - 180, 40.0, 160.0, 10.0
        steps = 24
        for s in range(steps):
            color = _time_color((s + 0.5) / steps)
            parts.append(f'<rect x="{bar_x + s * bar_w / steps:.2f}" '
                         f'y="{bar_y:.1f}" width="{bar_w / steps + 0.5:.2f}" '
                         f'height="{bar_h:.1f}" fill="{color}"/>')
        parts.append(f'<text x="{bar_x:.1f}" y="{bar_y + 24:.1f}" '
                     f'font-family="sans-serif" font-size="11" '
                     f'fill="#222222">t=0 s</text>')
        parts.append(f'<text x="{bar_x + bar_w:.1f}" y="{bar_y + 24:.1f}" '
                     f'text-anchor="end" font-family="sans-serif" '
                     f'font-size="11" fill="#222222">t={traj.t[-1]:g} s</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
