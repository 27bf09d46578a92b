"""Command-line entry point.

Subcommands: simulate, compare, verify, sweep, optimize.  Exit codes:
0 success, 1 usage error or failed verification, 2 invalid configuration,
3 numerical failure.  All diagnostics go to stderr.
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .dynamics import SimulationError, simulate
from .experiments import compare_gaits, displacement_per_cycle
from .hydrodynamics import reynolds_number
from .io import (comparison_to_dict, optimization_to_dict, parse_config,
                 render_trajectory_svg, serialize_config, write_metrics_json,
                 write_trajectory_csv)
from .kinematics import ConfigError
from .optimize import GaitParams, optimize_gait, sweep_grid
from .verify import run_verification

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class _UsageError(Exception):
    pass


def _load_setup(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise _UsageError(f"cannot read config file {path!r}: {err}") from err
    return parse_config(text)


def _out_dir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_simulate(args):
    if args.cycles is not None and args.cycles < 1:
        raise _UsageError("--cycles must be at least 1")
    setup = _load_setup(args.config)
    n_cycles = args.cycles
    traj = simulate(setup.robot, setup.gait, n_cycles=n_cycles,
                    settings=setup.settings)
    out = _out_dir(args.out)
    n_bytes = write_trajectory_csv(traj, out / "trajectory.csv")
    metrics = displacement_per_cycle(traj)
    body_len = setup.robot.body.length
    speed = abs(metrics.mean) / metrics.period
    extra = {
        "mean_displacement_body_lengths_per_cycle": metrics.mean / body_len,
        "reynolds_number": reynolds_number(max(speed, 0.0), body_len,
                                           setup.robot.fluid),
        "gait_mode": setup.gait.mode,
        "dt_s": traj.settings.dt,
        "steps_per_cycle": traj.steps_per_cycle,
    }
    write_metrics_json(metrics, out / "metrics.json", extra=extra)
    (out / "trajectory.svg").write_text(render_trajectory_svg(traj),
                                        encoding="ascii")
    print(f"simulated {traj.n_cycles} cycles ({setup.gait.mode}): "
          f"mean {metrics.mean:.6e} m/cycle, net {metrics.net:.6e} m")
    print(f"wrote trajectory.csv ({n_bytes} bytes), metrics.json, "
          f"trajectory.svg to {out}")
    return EXIT_OK


def _cmd_compare(args):
    setup = _load_setup(args.config)
    report = compare_gaits(setup.robot, n_cycles=setup.settings.n_cycles,
                           settings=setup.settings, period=setup.gait.period)
    out = _out_dir(args.out)
    doc = comparison_to_dict(report)
    (out / "comparison.json").write_text(
        json.dumps(doc, indent=2) + "\n", encoding="ascii")
    name_w = max(len(n) for n in report.metrics) + 2
    print(f"{'gait':<{name_w}}{'mean [m/cycle]':>16}{'std [m]':>12}"
          f"{'net [m]':>14}")
    for name in report.ranking:
        m = report.metrics[name]
        print(f"{name:<{name_w}}{m.mean:>16.6e}{m.std:>12.2e}{m.net:>14.6e}")
    ratio = report.controlled_over_rigid
    print(f"controlled/rigid displacement ratio: {ratio:.4g}")
    print(f"wrote comparison.json to {out}")
    return EXIT_OK


def _cmd_verify(args):
    setup = _load_setup(args.config)
    report = run_verification(setup.robot, setup.mechanism, setup.gait,
                              settings=setup.settings)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_USAGE


def _cmd_sweep(args):
    setup = _load_setup(args.config)
    if args.steps < 2:
        raise _UsageError("--steps must be at least 2")
    values = np.linspace(args.from_, args.to, args.steps)
    base = GaitParams(k_min=setup.gait.k_min, k_max=setup.gait.k_max,
                      beta=setup.gait.beta, duty=setup.gait.duty,
                      phase_offset=setup.gait.phase_offset)
    points = sweep_grid({args.param: [float(v) for v in values]}, setup.robot,
                        settings=setup.settings, period=setup.gait.period,
                        base=base)
    out = _out_dir(args.out)
    rows = [f"{args.param},objective_m_per_cycle"]
    rows += [f"{getattr(p.params, args.param):.17e},{p.objective:.17e}"
             for p in points]
    (out / "sweep.csv").write_text("\n".join(rows) + "\n", encoding="ascii")
    best = max(points, key=lambda p: p.objective if p.objective == p.objective
               else -np.inf)
    doc = {
        "parameter": args.param,
        "values": [getattr(p.params, args.param) for p in points],
        "objective_m_per_cycle": [
            None if p.objective != p.objective else p.objective
            for p in points],
        "best_value": getattr(best.params, args.param),
        "best_objective_m_per_cycle": best.objective,
    }
    (out / "sweep.json").write_text(json.dumps(doc, indent=2) + "\n",
                                    encoding="ascii")
    print(f"swept {args.param} over [{args.from_:g}, {args.to:g}] in "
          f"{args.steps} steps: best {best.objective:.6e} m/cycle at "
          f"{args.param}={getattr(best.params, args.param):g}")
    print(f"wrote sweep.csv, sweep.json to {out}")
    return EXIT_OK


_OPTIMIZE_BOUNDS = {"duty": (0.05, 0.95), "phase_offset": (0.0, 0.95)}


def _cmd_optimize(args):
    setup = _load_setup(args.config)
    base = GaitParams(k_min=setup.gait.k_min, k_max=setup.gait.k_max,
                      beta=setup.gait.beta, duty=setup.gait.duty,
                      phase_offset=setup.gait.phase_offset)
    result = optimize_gait(_OPTIMIZE_BOUNDS, setup.robot, budget=args.budget,
                           seed=args.seed, settings=setup.settings,
                           period=setup.gait.period, base=base)
    out = _out_dir(args.out)
    (out / "optimum.json").write_text(
        json.dumps(optimization_to_dict(result), indent=2) + "\n",
        encoding="ascii")
    best = result.best_params
    tuned = setup._replace(gait=replace(
        setup.gait, k_min=best.k_min, k_max=best.k_max, beta=best.beta,
        duty=best.duty, phase_offset=best.phase_offset))
    (out / "optimized_config.json").write_text(serialize_config(tuned),
                                               encoding="ascii")
    print(f"optimized over {sorted(_OPTIMIZE_BOUNDS)} with budget "
          f"{result.budget} (seed {result.seed}): best "
          f"{result.best_objective:.6e} m/cycle at duty={best.duty:.4f}, "
          f"phase_offset={best.phase_offset:.4f}")
    print(f"wrote optimum.json, optimized_config.json to {out}")
    return EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="flagsim",
        description="Planar creeping-flow simulator of a flagellated swimmer "
                    "with within-cycle stiffness control.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one gait, write trajectory "
                                            "CSV, metrics JSON and SVG")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--cycles", type=int, default=None,
                       help="override sim.n_cycles from the config")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.set_defaults(func=_cmd_simulate)

    p_cmp = sub.add_parser("compare", help="run the three stiffness presets "
                                           "and tabulate displacement")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--out", required=True)
    p_cmp.set_defaults(func=_cmd_compare)

    p_ver = sub.add_parser("verify", help="run the physics invariant suite")
    p_ver.add_argument("--config", required=True)
    p_ver.set_defaults(func=_cmd_verify)

    p_swp = sub.add_parser("sweep", help="sweep one gait parameter over a "
                                         "linear grid")
    p_swp.add_argument("--config", required=True)
    p_swp.add_argument("--param", required=True,
                       help="k_min, k_max, beta, duty or phase_offset")
    p_swp.add_argument("--from", dest="from_", type=float, required=True)
    p_swp.add_argument("--to", type=float, required=True)
    p_swp.add_argument("--steps", type=int, required=True)
    p_swp.add_argument("--out", required=True)
    p_swp.set_defaults(func=_cmd_sweep)

    p_opt = sub.add_parser("optimize", help="search duty and phase offset "
                                            "for maximum displacement")
    p_opt.add_argument("--config", required=True)
    p_opt.add_argument("--budget", type=int, default=60)
    p_opt.add_argument("--seed", type=int, default=0)
    p_opt.add_argument("--out", required=True)
    p_opt.set_defaults(func=_cmd_optimize)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        # argparse uses 2 for usage problems; flatten to the usage code and
        # keep 0 for --help
        return EXIT_OK if err.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as err:
        print(f"invalid configuration: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
