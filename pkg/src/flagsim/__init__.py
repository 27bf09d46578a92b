"""Planar overdamped simulator of a flagellated swimmer with stroke-cycle
stiffness control.

The robot is a rigid body carrying hinged multi-segment flagella in the
Stokes regime.  Within every stroke cycle the joints' shared torsional
stiffness and rest shape are rescheduled, which breaks reciprocity and
produces net locomotion where a fixed-stiffness stroke cannot.  The package
simulates that dynamics, verifies the no-net-motion theorem for reciprocal
strokes, and optimizes the schedule for displacement per cycle.
"""

from .kinematics import (BodyConfig, ConfigError, FlagellumConfig, FluidModel,
                         GeneralizedCoords, LinkFrame, LinkFrames, RobotConfig,
                         coordinate_dimension, default_robot_config,
                         forward_kinematics, link_jacobian, validate_config)
from .hydrodynamics import (DragCoefficients, assemble_resistance_matrix,
                            link_drag_wrench, reynolds_number,
                            rft_coefficients)
from .actuation import (GAIT_MODES, RAMP_SHAPES, GaitSchedule, JointActuation,
                        MechanismConfig, carriage_position,
                        default_mechanism_config, elastic_generalized_force,
                        gait_evaluate, validate_gait, validate_mechanism)
from .dynamics import (NewtonConvergenceError, PrescribedTrajectory,
                       SimSettings, SimulationError,
                       SingularConfigurationError, Trajectory,
                       reciprocal_sinusoid, simulate, simulate_prescribed,
                       solve_velocity, step, traveling_wave, validate_settings,
                       warped_reciprocal)
from .experiments import (ComparisonReport, CycleMetrics, PrescribedMotion,
                          ScallopReport, compare_gaits, displacement_per_cycle,
                          net_displacement, prescribed_net_motion, preset_gait,
                          scallop_check, tip_trajectory)
from .optimize import (GaitParams, OptimizationResult, SweepPoint,
                       evaluate_objective, optimize_gait, sweep_grid)
from .io import (RunSetup, parse_config, read_trajectory_csv,
                 render_trajectory_svg, serialize_config, write_metrics_json,
                 write_trajectory_csv)
from .verify import CheckResult, VerificationReport, run_verification

__version__ = "0.1.0"

__all__ = [
    "BodyConfig", "ConfigError", "FlagellumConfig", "FluidModel",
    "GeneralizedCoords", "LinkFrame", "LinkFrames", "RobotConfig",
    "coordinate_dimension", "default_robot_config", "forward_kinematics",
    "link_jacobian", "validate_config",
    "DragCoefficients", "assemble_resistance_matrix", "link_drag_wrench",
    "reynolds_number", "rft_coefficients",
    "GAIT_MODES", "RAMP_SHAPES", "GaitSchedule", "JointActuation",
    "MechanismConfig", "carriage_position", "default_mechanism_config",
    "elastic_generalized_force", "gait_evaluate", "validate_gait",
    "validate_mechanism",
    "NewtonConvergenceError", "PrescribedTrajectory", "SimSettings",
    "SimulationError", "SingularConfigurationError", "Trajectory",
    "reciprocal_sinusoid", "simulate", "simulate_prescribed", "solve_velocity",
    "step", "traveling_wave", "validate_settings", "warped_reciprocal",
    "ComparisonReport", "CycleMetrics", "PrescribedMotion", "ScallopReport",
    "compare_gaits", "displacement_per_cycle", "net_displacement",
    "prescribed_net_motion", "preset_gait", "scallop_check", "tip_trajectory",
    "GaitParams", "OptimizationResult", "SweepPoint", "evaluate_objective",
    "optimize_gait", "sweep_grid",
    "RunSetup", "parse_config", "read_trajectory_csv", "render_trajectory_svg",
    "serialize_config", "write_metrics_json", "write_trajectory_csv",
    "CheckResult", "VerificationReport", "run_verification",
    "__version__",
]
