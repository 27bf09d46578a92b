"""Gait-parameter search: grid sweeps and a bounded simplex optimizer.

The objective is mean displacement per cycle in steady state.  The search
space is low-dimensional and the objective cheap but nonconvex, so the
optimizer is a clipped Nelder-Mead simplex with seeded random restarts under
a strict evaluation budget: deterministic for a given seed, monotone in its
reported best, and tolerant of failed evaluations (which score NaN and are
treated as worst).
"""

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from .actuation import GaitSchedule, validate_gait
from .dynamics import SimSettings, SimulationError, simulate, validate_settings
from .experiments import displacement_per_cycle
from .kinematics import ConfigError, validate_config

__all__ = [
    "GaitParams",
    "SweepPoint",
    "OptimizationResult",
    "evaluate_objective",
    "sweep_grid",
    "optimize_gait",
]


@dataclass(frozen=True)
class GaitParams:
    """Tunable knobs of the stiffness-controlled gait."""

    k_min: float = 1e-4
    k_max: float = 1.0
    beta: float = 0.7
    duty: float = 0.5
    phase_offset: float = 0.0

    def to_gait(self, period=10.0, ramp="cosine"):
        """Materialize a controlled-flexibility schedule with these knobs."""
        return validate_gait(GaitSchedule(mode="controlled_flexible",
                                          period=period, k_min=self.k_min,
                                          k_max=self.k_max, beta=self.beta,
                                          ramp=ramp, duty=self.duty,
                                          phase_offset=self.phase_offset))


_PARAM_NAMES = tuple(f.name for f in fields(GaitParams))


def evaluate_objective(params, config, settings=None, period=10.0,
                       n_cycles=6):
    """Mean per-cycle displacement of the gait, meters; NaN on failure.

    Simulates n_cycles cycles and averages cycles 2..n so the start-up
    transient does not bias the score.  Invalid parameter combinations and
    integration failures return NaN instead of raising, so searches can
    treat them as dead points.
    """
    validate_config(config)
    if settings is None:
        settings = SimSettings()
    validate_settings(settings)
    try:
        gait = params.to_gait(period=period)
        traj = simulate(config, gait, n_cycles=n_cycles, settings=settings)
    except (ConfigError, SimulationError):
        return math.nan
    return displacement_per_cycle(traj).mean


@dataclass(frozen=True)
class SweepPoint:
    """One grid-sweep evaluation: parameters and their objective value."""

    params: GaitParams
    objective: float


def _check_param_names(names):
    for name in names:
        if name not in _PARAM_NAMES:
            raise ValueError(
                f"unknown gait parameter {name!r}; valid names: {_PARAM_NAMES}")


def _sweep_eval(task):
    params, config, settings, period, n_cycles = task
    return evaluate_objective(params, config, settings=settings, period=period,
                              n_cycles=n_cycles)


def sweep_grid(grid, config, settings=None, period=10.0, n_cycles=6,
               base=None, max_workers=None):
    """Evaluate the objective on the Cartesian product of parameter values.

    grid maps parameter names to value sequences; unlisted parameters hold
    their defaults (or `base` values).  Rows come back in deterministic
    product order, first key varying slowest.  max_workers > 1 fans the
    evaluations out over processes.
    """
    _check_param_names(grid)
    if base is None:
        base = GaitParams()
    names = list(grid)
    combos = list(itertools.product(*(grid[n] for n in names)))
    points = [replace(base, **dict(zip(names, combo))) for combo in combos]
    tasks = [(p, config, settings, period, n_cycles) for p in points]
    if max_workers is not None and max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            values = list(pool.map(_sweep_eval, tasks))
    else:
        values = [_sweep_eval(t) for t in tasks]
    return [SweepPoint(params=p, objective=v) for p, v in zip(points, values)]


@dataclass(frozen=True)
class OptimizationResult:
    """Outcome of a budgeted gait search.

    history holds every evaluation in order as (GaitParams, objective);
    best_objective is the maximum over the non-NaN entries.
    """

    best_params: GaitParams
    best_objective: float
    history: tuple
    evaluations: int
    budget: int
    seed: int


def _project(base, names, x, lo, hi):
    """Clip a normalized point into the box and enforce k_min <= k_max."""
    x = np.clip(x, 0.0, 1.0)
    values = {n: lo[i] + (hi[i] - lo[i]) * x[i] for i, n in enumerate(names)}
    params = replace(base, **values)
    if params.k_min > params.k_max:
        params = replace(params, k_min=params.k_max)
    return x, params


def optimize_gait(bounds, config, budget=60, seed=0, settings=None,
                  period=10.0, n_cycles=6, base=None):
    """Maximize mean per-cycle displacement within parameter bounds.

    bounds maps parameter names to (low, high) intervals; the search runs a
    clipped Nelder-Mead simplex restarted from seeded random points until
    the evaluation budget is spent.  Same seed, same result.
    """
    _check_param_names(bounds)
    if not bounds:
        raise ValueError("bounds must name at least one gait parameter")
    if not (isinstance(budget, int) and budget >= 1):
        raise ValueError(f"budget must be an int >= 1, got {budget}")
    if base is None:
        base = GaitParams()
    names = list(bounds)
    lo = np.array([float(bounds[n][0]) for n in names])
    hi = np.array([float(bounds[n][1]) for n in names])
    if np.any(hi < lo):
        raise ValueError("each bound must satisfy low <= high")
    ndim = len(names)
    rng = np.random.default_rng(seed)
    history = []

    def score(x):
        x, params = _project(base, names, x, lo, hi)
        value = evaluate_objective(params, config, settings=settings,
                                   period=period, n_cycles=n_cycles)
        history.append((params, value))
        return value

    def better(a, b):  # is value a better than b, NaN always loses
        if math.isnan(a):
            return False
        if math.isnan(b):
            return True
        return a > b

    first_start = np.full(ndim, 0.5)
    while len(history) < budget:
        start = first_start if not history else rng.uniform(0.0, 1.0, ndim)
        # initial simplex: start plus one 15% offset per axis, reflected
        # inward when it would leave the box
        simplex = [start]
        for i in range(ndim):
            v = start.copy()
            v[i] = v[i] + 0.15 if v[i] + 0.15 <= 1.0 else v[i] - 0.15
            simplex.append(v)
        values = []
        for v in simplex:
            if len(history) >= budget:
                break
            values.append(score(v))
        simplex = simplex[: len(values)]
        if len(simplex) < ndim + 1:
            break
        while len(history) < budget:
            order = sorted(range(ndim + 1),
                           key=lambda i: (math.isnan(values[i]),
                                          -(values[i] if not math.isnan(values[i])
                                            else 0.0)))
            simplex = [simplex[i] for i in order]
            values = [values[i] for i in order]
            spread = max(np.max(np.abs(s - simplex[0])) for s in simplex[1:])
            if spread < 1e-3:
                break  # converged; restart from a fresh seeded point
            centroid = np.mean(simplex[:-1], axis=0)
            reflected = centroid + (centroid - simplex[-1])
            fr = score(reflected)
            if better(fr, values[0]) and len(history) < budget:
                expanded = centroid + 2.0 * (centroid - simplex[-1])
                fe = score(expanded)
                if better(fe, fr):
                    simplex[-1], values[-1] = expanded, fe
                else:
                    simplex[-1], values[-1] = reflected, fr
            elif better(fr, values[-2]):
                simplex[-1], values[-1] = reflected, fr
            else:
                if len(history) >= budget:
                    break
                contracted = centroid + 0.5 * (simplex[-1] - centroid)
                fc = score(contracted)
                if better(fc, values[-1]):
                    simplex[-1], values[-1] = contracted, fc
                else:
                    # shrink toward the best vertex
                    for i in range(1, ndim + 1):
                        if len(history) >= budget:
                            break
                        simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
                        values[i] = score(simplex[i])

    finite = [(p, v) for p, v in history if not math.isnan(v)]
    if not finite:
        raise SimulationError(
            "every objective evaluation failed within the budget")
    best_params, best_objective = max(finite, key=lambda pv: pv[1])
    return OptimizationResult(best_params=best_params,
                              best_objective=float(best_objective),
                              history=tuple(history),
                              evaluations=len(history),
                              budget=budget,
                              seed=seed)
