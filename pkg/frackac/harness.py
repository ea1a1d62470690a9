#!/usr/bin/env python3
"""
Convergence Harness

Measures the discrete L2 error of the Monte Carlo estimator against exact
solutions and runs convergence sweeps in the number of paths M or the time
step dt, fitting the observed rate on a log-log scale.
"""

import csv
import json
import math
import os
import time
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from logger_config import setup_logger
from .errors import AnalysisError, ConfigurationError, UsageError
from .problems import Problem
from .solver import Estimate, SolverConfig, estimate_field, with_paths, with_step
from .stable import RngStream

logger = setup_logger("harness")

AXES = ("num_paths", "dt")

# estimator(problem, T, points, config, workers) -> (estimates, std_errors)
Estimator = Callable[[Problem, float, np.ndarray, SolverConfig, int], Tuple[np.ndarray, np.ndarray]]


@dataclass
class PointRecord:
    point: List[float]
    exact: float
    estimate: float
    std_error: float


@dataclass
class ErrorReport:
    """L2 error of one run, with the per-point data when retained."""

    l2_error: float
    num_eval_points: int
    per_point: Optional[List[PointRecord]] = None
    config: Dict = field(default_factory=dict)


@dataclass
class ConvergenceTable:
    """Errors along one sweep axis and the fitted log-log slope."""

    axis: str
    rows: List[Tuple[float, float]]
    fitted_slope: float
    slope_stderr: float
    config: Dict = field(default_factory=dict)
    wall_time: float = 0.0


def estimates_as_arrays(estimates: Sequence[Estimate]) -> Tuple[np.ndarray, np.ndarray]:
    return np.array([e.mean for e in estimates]), np.array([e.std_error for e in estimates])


def monte_carlo_estimator(problem, T, points, config, workers):
    return estimates_as_arrays(estimate_field(problem, T, points, config, workers))


def l2_error(volume: float, exact: np.ndarray, estimate: np.ndarray) -> float:
    """sqrt(|Omega| / N * sum (u - u*)^2), summed with fsum."""
    diff = np.asarray(exact, dtype=float) - np.asarray(estimate, dtype=float)
    return math.sqrt(volume / diff.size * math.fsum(diff * diff))


def config_echo(problem: Problem, T: float, config: SolverConfig) -> Dict:
    return {
        "problem": problem.name,
        "alpha": problem.orders.alpha,
        "beta": problem.orders.beta,
        "dim": problem.dim,
        "T": T,
        "dt": config.dt,
        "num_paths": config.num_paths,
        "seed": config.master_seed,
    }


def measure_l2_error(
    problem: Problem,
    T: float,
    config: SolverConfig,
    num_eval_points: int,
    eval_seed: int,
    workers: int = 1,
    estimator: Optional[Estimator] = None,
    keep_per_point: bool = True,
) -> ErrorReport:
    """
    Discrete L2 error of the estimator at time T over uniform random points.

    Args:
        problem: Problem with an exact solution
        T: Evaluation time
        config: Solver settings
        num_eval_points: N_s, number of evaluation points
        eval_seed: Seed of the evaluation-point stream (separate from trajectories)
        workers: Worker processes for the solver
        estimator: Replacement estimator (test hook)
        keep_per_point: Retain per-point records in the report

    Returns:
        ErrorReport
    """
    if not problem.has_exact:
        raise UsageError(f"problem {problem.name} has no exact solution to measure against")

    points = problem.domain.sample_interior_points(num_eval_points, RngStream.for_evaluation(eval_seed))
    estimator = estimator or monte_carlo_estimator
    estimates, std_errors = estimator(problem, T, points, config, workers)
    exact = np.asarray(problem.exact(T, points), dtype=float)

    report = ErrorReport(
        l2_error=l2_error(problem.domain.volume, exact, estimates),
        num_eval_points=num_eval_points,
        config=config_echo(problem, T, config),
    )
    if keep_per_point:
        report.per_point = [
            PointRecord(p.tolist(), float(u), float(e), float(s))
            for p, u, e, s in zip(points, exact, estimates, std_errors)
        ]
    logger.info(
        f"{problem.name}: M={config.num_paths}, dt={config.dt}, N_s={num_eval_points} -> L2 error {report.l2_error:.6g}"
    )
    return report


def fit_log_slope(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """
    Least-squares slope of log(y) against log(x).

    Returns:
        Tuple of (slope, standard error of the slope)
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    usable = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    if np.count_nonzero(usable) < 3:
        raise AnalysisError(
            f"need at least 3 finite positive points for a slope fit, got {np.count_nonzero(usable)}"
        )
    fit = stats.linregress(np.log(x[usable]), np.log(y[usable]))
    return float(fit.slope), float(fit.stderr)


def _validate_sweep(axis: str, values: Sequence[float]) -> List[float]:
    if axis not in AXES:
        raise ConfigurationError(f"sweep axis must be one of {', '.join(AXES)}, got {axis!r}", field="harness.axis")
    values = sorted(float(v) for v in values)
    if len(set(values)) < 3 or values[0] <= 0:
        raise ConfigurationError("sweep needs at least 3 distinct positive values", field="harness.values")
    if values[-1] / values[0] < 10.0:
        logger.warning(f"sweep over {axis} spans less than one decade ({values[0]:g} .. {values[-1]:g})")
    return values


def sweep(
    problem: Problem,
    T: float,
    base_config: SolverConfig,
    axis: str,
    values: Sequence[float],
    num_eval_points: int,
    eval_seed: int,
    workers: int = 1,
    estimator: Optional[Estimator] = None,
) -> ConvergenceTable:
    """
    Run measure_l2_error for each value of one axis and fit the rate.

    Args:
        problem: Problem with an exact solution
        T: Evaluation time
        base_config: Solver settings; the swept field is replaced per row
        axis: "num_paths" or "dt"
        values: At least 3 distinct positive axis values
        num_eval_points: N_s
        eval_seed: Evaluation-point seed, shared by all rows
        workers: Worker processes
        estimator: Replacement estimator (test hook)

    Returns:
        ConvergenceTable with rows sorted by axis value
    """
    values = _validate_sweep(axis, values)
    logger.info("=" * 70)
    logger.info(f"Sweep over {axis} for {problem.name}: {values}")
    logger.info("=" * 70)

    started = time.time()
    rows = []
    for value in values:
        if axis == "num_paths":
            value = int(round(value))
            config = with_paths(base_config, value)
        else:
            config = with_step(base_config, value)
        report = measure_l2_error(
            problem, T, config, num_eval_points, eval_seed, workers=workers, estimator=estimator, keep_per_point=False
        )
        rows.append((float(value), report.l2_error))

    rows.sort(key=lambda row: row[0])
    slope, stderr = fit_log_slope([r[0] for r in rows], [r[1] for r in rows])
    elapsed = time.time() - started
    logger.info(f"Fitted slope {slope:.4f} +- {stderr:.4f} over {len(rows)} rows in {elapsed:.1f}s")

    echo = config_echo(problem, T, base_config)
    echo.update({"axis": axis, "values": [r[0] for r in rows], "num_eval_points": num_eval_points, "eval_seed": eval_seed})
    return ConvergenceTable(axis=axis, rows=rows, fitted_slope=slope, slope_stderr=stderr, config=echo, wall_time=elapsed)


def _ensure_parent(path: str):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def _fmt(value: float) -> str:
    # shortest round-trip representation
    return repr(float(value))


def write_error_report(report: ErrorReport, path: str):
    """CSV with columns x1..xn, exact, estimate, std_error."""
    if report.per_point is None:
        raise UsageError("error report has no per-point data to write")
    dim = len(report.per_point[0].point) if report.per_point else 0
    _ensure_parent(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([f"x{i + 1}" for i in range(dim)] + ["exact", "estimate", "std_error"])
        for rec in report.per_point:
            writer.writerow([_fmt(c) for c in rec.point] + [_fmt(rec.exact), _fmt(rec.estimate), _fmt(rec.std_error)])
    logger.info(f"Error report written to {path}")


def write_convergence_table(table: ConvergenceTable, path: str):
    """CSV with columns axis_value, l2_error."""
    _ensure_parent(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["axis_value", "l2_error"])
        for value, error in table.rows:
            writer.writerow([_fmt(value), _fmt(error)])
    logger.info(f"Convergence table written to {path}")


def write_metadata(metadata: Dict, path: str):
    """JSON side-car record."""
    _ensure_parent(path)
    record = dict(metadata)
    record.setdefault("written_at", datetime.now().isoformat())
    with open(path, "w") as f:
        json.dump(record, f, indent=2, sort_keys=True)
    logger.info(f"Metadata written to {path}")


def table_metadata(table: ConvergenceTable, extra: Optional[Dict] = None) -> Dict:
    record = {
        "axis": table.axis,
        "fitted_slope": table.fitted_slope,
        "slope_stderr": table.slope_stderr,
        "wall_time": table.wall_time,
        "config": table.config,
    }
    if extra:
        record.update(extra)
    return record
