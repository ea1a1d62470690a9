#!/usr/bin/env python3
"""
Feynman-Kac Monte Carlo solver.

Couples the subordinator path (time) and the walk-on-spheres path (space) on
the shared grid t_i = i dt, stops at the first temporal crossing Y >= t or
spatial exit X not in the domain, and averages

    payoff + dt * sum_{i=1..k} f(max(t - Y_i, 0), X_i)

over independent trajectories. Trajectory j draws all of its randomness from
RngStream(master_seed, j), so results do not depend on the worker count.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from logger_config import setup_logger
from .errors import ConfigurationError, TrajectoryError, UsageError
from .problems import Problem
from .stable import RngStream, subordinator_increments
from .wos import WosParams, draw_jump_radii, draw_unit_directions

logger = setup_logger("solver")

STOP_TEMPORAL = "temporal"
STOP_SPATIAL = "spatial"

_FAILED, _TEMPORAL, _SPATIAL = -1, 0, 1

# A failure fraction at or above this aborts the estimate
MAX_FAILURE_FRACTION = 1e-3
STEP_BUDGET_FACTOR = 20
DEFAULT_STREAM_STRIDE = 2 ** 32


@dataclass(frozen=True)
class SolverConfig:
    """Discretization and sampling settings."""

    dt: float
    num_paths: int
    master_seed: int = 0
    max_steps: Optional[int] = None
    chunk_size: int = 256
    block_size: int = 128
    stream_offset: int = 0
    stream_stride: int = DEFAULT_STREAM_STRIDE

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}", field="solver.dt")
        if self.num_paths < 1:
            raise ConfigurationError(f"num_paths must be >= 1, got {self.num_paths}", field="solver.num_paths")
        if self.max_steps is not None and self.max_steps < 1:
            raise ConfigurationError(f"max_steps must be >= 1, got {self.max_steps}", field="solver.max_steps")
        if self.chunk_size < 1 or self.block_size < 1:
            raise ConfigurationError("chunk_size and block_size must be >= 1", field="solver")
        if self.stream_offset < 0 or self.stream_stride < 1:
            raise ConfigurationError("stream_offset must be >= 0 and stream_stride >= 1", field="solver")

    def step_budget(self, horizon: float) -> int:
        """Per-trajectory step cap: max_steps or ceil(20 max(T, 1) / dt)."""
        if self.max_steps is not None:
            return int(self.max_steps)
        return int(math.ceil(STEP_BUDGET_FACTOR * max(horizon, 1.0) / self.dt))


@dataclass(frozen=True)
class TrajectoryOutcome:
    """Classification and contribution of one simulated path."""

    stop_kind: str
    stop_index: int
    payoff: float
    quadrature: float
    contribution: float


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean over the successful trajectories."""

    mean: float
    std_error: float
    num_paths: int
    num_failed: int = 0
    num_temporal: int = 0
    num_spatial: int = 0


@dataclass
class PathBatch:
    """Outcomes of a contiguous range of stream indices."""

    stop_kind: np.ndarray
    stop_index: np.ndarray
    payoff: np.ndarray
    quadrature: np.ndarray

    @property
    def contributions(self) -> np.ndarray:
        return self.payoff + self.quadrature

    @property
    def failed(self) -> np.ndarray:
        return self.stop_kind == _FAILED

    @classmethod
    def concatenate(cls, batches: Sequence["PathBatch"]) -> "PathBatch":
        return cls(
            stop_kind=np.concatenate([b.stop_kind for b in batches]),
            stop_index=np.concatenate([b.stop_index for b in batches]),
            payoff=np.concatenate([b.payoff for b in batches]),
            quadrature=np.concatenate([b.quadrature for b in batches]),
        )


def simulate_paths(problem: Problem, t: float, x, config: SolverConfig, first_stream: int, count: int) -> PathBatch:
    """
    Simulate trajectories with stream indices first_stream .. first_stream + count - 1.

    Trajectories advance in lockstep blocks of config.block_size steps. Within
    a block each stream draws, in order: the subordinator increments, the
    radial jump variates and the directions.

    Returns:
        PathBatch; trajectories that exceed the step budget are marked failed
    """
    alpha, beta = problem.orders.alpha, problem.orders.beta
    domain = problem.domain
    dim = domain.dim
    dt = config.dt
    block = config.block_size
    budget = config.step_budget(problem.horizon)
    radius = WosParams.from_step(alpha, dim, dt).radius
    streams = [RngStream(config.master_seed, first_stream + j) for j in range(count)]

    y = np.zeros(count)
    position = np.tile(np.asarray(x, dtype=float), (count, 1))
    steps = np.zeros(count, dtype=np.int64)
    source_sum = np.zeros(count)
    stop_kind = np.full(count, _FAILED, dtype=np.int8)
    stop_index = np.zeros(count, dtype=np.int64)
    payoff = np.zeros(count)
    active = np.arange(count)
    offsets = np.arange(1, block + 1)

    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        while active.size:
            rows = active.size
            increments = np.empty((rows, block)) if beta < 1.0 else None
            jumps = np.empty((rows, block, dim))
            for row, j in enumerate(active):
                rng = streams[j]
                if beta < 1.0:
                    increments[row] = subordinator_increments(beta, dt, rng, block)
                radii = draw_jump_radii(alpha, radius, rng, block)
                jumps[row] = radii[:, None] * draw_unit_directions(dim, rng, block)

            step_numbers = steps[active, None] + offsets
            if beta < 1.0:
                y_path = y[active, None] + np.cumsum(increments, axis=1)
            else:
                y_path = step_numbers * dt
            x_path = position[active, None, :] + np.cumsum(jumps, axis=1)

            exited = ~domain.contains(x_path)
            event = exited | (y_path >= t)
            allowed = offsets[None, :] <= (budget - steps[active])[:, None]
            event &= allowed
            has_event = event.any(axis=1)
            first = np.argmax(event, axis=1)

            partial = np.cumsum(problem.f(t - y_path, x_path), axis=1)
            last = np.where(has_event, first, block - 1)
            source_sum[active] += partial[np.arange(rows), last]

            done = np.flatnonzero(has_event)
            if done.size:
                idx = active[done]
                col = first[done]
                y_stop = y_path[done, col]
                x_stop = x_path[done, col]
                spatial = exited[done, col]
                values = np.empty(done.size)
                if spatial.any():
                    values[spatial] = problem.g(t - y_stop[spatial], x_stop[spatial])
                if (~spatial).any():
                    values[~spatial] = problem.u0(x_stop[~spatial])
                payoff[idx] = values
                stop_kind[idx] = np.where(spatial, _SPATIAL, _TEMPORAL)
                stop_index[idx] = steps[idx] + col + 1

            going = ~has_event
            idx = active[going]
            y[idx] = y_path[going, -1]
            position[idx] = x_path[going, -1]
            steps[idx] += block
            # paths that used up their budget without an event stay failed
            active = idx[steps[idx] < budget]

    failures = int(np.sum(stop_kind == _FAILED))
    if failures:
        logger.warning(f"{failures} of {count} trajectories exceeded {budget} steps")
    return PathBatch(stop_kind=stop_kind, stop_index=stop_index, payoff=payoff, quadrature=dt * source_sum)


def _check_request(problem: Problem, t: float, points: np.ndarray):
    if not (0 < t <= problem.horizon):
        raise UsageError(f"evaluation time must lie in (0, {problem.horizon}], got {t}")
    if points.ndim != 2 or points.shape[1] != problem.dim:
        raise UsageError(f"points must have shape (m, {problem.dim}), got {points.shape}")
    outside = np.flatnonzero(~problem.domain.contains(points))
    if outside.size:
        raise UsageError(
            f"{outside.size} evaluation point(s) lie outside the {problem.domain.kind} domain, "
            f"first {points[outside[0]].tolist()}"
        )


def simulate_trajectory(problem: Problem, t: float, x, config: SolverConfig, stream_index: int) -> TrajectoryOutcome:
    """
    Simulate one trajectory from (t, x) with its own stream.

    Raises:
        TrajectoryError: the path exceeded the step budget
    """
    point = np.asarray(x, dtype=float)
    _check_request(problem, t, point[None, :])
    batch = simulate_paths(problem, t, point, config, stream_index, 1)
    if batch.failed[0]:
        raise TrajectoryError(
            f"trajectory {stream_index} exceeded {config.step_budget(problem.horizon)} steps"
        )
    payoff = float(batch.payoff[0])
    quadrature = float(batch.quadrature[0])
    return TrajectoryOutcome(
        stop_kind=STOP_SPATIAL if batch.stop_kind[0] == _SPATIAL else STOP_TEMPORAL,
        stop_index=int(batch.stop_index[0]),
        payoff=payoff,
        quadrature=quadrature,
        contribution=payoff + quadrature,
    )


def _run_chunk(item: Tuple) -> PathBatch:
    problem, t, x, config, first_stream, count = item
    return simulate_paths(problem, t, x, config, first_stream, count)


def _work_items(problem, t, points, config) -> List[Tuple]:
    items = []
    for i, x in enumerate(points):
        base = config.stream_offset + i * config.stream_stride
        for start in range(0, config.num_paths, config.chunk_size):
            count = min(config.chunk_size, config.num_paths - start)
            items.append((problem, t, x, config, base + start, count))
    return items


def _run_items(items: List[Tuple], workers: int) -> List[PathBatch]:
    if workers <= 1 or len(items) <= 1:
        return [_run_chunk(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as executor:
        return list(executor.map(_run_chunk, items))


def simulate_points(problem: Problem, t: float, points, config: SolverConfig, workers: int = 1) -> List[PathBatch]:
    """Trajectory outcomes for each point, in stream-index order."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    _check_request(problem, t, points)
    items = _work_items(problem, t, points, config)
    chunks_per_point = len(items) // len(points)
    results = _run_items(items, workers)
    return [
        PathBatch.concatenate(results[i * chunks_per_point : (i + 1) * chunks_per_point])
        for i in range(len(points))
    ]


def summarize(batch: PathBatch) -> Estimate:
    """
    Reduce trajectory outcomes to an Estimate in index order.

    Raises:
        TrajectoryError: the failure fraction reached MAX_FAILURE_FRACTION
    """
    total = batch.stop_kind.size
    failed = int(np.sum(batch.failed))
    if failed and failed >= MAX_FAILURE_FRACTION * total:
        raise TrajectoryError(f"{failed} of {total} trajectories exceeded the step budget")

    values = batch.contributions[~batch.failed]
    m = values.size
    mean = math.fsum(values) / m
    if m > 1:
        variance = math.fsum((values - mean) ** 2) / (m - 1)
        std_error = math.sqrt(variance / m)
    else:
        std_error = 0.0
    return Estimate(
        mean=mean,
        std_error=std_error,
        num_paths=m,
        num_failed=failed,
        num_temporal=int(np.sum(batch.stop_kind == _TEMPORAL)),
        num_spatial=int(np.sum(batch.stop_kind == _SPATIAL)),
    )


def trajectory_contributions(problem: Problem, t: float, x, config: SolverConfig, workers: int = 1) -> np.ndarray:
    """Per-trajectory contributions at one point (NaN for failed paths)."""
    batch = simulate_points(problem, t, [x], config, workers)[0]
    values = batch.contributions
    values[batch.failed] = np.nan
    return values


def estimate_point(problem: Problem, t: float, x, config: SolverConfig, workers: int = 1) -> Estimate:
    """
    Monte Carlo estimate of u(t, x).

    Args:
        problem: Problem data and domain
        t: Evaluation time in (0, T]
        x: Evaluation point inside the domain
        config: Solver settings; stream indices stream_offset .. + num_paths - 1
        workers: Number of worker processes (results do not depend on it)

    Returns:
        Estimate
    """
    estimate = summarize(simulate_points(problem, t, [x], config, workers)[0])
    logger.debug(f"u({t}, {list(np.atleast_1d(x))}) ~ {estimate.mean} +- {estimate.std_error}")
    return estimate


def estimate_field(problem: Problem, t: float, points, config: SolverConfig, workers: int = 1) -> List[Estimate]:
    """
    Independent estimates at several points.

    Point i uses stream indices stream_offset + i * stream_stride + j, so no two
    points share randomness and the first point matches estimate_point.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if config.num_paths > config.stream_stride:
        raise ConfigurationError("num_paths exceeds stream_stride; points would share streams", field="solver.num_paths")
    logger.info(f"Estimating {len(points)} points at t={t} with M={config.num_paths}, dt={config.dt}")
    return [summarize(batch) for batch in simulate_points(problem, t, points, config, workers)]


def with_paths(config: SolverConfig, num_paths: int) -> SolverConfig:
    return replace(config, num_paths=int(num_paths))


def with_step(config: SolverConfig, dt: float) -> SolverConfig:
    return replace(config, dt=float(dt))
