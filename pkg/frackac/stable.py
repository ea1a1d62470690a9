"""
One-sided stable subordinator sampling.

Each trajectory owns an RngStream: a Philox counter-based generator keyed by
(master_seed, stream_index), so paths are reproducible and independent of
the order in which trajectories are simulated.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from logger_config import setup_logger
from .errors import DomainError

logger = setup_logger("stable")

DEFAULT_PATH_BLOCK = 256

# Spawn-key channels; trajectories keep the bare (index,) key
TRAJECTORY_CHANNEL = 0
EVALUATION_CHANNEL = 1


@dataclass
class RngStream:
    """Independent random stream for one trajectory."""

    master_seed: int
    stream_index: int
    channel: int = TRAJECTORY_CHANNEL
    _generator: Optional[np.random.Generator] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.stream_index < 0:
            raise DomainError(f"stream_index must be nonnegative, got {self.stream_index}")
        if self.channel < 0:
            raise DomainError(f"channel must be nonnegative, got {self.channel}")

    @classmethod
    def for_evaluation(cls, seed: int, index: int = 0) -> "RngStream":
        """Stream for evaluation points; its spawn key never equals a trajectory key."""
        return cls(seed, index, channel=EVALUATION_CHANNEL)

    @property
    def spawn_key(self) -> tuple:
        index = int(self.stream_index)
        return (index,) if self.channel == TRAJECTORY_CHANNEL else (int(self.channel), index)

    @property
    def generator(self) -> np.random.Generator:
        if self._generator is None:
            seed_seq = np.random.SeedSequence(
                entropy=int(self.master_seed) & 0xFFFFFFFFFFFFFFFF,
                spawn_key=self.spawn_key,
            )
            self._generator = np.random.Generator(np.random.Philox(seed_seq))
        return self._generator

    def open_uniform(self, size=None):
        """Uniform variates on (0, 1]."""
        return 1.0 - self.generator.random(size)


@dataclass
class SubordinatorPath:
    """Discrete subordinator path up to and including its first crossing of t."""

    dt: float
    values: np.ndarray
    stop_index: int

    @property
    def stopping_time(self) -> float:
        return self.dt * self.stop_index


def _check_beta(beta: float, upper_inclusive: bool):
    ok = 0 < beta <= 1 if upper_inclusive else 0 < beta < 1
    if not ok:
        bound = "(0, 1]" if upper_inclusive else "(0, 1)"
        raise DomainError(f"beta must lie in {bound}, got {beta}")


def log_one_sided_stable(beta: float, theta: np.ndarray, w: np.ndarray) -> np.ndarray:
    """
    Log of Kanter's representation of a totally skewed beta-stable variate.

    eta = (A(theta) / W)^((1 - beta) / beta) with
    A(theta) = sin((1-beta) theta) sin(beta theta)^(beta/(1-beta)) / sin(theta)^(1/(1-beta)),
    theta uniform on (0, pi] and W unit exponential. The Laplace transform of
    eta is exp(-k^beta).
    """
    ratio = (1.0 - beta) / beta
    with np.errstate(divide="ignore"):
        return (
            ratio * np.log(np.sin((1.0 - beta) * theta))
            + np.log(np.sin(beta * theta))
            - np.log(np.sin(theta)) / beta
            - ratio * np.log(w)
        )


def draw_one_sided_stable(beta: float, rng: RngStream, size: int) -> np.ndarray:
    """Vectorized draws of eta ~ S_beta(1, 1, 0), normalized so E[exp(-k eta)] = exp(-k^beta)."""
    _check_beta(beta, upper_inclusive=False)
    theta = math.pi * rng.open_uniform(size)
    w = rng.generator.standard_exponential(size)
    with np.errstate(over="ignore"):
        return np.exp(log_one_sided_stable(beta, theta, w))


def sample_one_sided_stable(beta: float, rng: RngStream) -> float:
    """
    Draw a single positive stable variate eta.

    Args:
        beta: Stability index in (0, 1)
        rng: Trajectory stream

    Returns:
        eta > 0 with E[exp(-k eta)] = exp(-k^beta)
    """
    return float(draw_one_sided_stable(beta, rng, 1)[0])


def subordinator_increments(beta: float, dt: float, rng: RngStream, size: int) -> np.ndarray:
    """Increments (dt)^(1/beta) * eta_i of the subordinator over `size` grid steps."""
    theta = math.pi * rng.open_uniform(size)
    w = rng.generator.standard_exponential(size)
    with np.errstate(over="ignore"):
        return np.exp(math.log(dt) / beta + log_one_sided_stable(beta, theta, w))


def _degenerate_stop_index(dt: float, t: float) -> int:
    n = max(int(math.ceil(t / dt)), 1)
    while n * dt < t:
        n += 1
    while n > 1 and (n - 1) * dt >= t:
        n -= 1
    return n


def subordinator_path(
    beta: float, dt: float, t: float, rng: RngStream, block_size: int = DEFAULT_PATH_BLOCK
) -> SubordinatorPath:
    """
    Simulate Y^beta on the grid t_i = i dt until it first reaches t.

    For beta = 1 the subordinator is Y(s) = s and the path is deterministic.

    Args:
        beta: Stability index in (0, 1]
        dt: Time step, > 0
        t: Level to cross, > 0
        rng: Trajectory stream
        block_size: Number of increments drawn per batch

    Returns:
        SubordinatorPath with values[0] = 0 and values[stop_index] >= t
    """
    _check_beta(beta, upper_inclusive=True)
    if not (dt > 0 and t > 0):
        raise DomainError(f"dt and t must be positive, got dt={dt}, t={t}")

    if beta == 1.0:
        stop = _degenerate_stop_index(dt, t)
        return SubordinatorPath(dt=dt, values=dt * np.arange(stop + 1), stop_index=stop)

    blocks = [np.zeros(1)]
    current = 0.0
    while True:
        values = current + np.cumsum(subordinator_increments(beta, dt, rng, block_size))
        hits = np.flatnonzero(values >= t)
        if hits.size:
            blocks.append(values[: hits[0] + 1])
            break
        blocks.append(values)
        current = values[-1]

    path = np.concatenate(blocks)
    logger.debug(f"subordinator path crossed t={t} after {path.size - 1} steps")
    return SubordinatorPath(dt=dt, values=path, stop_index=path.size - 1)


def exit_time_samples(beta: float, t: float, rng: RngStream, size: int) -> np.ndarray:
    """Direct samples of the continuous stopping time tau_t, distributed as (t / eta)^beta."""
    _check_beta(beta, upper_inclusive=True)
    if beta == 1.0:
        return np.full(size, float(t))
    return (t / draw_one_sided_stable(beta, rng, size)) ** beta
