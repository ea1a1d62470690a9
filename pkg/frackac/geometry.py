#!/usr/bin/env python3
"""
Bounded Domain Classes

Provides the domain abstraction used by the walk-on-spheres exit test and the
error harness, plus the concrete domains of the reproduced experiments.
"""

import math
from abc import ABC, abstractmethod
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
from scipy import integrate

from logger_config import setup_logger
from .errors import ConfigurationError, UsageError
from .specfun import log_gamma
from .stable import RngStream

logger = setup_logger("geometry")

MIN_ACCEPTANCE_RATE = 1e-4
# Rejection from the bounding box is hopeless above this dimension for balls
DIRECT_SAMPLING_DIM = 10
MIN_PROPOSALS_FOR_RATE = 100_000


class Domain(ABC):
    """Base class for bounded open domains in R^n."""

    kind = "domain"

    def __init__(self, dim: int):
        self.dim = int(dim)

    def contains(self, x):
        """
        Membership test with the open-set convention (boundary counts as outside).

        Args:
            x: Point of shape (n,) or batch of shape (..., n)

        Returns:
            bool for a single point, boolean array of shape (...) for a batch
        """
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0 or arr.shape[-1] != self.dim:
            raise UsageError(
                f"point of shape {arr.shape} does not match {self.kind} of dimension {self.dim}"
            )
        inside = self._inside(arr)
        if arr.ndim == 1:
            return bool(inside)
        return inside

    @abstractmethod
    def _inside(self, x: np.ndarray) -> np.ndarray:
        """Vectorized membership over the last axis."""
        pass

    @property
    @abstractmethod
    def volume(self) -> float:
        pass

    @property
    @abstractmethod
    def centroid(self) -> np.ndarray:
        pass

    @property
    @abstractmethod
    def bounding_radius(self) -> float:
        """Radius around the centroid containing every point of the domain."""
        pass

    @abstractmethod
    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        pass

    @abstractmethod
    def to_spec(self) -> Dict:
        """Tagged record understood by domain_from_spec."""
        pass

    def rejection_sample(self, count: int, rng: RngStream) -> Tuple[np.ndarray, int]:
        """
        Uniform points in the domain by rejection from the bounding box.

        Returns:
            Tuple of (points of shape (count, n), number of proposals drawn)
        """
        lower, upper = self.bounding_box()
        accepted = []
        num_accepted = 0
        proposals = 0
        batch = max(4 * count, 1024)
        while num_accepted < count:
            candidates = lower + (upper - lower) * rng.generator.random((batch, self.dim))
            proposals += batch
            keep = candidates[self._inside(candidates)]
            accepted.append(keep)
            num_accepted += keep.shape[0]
            if proposals >= MIN_PROPOSALS_FOR_RATE and num_accepted < MIN_ACCEPTANCE_RATE * proposals:
                raise ConfigurationError(
                    f"rejection acceptance rate {num_accepted / proposals:.2e} is below "
                    f"{MIN_ACCEPTANCE_RATE:g} for {self.kind} in dimension {self.dim}",
                    field="domain",
                )
        return np.concatenate(accepted)[:count], proposals

    def sample_interior_points(self, count: int, rng: RngStream) -> np.ndarray:
        """
        Draw `count` i.i.d. uniform points in the domain.

        Args:
            count: Number of points, >= 1
            rng: Stream reserved for evaluation points

        Returns:
            Array of shape (count, n)
        """
        if count < 1:
            raise UsageError(f"count must be >= 1, got {count}")
        points, proposals = self.rejection_sample(count, rng)
        logger.debug(f"{self.kind}: {count} points from {proposals} proposals")
        return points

    def grid_points(self, resolution: int) -> np.ndarray:
        """Tensor grid over the bounding box clipped to the domain (2-D only)."""
        if self.dim != 2:
            raise UsageError(f"grid export is 2-D only, domain has dimension {self.dim}")
        if resolution < 2:
            raise UsageError(f"grid resolution must be >= 2, got {resolution}")
        lower, upper = self.bounding_box()
        xs = np.linspace(lower[0], upper[0], resolution)
        ys = np.linspace(lower[1], upper[1], resolution)
        gx, gy = np.meshgrid(xs, ys, indexing="xy")
        grid = np.column_stack([gx.ravel(), gy.ravel()])
        return grid[self._inside(grid)]

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.to_spec()})"


class Ball(Domain):
    """Open Euclidean ball."""

    kind = "ball"

    def __init__(self, center, radius: float = 1.0):
        center = np.asarray(center, dtype=float)
        if center.ndim != 1 or center.size < 2:
            raise ConfigurationError("ball center must be a point in dimension >= 2", field="domain.center")
        if not radius > 0:
            raise ConfigurationError(f"ball radius must be positive, got {radius}", field="domain.radius")
        super().__init__(center.size)
        self.center = center
        self.radius = float(radius)

    @classmethod
    def unit(cls, dim: int) -> "Ball":
        return cls(np.zeros(int(dim)), 1.0)

    def _inside(self, x):
        offset = x - self.center
        return np.sum(offset * offset, axis=-1) < self.radius * self.radius

    @property
    def volume(self) -> float:
        n = self.dim
        return math.exp(
            0.5 * n * math.log(math.pi) + n * math.log(self.radius) - float(log_gamma(0.5 * n + 1.0))
        )

    @property
    def centroid(self):
        return self.center.copy()

    @property
    def bounding_radius(self) -> float:
        return self.radius

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def sample_interior_points(self, count: int, rng: RngStream) -> np.ndarray:
        if self.dim <= DIRECT_SAMPLING_DIM:
            return super().sample_interior_points(count, rng)
        if count < 1:
            raise UsageError(f"count must be >= 1, got {count}")
        # direction uniform on the sphere, radius ~ U^(1/n)
        points = np.empty((count, self.dim))
        pending = np.arange(count)
        while pending.size:
            z = rng.generator.standard_normal((pending.size, self.dim))
            z /= np.linalg.norm(z, axis=1)[:, None]
            r = self.radius * rng.open_uniform(pending.size) ** (1.0 / self.dim)
            candidates = self.center + r[:, None] * z
            # draws that round onto the sphere are redrawn
            inside = self._inside(candidates)
            points[pending[inside]] = candidates[inside]
            pending = pending[~inside]
        return points

    def to_spec(self):
        return {"kind": self.kind, "center": self.center.tolist(), "radius": self.radius}


class LShape(Domain):
    """(-1, 1)^2 minus the closed quadrant [0, 1]^2."""

    kind = "l_shape"

    def __init__(self):
        super().__init__(2)

    def _inside(self, x):
        x1, x2 = x[..., 0], x[..., 1]
        in_square = (np.abs(x1) < 1.0) & (np.abs(x2) < 1.0)
        return in_square & ~((x1 >= 0.0) & (x2 >= 0.0))

    @property
    def volume(self) -> float:
        return 3.0

    @property
    def centroid(self):
        return np.array([-1.0 / 6.0, -1.0 / 6.0])

    @property
    def bounding_radius(self) -> float:
        # farthest corner (1, -1) from the centroid
        return math.sqrt(74.0) / 6.0

    def bounding_box(self):
        return np.array([-1.0, -1.0]), np.array([1.0, 1.0])

    def to_spec(self):
        return {"kind": self.kind}


class PolarStar(Domain):
    """
    Star-shaped planar domain |x| < R(theta) with a trigonometric radius.

    R(theta) = constant + sum_k s_k sin(k theta) + sum_k c_k cos(k theta)
    """

    kind = "polar_star"
    POSITIVITY_SAMPLES = 4096

    def __init__(
        self,
        constant: float = 1.0,
        sine_terms: Optional[Mapping[int, float]] = None,
        cosine_terms: Optional[Mapping[int, float]] = None,
    ):
        super().__init__(2)
        self.constant = float(constant)
        self.sine_terms = {int(k): float(v) for k, v in (sine_terms or {}).items()}
        self.cosine_terms = {int(k): float(v) for k, v in (cosine_terms or {}).items()}

        theta = np.linspace(0.0, 2.0 * math.pi, self.POSITIVITY_SAMPLES, endpoint=False)
        if np.min(self.radius_at(theta)) <= 0.0:
            raise ConfigurationError("polar_star radius must stay positive", field="domain")

        self._volume = None
        self._centroid = None

    def radius_at(self, theta):
        theta = np.asarray(theta, dtype=float)
        r = np.full(theta.shape, self.constant)
        for k, amp in self.sine_terms.items():
            r = r + amp * np.sin(k * theta)
        for k, amp in self.cosine_terms.items():
            r = r + amp * np.cos(k * theta)
        return r

    def _inside(self, x):
        x1, x2 = x[..., 0], x[..., 1]
        return np.hypot(x1, x2) < self.radius_at(np.arctan2(x2, x1))

    def _quad(self, func) -> float:
        value, _ = integrate.quad(func, 0.0, 2.0 * math.pi, limit=400, epsabs=1e-13, epsrel=1e-12)
        return value

    @property
    def volume(self) -> float:
        if self._volume is None:
            self._volume = self._quad(lambda t: 0.5 * float(self.radius_at(t)) ** 2)
        return self._volume

    @property
    def centroid(self):
        if self._centroid is None:
            mx = self._quad(lambda t: float(self.radius_at(t)) ** 3 * math.cos(t) / 3.0)
            my = self._quad(lambda t: float(self.radius_at(t)) ** 3 * math.sin(t) / 3.0)
            self._centroid = np.array([mx, my]) / self.volume
        return self._centroid.copy()

    @property
    def max_radius(self) -> float:
        return self.constant + sum(abs(v) for v in self.sine_terms.values()) + sum(
            abs(v) for v in self.cosine_terms.values()
        )

    @property
    def bounding_radius(self) -> float:
        return self.max_radius + float(np.linalg.norm(self.centroid))

    def bounding_box(self):
        r = self.max_radius
        return np.array([-r, -r]), np.array([r, r])

    def to_spec(self):
        return {
            "kind": self.kind,
            "constant": self.constant,
            "sine_terms": {str(k): v for k, v in self.sine_terms.items()},
            "cosine_terms": {str(k): v for k, v in self.cosine_terms.items()},
        }


class HyperRectangle(Domain):
    """Open box prod_i (lower_i, upper_i)."""

    kind = "hyper_rectangle"

    def __init__(self, lower, upper):
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1 or lower.size < 2:
            raise ConfigurationError("bounds must be matching points in dimension >= 2", field="domain.lower")
        if np.any(upper <= lower):
            raise ConfigurationError("every upper bound must exceed its lower bound", field="domain.upper")
        super().__init__(lower.size)
        self.lower = lower
        self.upper = upper

    def _inside(self, x):
        return np.all((x > self.lower) & (x < self.upper), axis=-1)

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    @property
    def centroid(self):
        return 0.5 * (self.lower + self.upper)

    @property
    def bounding_radius(self) -> float:
        return 0.5 * float(np.linalg.norm(self.upper - self.lower))

    def bounding_box(self):
        return self.lower.copy(), self.upper.copy()

    def to_spec(self):
        return {"kind": self.kind, "lower": self.lower.tolist(), "upper": self.upper.tolist()}


def hexagonal_hailstone() -> PolarStar:
    """R(theta) = 1 + 0.9 sin(6 theta) + 0.1 cos(10 theta)."""
    return PolarStar(1.0, {6: 0.9}, {10: 0.1})


def domain_from_spec(spec: Mapping) -> Domain:
    """
    Build a domain from its tagged config record.

    Args:
        spec: Dict with "kind" plus that kind's parameters

    Returns:
        Domain instance
    """
    kind = spec.get("kind")
    try:
        if kind == "ball":
            if "center" in spec:
                return Ball(spec["center"], spec.get("radius", 1.0))
            return Ball(np.zeros(int(spec.get("dim", 2))), spec.get("radius", 1.0))
        if kind == "l_shape":
            return LShape()
        if kind == "polar_star":
            if not any(k in spec for k in ("constant", "sine_terms", "cosine_terms")):
                return hexagonal_hailstone()
            return PolarStar(
                spec.get("constant", 1.0), spec.get("sine_terms"), spec.get("cosine_terms")
            )
        if kind == "hyper_rectangle":
            return HyperRectangle(spec["lower"], spec["upper"])
    except KeyError as e:
        raise ConfigurationError(f"missing parameter {e} for kind {kind!r}", field="domain")
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid parameters for kind {kind!r}: {e}", field="domain")

    raise ConfigurationError(
        f"unknown domain kind {kind!r} (expected ball, l_shape, polar_star or hyper_rectangle)",
        field="domain.kind",
    )
