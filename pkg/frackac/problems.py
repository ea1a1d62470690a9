#!/usr/bin/env python3
"""
Problem Definitions

Data (initial value u0, exterior value g, source f) and optional exact
solutions for the space-time fractional diffusion problem, including the four
manufactured examples used by the convergence experiments.

All data functions are vectorized: points have shape (..., n) and times are
scalars or arrays broadcastable to the point batch shape (...).
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from logger_config import setup_logger
from .errors import ConfigurationError, DomainError, UsageError
from .geometry import Ball, Domain, LShape, domain_from_spec, hexagonal_hailstone
from .specfun import gamma, gauss_2f1, log_gamma, mittag_leffler

logger = setup_logger("problems")


@dataclass(frozen=True)
class FractionalOrders:
    """Space order alpha in (0, 2] and time order beta in (0, 1]."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (0 < self.alpha <= 2):
            raise DomainError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not (0 < self.beta <= 1):
            raise DomainError(f"beta must lie in (0, 1], got {self.beta}")


def _points(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _squared_norm(x: np.ndarray) -> np.ndarray:
    return np.sum(x * x, axis=-1)


def _batch_shape(t, x: np.ndarray):
    return np.broadcast_shapes(np.shape(t), x.shape[:-1])


def _output(values):
    arr = np.asarray(values, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


class Problem(ABC):
    """Base class bundling orders, domain, horizon and data functions."""

    name = "problem"

    def __init__(self, orders: FractionalOrders, domain: Domain, horizon: float):
        if not horizon > 0:
            raise DomainError(f"horizon T must be positive, got {horizon}")
        self.orders = orders
        self.domain = domain
        self.horizon = float(horizon)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def has_exact(self) -> bool:
        return False

    def u0(self, x):
        """Initial value at points x."""
        return _output(self._initial(_points(x)))

    def g(self, t, x):
        """Exterior value; negative times are clamped to 0."""
        return _output(self._exterior(np.maximum(t, 0.0), _points(x)))

    def f(self, t, x):
        """Source term; negative times are clamped to 0."""
        return _output(self._source(np.maximum(t, 0.0), _points(x)))

    def exact(self, t, x):
        if not self.has_exact:
            raise UsageError(f"problem {self.name} has no exact solution")
        return _output(self._exact(np.asarray(t, dtype=float), _points(x)))

    @abstractmethod
    def _initial(self, x: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def _exterior(self, t, x: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def _source(self, t, x: np.ndarray) -> np.ndarray:
        pass

    def _exact(self, t, x: np.ndarray) -> np.ndarray:
        raise UsageError(f"problem {self.name} has no exact solution")

    def describe(self) -> Dict:
        return {
            "name": self.name,
            "alpha": self.orders.alpha,
            "beta": self.orders.beta,
            "dim": self.dim,
            "horizon": self.horizon,
            "domain": self.domain.to_spec(),
        }

    def __repr__(self) -> str:
        return f"{type(self).__name__}(alpha={self.orders.alpha}, beta={self.orders.beta}, dim={self.dim}, T={self.horizon})"


def _ball_weight(x: np.ndarray, alpha: float) -> np.ndarray:
    """(1 - |x|^2)_+^(alpha/2)."""
    return np.maximum(1.0 - _squared_norm(x), 0.0) ** (alpha / 2.0)


class Example1(Problem):
    """
    Unit ball in R^n with exact solution t^beta (1 - |x|^2)_+^(alpha/2).

    Zero initial and exterior data.
    """

    name = "example1"

    def __init__(self, alpha: float, beta: float, dim: int = 2, horizon: float = 1.0):
        super().__init__(FractionalOrders(alpha, beta), Ball.unit(dim), horizon)
        n = self.dim
        # fractional Laplacian of the weight inside the ball
        self.laplacian_constant = math.exp(
            alpha * math.log(2.0)
            + float(log_gamma(1.0 + alpha / 2.0))
            + float(log_gamma((n + alpha) / 2.0))
            - float(log_gamma(n / 2.0))
        )
        self.gamma_beta = float(gamma(beta + 1.0))

    @property
    def has_exact(self) -> bool:
        return True

    def _initial(self, x):
        return np.zeros(x.shape[:-1])

    def _exterior(self, t, x):
        return np.zeros(_batch_shape(t, x))

    def _source(self, t, x):
        beta = self.orders.beta
        return self.gamma_beta * _ball_weight(x, self.orders.alpha) + t ** beta * self.laplacian_constant

    def _exact(self, t, x):
        return t ** self.orders.beta * _ball_weight(x, self.orders.alpha)


class Example2(Problem):
    """Unit disk with exact solution E_beta(-t^beta) (1 - |x|^2)_+^(alpha/2)."""

    name = "example2"

    def __init__(self, alpha: float, beta: float, horizon: float = 1.0):
        super().__init__(FractionalOrders(alpha, beta), Ball.unit(2), horizon)
        self.laplacian_constant = 2.0 ** alpha * float(gamma(1.0 + alpha / 2.0)) ** 2

    @property
    def has_exact(self) -> bool:
        return True

    def _relaxation(self, t):
        beta = self.orders.beta
        return np.asarray(mittag_leffler(beta, -(np.asarray(t, dtype=float) ** beta)))

    def _initial(self, x):
        return _ball_weight(x, self.orders.alpha)

    def _exterior(self, t, x):
        return np.zeros(_batch_shape(t, x))

    def _source(self, t, x):
        relax = self._relaxation(t)
        return relax * (self.laplacian_constant - _ball_weight(x, self.orders.alpha))

    def _exact(self, t, x):
        return self._relaxation(t) * _ball_weight(x, self.orders.alpha)


class Example3(Problem):
    """
    L-shaped domain with exact solution t^a (1 + |x|^2)^(-7/2), a = 1.2.

    The exterior data equals the exact solution, so g is nonzero.
    """

    name = "example3"
    TIME_POWER = 1.2

    def __init__(self, alpha: float, beta: float, horizon: float = 1.0, time_power: float = TIME_POWER):
        super().__init__(FractionalOrders(alpha, beta), LShape(), horizon)
        a = float(time_power)
        if not a > beta:
            raise ConfigurationError(f"time power must exceed beta, got {a}", field="problem.time_power")
        self.time_power = a
        self.caputo_constant = float(gamma(a + 1.0)) / float(gamma(a + 1.0 - beta))
        self.laplacian_constant = (
            2.0 ** alpha
            * float(gamma((alpha + 7.0) / 2.0))
            * float(gamma((alpha + 2.0) / 2.0))
            / float(gamma(3.5))
        )

    @property
    def has_exact(self) -> bool:
        return True

    @staticmethod
    def _profile(x):
        return (1.0 + _squared_norm(x)) ** -3.5

    def _initial(self, x):
        return np.zeros(x.shape[:-1])

    def _exterior(self, t, x):
        return self._exact(t, x)

    def _source(self, t, x):
        alpha, beta, a = self.orders.alpha, self.orders.beta, self.time_power
        hyper = np.asarray(
            gauss_2f1((2.0 + alpha) / 2.0, (7.0 + alpha) / 2.0, 1.0, -_squared_norm(x))
        )
        return (
            self.caputo_constant * t ** (a - beta) * self._profile(x)
            + self.laplacian_constant * t ** a * hyper
        )

    def _exact(self, t, x):
        return t ** self.time_power * self._profile(x)


_SPLITMIX_INCREMENT = np.uint64(0x9E3779B97F4A7C15)
_SPLITMIX_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_SPLITMIX_MUL2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(z: np.ndarray) -> np.ndarray:
    z = z + _SPLITMIX_INCREMENT
    z = (z ^ (z >> np.uint64(30))) * _SPLITMIX_MUL1
    z = (z ^ (z >> np.uint64(27))) * _SPLITMIX_MUL2
    return z ^ (z >> np.uint64(31))


def hashed_uniform_field(x: np.ndarray, seed: int = 0) -> np.ndarray:
    """Deterministic pseudo-random values in [0, 1) keyed by the exact float bits of each point."""
    bits = np.ascontiguousarray(np.atleast_2d(x), dtype=np.float64).view(np.uint64)
    h = np.full(bits.shape[:-1], np.uint64(seed & 0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
    with np.errstate(over="ignore"):
        for i in range(bits.shape[-1]):
            h = _splitmix64(h ^ bits[..., i])
    values = (h >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    return values.reshape(np.shape(x)[:-1])


class Example4(Problem):
    """
    Hexagonal hailstone with a rough initial field and no exact solution.

    u0 is a fixed hash of the coordinates mapped to [-2, -1]; g = 0.
    """

    name = "example4"

    def __init__(
        self,
        alpha: float,
        beta: float,
        horizon: float = 0.5,
        domain: Optional[Domain] = None,
        field_seed: int = 0,
    ):
        domain = domain if domain is not None else hexagonal_hailstone()
        if domain.dim != 2:
            raise ConfigurationError("example4 needs a 2-D domain", field="domain")
        super().__init__(FractionalOrders(alpha, beta), domain, horizon)
        self.field_seed = int(field_seed)

    def _initial(self, x):
        return -2.0 + hashed_uniform_field(x, self.field_seed)

    def _exterior(self, t, x):
        return np.zeros(_batch_shape(t, x))

    def _source(self, t, x):
        x1, x2 = x[..., 0], x[..., 1]
        envelope = np.cos(t) / (1.0 + 10.0 * t * t)
        return envelope * (
            np.cos(math.pi / 3.0 * x1 * x1 - x1 * x2) + np.sin(math.pi / 6.0 * x2 * x2 + x1 * x2)
        )

    def describe(self):
        info = super().describe()
        info["field_seed"] = self.field_seed
        return info


class ConstantDataProblem(Problem):
    """Constant u0, g and f on an arbitrary domain; no exact solution."""

    name = "constant"

    def __init__(
        self,
        domain: Domain,
        orders: FractionalOrders,
        horizon: float = 1.0,
        initial: float = 0.0,
        exterior: float = 0.0,
        source: float = 0.0,
    ):
        super().__init__(orders, domain, horizon)
        self.initial = float(initial)
        self.exterior = float(exterior)
        self.source = float(source)

    def _initial(self, x):
        return np.full(x.shape[:-1], self.initial)

    def _exterior(self, t, x):
        return np.full(_batch_shape(t, x), self.exterior)

    def _source(self, t, x):
        return np.full(_batch_shape(t, x), self.source)


class ScaledProblem(Problem):
    """The data (and exact solution) of another problem multiplied by a constant."""

    def __init__(self, base: Problem, factor: float):
        super().__init__(base.orders, base.domain, base.horizon)
        self.base = base
        self.factor = float(factor)
        self.name = f"{base.name}*{self.factor!r}"

    @property
    def has_exact(self) -> bool:
        return self.base.has_exact

    def _initial(self, x):
        return self.factor * np.asarray(self.base.u0(x))

    def _exterior(self, t, x):
        return self.factor * np.asarray(self.base.g(t, x))

    def _source(self, t, x):
        return self.factor * np.asarray(self.base.f(t, x))

    def _exact(self, t, x):
        return self.factor * np.asarray(self.base.exact(t, x))


def example1(alpha: float, beta: float, dim: int, T: float = 1.0) -> Problem:
    return Example1(alpha, beta, dim, T)


def example2(alpha: float, beta: float, T: float = 1.0) -> Problem:
    return Example2(alpha, beta, T)


def example3(alpha: float, beta: float, T: float = 1.0) -> Problem:
    return Example3(alpha, beta, T)


def example4(alpha: float, beta: float, T: float = 0.5) -> Problem:
    return Example4(alpha, beta, T)


PROBLEMS = ("example1", "example2", "example3", "example4")

_FIXED_DOMAINS = {"example1": "ball", "example2": "ball", "example3": "l_shape"}


def problem_from_spec(
    name: str,
    alpha: float,
    beta: float,
    dim: int = 2,
    horizon: float = 1.0,
    domain: Optional[Dict] = None,
    params: Optional[Dict] = None,
) -> Problem:
    """
    Build a named problem from config values.

    Args:
        name: example1 | example2 | example3 | example4
        alpha, beta: Fractional orders
        dim: Spatial dimension (only example1 accepts dim != 2)
        horizon: Final time T
        domain: Optional tagged domain record (example4 only may change it)
        params: Extra problem parameters (example3 time_power, example4 field_seed)

    Returns:
        Problem instance
    """
    params = dict(params or {})
    if name not in PROBLEMS:
        raise ConfigurationError(f"unknown problem {name!r}, expected one of {', '.join(PROBLEMS)}", field="problem.name")
    if name != "example1" and dim != 2:
        raise ConfigurationError(f"{name} is defined in dimension 2 only, got n={dim}", field="problem.dim")
    if domain is not None and name in _FIXED_DOMAINS and domain.get("kind") != _FIXED_DOMAINS[name]:
        raise ConfigurationError(
            f"{name} is defined on a {_FIXED_DOMAINS[name]} domain, got {domain.get('kind')!r}",
            field="domain.kind",
        )

    try:
        if name == "example1":
            return Example1(alpha, beta, dim, horizon)
        if name == "example2":
            return Example2(alpha, beta, horizon)
        if name == "example3":
            return Example3(alpha, beta, horizon, **params)
        return Example4(
            alpha,
            beta,
            horizon,
            domain=domain_from_spec(domain) if domain is not None else None,
            **params,
        )
    except TypeError as e:
        raise ConfigurationError(f"invalid parameters for {name}: {e}", field="problem.params")
