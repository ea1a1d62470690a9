"""
Walk-on-spheres stepping for the symmetric alpha-stable process.

Each step replaces the random sojourn in a ball of radius r by its mean dt
and jumps to an exit point drawn from the ball's Poisson kernel.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from logger_config import setup_logger
from .errors import DomainError, NumericError
from .specfun import gauss_2f1_integral, inv_reg_inc_beta, log_gamma, reg_inc_beta
from .stable import RngStream

logger = setup_logger("wos")

# Smallest radial beta variate; keeps r / sqrt(x) finite.
MIN_RADIAL_VARIATE = np.finfo(float).tiny


def _check_orders(alpha: float, dim: int):
    if not (0 < alpha <= 2):
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
    if int(dim) != dim or dim < 2:
        raise DomainError(f"dim must be an integer >= 2, got {dim}")


def exit_time_constant(alpha: float, dim: int) -> float:
    """
    C_n^alpha = Gamma(n/2) / (2^alpha Gamma(1 + alpha/2) Gamma((n + alpha)/2)).

    The mean exit time of the process from a ball of radius r started at the
    center is r^alpha * C_n^alpha.
    """
    _check_orders(alpha, dim)
    return math.exp(
        float(log_gamma(dim / 2.0))
        - alpha * math.log(2.0)
        - float(log_gamma(1.0 + alpha / 2.0))
        - float(log_gamma((dim + alpha) / 2.0))
    )


def ball_radius(alpha: float, dim: int, dt: float) -> float:
    """Radius r with mean exit time exactly dt."""
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    return (dt / exit_time_constant(alpha, dim)) ** (1.0 / alpha)


def exit_time_second_moment(alpha: float, dim: int, radius: float) -> float:
    """
    E[tau_r^2] for the process started at the center of a ball of radius r.

    alpha r^alpha C^2 int_0^{r^2} nu^(alpha/2 - 1) 2F1(-alpha/2, n/2; (n+alpha)/2; nu/r^2) dnu,
    computed after the substitution nu = r^2 s. Bounded by 4 r^(2 alpha).
    """
    _check_orders(alpha, dim)
    if not radius > 0:
        raise DomainError(f"radius must be positive, got {radius}")

    a, b, c = -alpha / 2.0, dim / 2.0, (dim + alpha) / 2.0
    # z = 1 is the integrable endpoint; stay just inside the integral form's domain
    last = 1.0 - 1e-12
    value, abserr = integrate.quad(
        lambda s: gauss_2f1_integral(a, b, c, min(s, last)),
        0.0,
        1.0,
        weight="alg",
        wvar=(alpha / 2.0 - 1.0, 0.0),
        epsabs=1e-13,
        epsrel=1e-10,
        limit=100,
    )
    if abserr > 1e-8 * max(abs(value), 1.0):
        raise NumericError(
            "exit-time second moment quadrature did not converge",
            {"alpha": alpha, "dim": dim, "abserr": abserr},
        )
    constant = exit_time_constant(alpha, dim)
    return alpha * radius ** (2.0 * alpha) * constant * constant * value


@dataclass(frozen=True)
class WosParams:
    """Per-step walk-on-spheres parameters."""

    alpha: float
    dim: int
    dt: float
    radius: float

    @classmethod
    def from_step(cls, alpha: float, dim: int, dt: float) -> "WosParams":
        return cls(alpha=alpha, dim=int(dim), dt=dt, radius=ball_radius(alpha, dim, dt))


@dataclass(frozen=True)
class SpatialState:
    """Position of the walk after step_index steps."""

    position: np.ndarray
    step_index: int = 0


def sample_jump_radius(alpha: float, radius: float, omega):
    """
    Jump distance J = r / sqrt(I^{-1}_omega(alpha/2, 1 - alpha/2)) for a supplied uniform omega.

    Args:
        alpha: Stability index in (0, 2]
        radius: Ball radius r > 0
        omega: Uniform variate(s) in (0, 1)

    Returns:
        J >= radius, same shape as omega. For alpha = 2 the jump is radius.
    """
    if not (0 < alpha <= 2):
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
    arr = np.asarray(omega, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise DomainError(f"omega must lie in (0, 1), got {omega}")

    if alpha == 2.0:
        out = np.full(arr.shape, float(radius))
    else:
        x = np.asarray(inv_reg_inc_beta(arr, alpha / 2.0, 1.0 - alpha / 2.0), dtype=float)
        out = radius / np.sqrt(np.maximum(x, MIN_RADIAL_VARIATE))
        # I^{-1} rounds to 1 for omega next to 1; J never goes below r
        out = np.maximum(out, radius)
    return float(out) if arr.ndim == 0 else out


def draw_jump_radii(alpha: float, radius: float, rng: RngStream, size: int) -> np.ndarray:
    """Vectorized jump distances; the radial variate is Beta(alpha/2, 1 - alpha/2)."""
    if alpha == 2.0:
        return np.full(size, float(radius))
    x = rng.generator.beta(alpha / 2.0, 1.0 - alpha / 2.0, size)
    return radius / np.sqrt(np.maximum(x, MIN_RADIAL_VARIATE))


def radial_exit_cdf(alpha: float, rho):
    """CDF of J / r: F(rho) = 1 - I_{rho^-2}(alpha/2, 1 - alpha/2) for rho >= 1, else 0."""
    if not (0 < alpha <= 2):
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
    arr = np.asarray(rho, dtype=float)
    flat = np.atleast_1d(arr)
    out = np.zeros(flat.shape)
    beyond = flat >= 1.0
    if alpha == 2.0:
        out[beyond] = 1.0
    elif beyond.any():
        out[beyond] = 1.0 - np.asarray(
            reg_inc_beta(flat[beyond] ** -2.0, alpha / 2.0, 1.0 - alpha / 2.0)
        )
    out = out.reshape(arr.shape)
    return float(out) if arr.ndim == 0 else out


def draw_unit_directions(dim: int, rng: RngStream, size: int) -> np.ndarray:
    """`size` directions uniform on the unit sphere, shape (size, dim)."""
    z = rng.generator.standard_normal((size, dim))
    norms = np.sqrt(np.einsum("ij,ij->i", z, z))
    degenerate = np.flatnonzero(norms == 0.0)
    while degenerate.size:
        z[degenerate] = rng.generator.standard_normal((degenerate.size, dim))
        norms[degenerate] = np.sqrt(np.einsum("ij,ij->i", z[degenerate], z[degenerate]))
        degenerate = degenerate[norms[degenerate] == 0.0]
    return z / norms[:, None]


def sample_unit_direction(dim: int, rng: RngStream) -> np.ndarray:
    """A single direction uniform on S^{dim-1}."""
    if int(dim) != dim or dim < 2:
        raise DomainError(f"dim must be an integer >= 2, got {dim}")
    return draw_unit_directions(int(dim), rng, 1)[0]


def wos_step(state: SpatialState, params: WosParams, rng: RngStream) -> SpatialState:
    """Advance the walk by one ball: position + J * direction."""
    jump = draw_jump_radii(params.alpha, params.radius, rng, 1)[0]
    direction = draw_unit_directions(params.dim, rng, 1)[0]
    return SpatialState(
        position=np.asarray(state.position, dtype=float) + jump * direction,
        step_index=state.step_index + 1,
    )
