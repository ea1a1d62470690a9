"""
Real special functions kernel.

Gamma, beta, the regularized incomplete beta function and its inverse, the
Gauss hypergeometric function on the negative real axis and the one-parameter
Mittag-Leffler function. Everything is a pure function of its arguments and
works elementwise on numpy arrays; scalar input gives a Python float back.

Iterative kernels stop each element on its own criterion, so the value
computed for one element never depends on the rest of the batch.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from scipy import integrate

from logger_config import setup_logger
from .errors import DomainError, NumericError

logger = setup_logger("specfun")

ArrayLike = Union[float, np.ndarray]

# Lanczos approximation, g = 7, n = 9
LANCZOS_G = 7.0
LANCZOS_COEFFICIENTS = np.array(
    [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ]
)
SQRT_TWO_PI = math.sqrt(2.0 * math.pi)
LOG_SQRT_TWO_PI = 0.5 * math.log(2.0 * math.pi)

# Largest argument whose gamma value is a finite double
GAMMA_OVERFLOW = 171.62

EPS = 1e-16
CF_EPS = 1e-15
MAX_CF_ITERATIONS = 1000
MAX_NEWTON_ITERATIONS = 300
MAX_SERIES_TERMS = 20000
INVERSE_TOLERANCE = 1e-13

# Mittag-Leffler series is trusted up to this |z| unless cancellation is detected
ML_SERIES_RADIUS = 5.0
ML_CANCELLATION_LIMIT = 1e6


@dataclass(frozen=True)
class SpecFunResult:
    """Outcome of an iterative evaluation."""

    value: ArrayLike
    converged: bool
    terms_used: int

    def unwrap(self, name: str, **diagnostics) -> ArrayLike:
        """Return the value, raising NumericError if the iteration did not converge."""
        if not self.converged:
            raise NumericError(
                f"{name} did not converge",
                {"terms_used": self.terms_used, **diagnostics},
            )
        return self.value


def _as_array(x: ArrayLike):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _as_output(arr: np.ndarray, scalar: bool) -> ArrayLike:
    if scalar:
        return float(arr)
    return arr


def _lanczos_sum(x: np.ndarray) -> np.ndarray:
    # x is already shifted by -1
    total = np.full_like(x, LANCZOS_COEFFICIENTS[0])
    for i in range(1, len(LANCZOS_COEFFICIENTS)):
        total = total + LANCZOS_COEFFICIENTS[i] / (x + i)
    return total


def _gamma_positive(x: np.ndarray) -> np.ndarray:
    """Gamma for x > 0 via Lanczos, reflection below 1/2."""
    out = np.empty_like(x)
    small = x < 0.5
    if small.any():
        xs = x[small]
        out[small] = math.pi / (np.sin(math.pi * xs) * _gamma_positive(1.0 - xs))
    large = ~small
    if large.any():
        xl = x[large] - 1.0
        t = xl + LANCZOS_G + 0.5
        # split the power so t**(x+1/2) does not overflow before exp(-t) applies
        half_power = t ** ((xl + 0.5) / 2.0)
        out[large] = SQRT_TWO_PI * half_power * (half_power * np.exp(-t)) * _lanczos_sum(xl)
    return out


def _log_gamma_positive(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    small = x < 0.5
    if small.any():
        xs = x[small]
        out[small] = np.log(math.pi / np.sin(math.pi * xs)) - _log_gamma_positive(1.0 - xs)
    large = ~small
    if large.any():
        xl = x[large] - 1.0
        t = xl + LANCZOS_G + 0.5
        out[large] = LOG_SQRT_TWO_PI + (xl + 0.5) * np.log(t) - t + np.log(_lanczos_sum(xl))
    return out


def gamma(x: ArrayLike) -> ArrayLike:
    """
    Euler gamma function for positive arguments.

    Args:
        x: Argument(s), must be > 0

    Returns:
        Gamma(x)

    Raises:
        DomainError: if any x <= 0
        NumericError: if Gamma(x) overflows a double (x > 171.62)
    """
    arr, scalar = _as_array(x)
    if np.any(~(arr > 0)):
        raise DomainError(f"gamma requires x > 0, got {x}")
    if np.any(arr > GAMMA_OVERFLOW):
        raise NumericError("gamma overflows double precision", {"x_max": float(arr.max())})
    return _as_output(_gamma_positive(np.atleast_1d(arr)).reshape(arr.shape), scalar)


def log_gamma(x: ArrayLike) -> ArrayLike:
    """Natural log of the gamma function for x > 0."""
    arr, scalar = _as_array(x)
    if np.any(~(arr > 0)):
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    flat = np.atleast_1d(arr)
    out = np.empty_like(flat)
    # direct log of the Lanczos value keeps relative accuracy where log(Gamma) is near 0
    moderate = flat <= 100.0
    if moderate.any():
        out[moderate] = np.log(_gamma_positive(flat[moderate]))
    if (~moderate).any():
        out[~moderate] = _log_gamma_positive(flat[~moderate])
    return _as_output(out.reshape(arr.shape), scalar)


def _gamma_signed(x: float) -> float:
    """Gamma at any non-integer real, by reflection for x < 0."""
    if x > 0:
        return float(_gamma_positive(np.array([x]))[0])
    if x == math.floor(x):
        raise DomainError(f"gamma has a pole at {x}")
    return math.pi / (math.sin(math.pi * x) * float(_gamma_positive(np.array([1.0 - x]))[0]))


def _reciprocal_gamma(x: float) -> float:
    if x <= 0 and x == math.floor(x):
        return 0.0
    return 1.0 / _gamma_signed(x)


def log_beta(a: ArrayLike, b: ArrayLike) -> ArrayLike:
    """
    Log of the complete beta function B(a, b).

    Args:
        a: First parameter, > 0
        b: Second parameter, > 0

    Returns:
        log Gamma(a) + log Gamma(b) - log Gamma(a + b)
    """
    a_arr, a_scalar = _as_array(a)
    b_arr, b_scalar = _as_array(b)
    if np.any(~(a_arr > 0)) or np.any(~(b_arr > 0)):
        raise DomainError(f"log_beta requires a, b > 0, got a={a}, b={b}")
    value = log_gamma(a_arr) + log_gamma(b_arr) - log_gamma(a_arr + b_arr)
    return _as_output(np.asarray(value), a_scalar and b_scalar)


def _beta_continued_fraction(x: np.ndarray, a: float, b: float) -> SpecFunResult:
    """Modified Lentz evaluation of the incomplete beta continued fraction."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0

    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < tiny, tiny, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)

    for m in range(1, MAX_CF_ITERATIONS + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        h_next = h * d * c

        aa = -(a + m) * (qab + m) * x / ((qap + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = d * c
        h_next = h_next * delta

        h = np.where(active, h_next, h)
        active &= np.abs(delta - 1.0) >= CF_EPS
        if not active.any():
            return SpecFunResult(h, True, m)

    return SpecFunResult(h, False, MAX_CF_ITERATIONS)


def _check_beta_parameters(a: float, b: float, name: str):
    if not (a > 0 and b > 0):
        raise DomainError(f"{name} requires a, b > 0, got a={a}, b={b}")


def reg_inc_beta(x: ArrayLike, a: float, b: float) -> ArrayLike:
    """
    Regularized incomplete beta function I_x(a, b) = B(x; a, b) / B(a, b).

    Continued fraction with the x <-> 1 - x symmetry switch at
    x = (a + 1) / (a + b + 2).

    Args:
        x: Argument(s) in [0, 1]
        a: First shape parameter, > 0
        b: Second shape parameter, > 0

    Returns:
        I_x(a, b)
    """
    _check_beta_parameters(a, b, "reg_inc_beta")
    arr, scalar = _as_array(x)
    if np.any(~((arr >= 0) & (arr <= 1))):
        raise DomainError(f"reg_inc_beta requires 0 <= x <= 1, got {x}")

    flat = np.atleast_1d(arr).astype(float)
    out = np.empty_like(flat)
    lb = log_beta(a, b)
    with np.errstate(divide="ignore"):
        front = np.exp(a * np.log(flat) + b * np.log1p(-flat) - lb)

    lower = flat < (a + 1.0) / (a + b + 2.0)
    if lower.any():
        cf = _beta_continued_fraction(flat[lower], a, b).unwrap(
            "reg_inc_beta continued fraction", a=a, b=b
        )
        out[lower] = front[lower] * cf / a
    upper = ~lower
    if upper.any():
        cf = _beta_continued_fraction(1.0 - flat[upper], b, a).unwrap(
            "reg_inc_beta continued fraction", a=a, b=b
        )
        out[upper] = 1.0 - front[upper] * cf / b

    out = np.clip(out, 0.0, 1.0)
    out[flat == 0.0] = 0.0
    out[flat == 1.0] = 1.0
    return _as_output(out.reshape(arr.shape), scalar)


def _inverse_beta_start(p: np.ndarray, a: float, b: float) -> np.ndarray:
    """Starting point from the two power-law tails of I_x(a, b)."""
    lna = math.log(a / (a + b))
    lnb = math.log(b / (a + b))
    t = math.exp(a * lna) / a
    u = math.exp(b * lnb) / b
    w = t + u
    with np.errstate(divide="ignore", invalid="ignore"):
        low = (a * w * p) ** (1.0 / a)
        high = 1.0 - (b * w * (1.0 - p)) ** (1.0 / b)
    x = np.where(p < t / w, low, high)
    return np.clip(x, 1e-300, 1.0 - 1e-16)


def inv_reg_inc_beta(p: ArrayLike, a: float, b: float) -> ArrayLike:
    """
    Inverse of the regularized incomplete beta function in its first argument.

    Newton iteration safeguarded by a shrinking bisection bracket.

    Args:
        p: Target probability(ies) in [0, 1]
        a: First shape parameter, > 0
        b: Second shape parameter, > 0

    Returns:
        x with I_x(a, b) = p

    Raises:
        NumericError: if the safeguarded iteration does not converge
    """
    _check_beta_parameters(a, b, "inv_reg_inc_beta")
    arr, scalar = _as_array(p)
    if np.any(~((arr >= 0) & (arr <= 1))):
        raise DomainError(f"inv_reg_inc_beta requires 0 <= p <= 1, got {p}")

    target = np.atleast_1d(arr).astype(float)
    out = np.where(target >= 1.0, 1.0, 0.0)
    interior = (target > 0.0) & (target < 1.0)
    if not interior.any():
        return _as_output(out.reshape(arr.shape), scalar)

    q = target[interior]
    x = _inverse_beta_start(q, a, b)
    lo = np.zeros_like(q)
    hi = np.ones_like(q)
    done = np.zeros(q.shape, dtype=bool)
    lb = log_beta(a, b)

    for iteration in range(1, MAX_NEWTON_ITERATIONS + 1):
        idx = np.flatnonzero(~done)
        xi = x[idx]
        err = reg_inc_beta(xi, a, b) - q[idx]

        below = err < 0
        lo[idx] = np.where(below, xi, lo[idx])
        hi[idx] = np.where(below, hi[idx], xi)

        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            deriv = np.exp((a - 1.0) * np.log(xi) + (b - 1.0) * np.log1p(-xi) - lb)
            proposal = xi - err / deriv

        l_i, h_i = lo[idx], hi[idx]
        newton_ok = (
            np.isfinite(proposal)
            & np.isfinite(deriv)
            & (deriv > 0)
            & (proposal > l_i)
            & (proposal < h_i)
        )
        with np.errstate(divide="ignore", invalid="ignore"):
            geometric = (l_i > 0) & (h_i / np.where(l_i > 0, l_i, 1.0) > 16.0)
            midpoint = np.where(geometric, np.sqrt(l_i * h_i), 0.5 * (l_i + h_i))
        step = np.where(newton_ok, proposal, midpoint)

        converged = (
            (np.abs(err) <= INVERSE_TOLERANCE)
            | (newton_ok & (np.abs(proposal - xi) <= 4.0 * EPS * np.maximum(xi, 1e-300)))
            | (h_i - l_i <= 4.0 * EPS * np.maximum(h_i, 1e-300))
        )
        x[idx] = np.where(converged, xi, step)
        done[idx] = converged
        if done.all():
            logger.debug(f"inv_reg_inc_beta converged in {iteration} iterations")
            break
    else:
        raise NumericError(
            "inv_reg_inc_beta bracketing did not converge",
            {
                "a": a,
                "b": b,
                "iterations": MAX_NEWTON_ITERATIONS,
                "unconverged": int((~done).sum()),
                "bracket_width": float(np.max(hi[~done] - lo[~done])),
            },
        )

    out[interior] = x
    return _as_output(out.reshape(arr.shape), scalar)


def _hypergeometric_series(a: float, b: float, c: float, w: np.ndarray) -> SpecFunResult:
    """Plain 2F1 power series in w, for 0 <= w < 1."""
    term = np.ones_like(w)
    total = np.ones_like(w)
    active = w != 0.0
    for k in range(MAX_SERIES_TERMS):
        if not active.any():
            return SpecFunResult(total, True, k)
        term = term * ((a + k) * (b + k) / ((c + k) * (k + 1.0))) * w
        total = np.where(active, total + term, total)
        active &= np.abs(term) > EPS * np.abs(total)
    return SpecFunResult(total, not active.any(), MAX_SERIES_TERMS)


def gauss_2f1(a: float, b: float, c: float, z: ArrayLike) -> ArrayLike:
    """
    Gauss hypergeometric function 2F1(a, b; c; z) on the negative real axis.

    For -1 <= z <= 0 the Pfaff transformation maps the argument to
    z / (z - 1) in [0, 1/2]. For z < -1 the 1/z connection formula is used
    (each inner series again Pfaff-transformed to 1 / (1 - z) in (0, 1/2)),
    unless b - a is an integer, where the Pfaff series is summed directly.

    Args:
        a, b, c: Parameters, c > 0
        z: Argument(s), z <= 0

    Returns:
        2F1(a, b; c; z)
    """
    if not c > 0:
        raise DomainError(f"gauss_2f1 requires c > 0, got c={c}")
    arr, scalar = _as_array(z)
    if np.any(~(arr <= 0)):
        raise DomainError(f"gauss_2f1 supports z <= 0 only, got {z}")

    flat = np.atleast_1d(arr).astype(float)
    out = np.ones_like(flat)
    diagnostics = {"a": a, "b": b, "c": c}

    integer_gap = float(b - a).is_integer()
    near = (flat >= -1.0) | integer_gap
    far = ~near

    if near.any():
        zn = flat[near]
        w = zn / (zn - 1.0)
        series = _hypergeometric_series(a, c - b, c, w).unwrap("gauss_2f1 series", **diagnostics)
        out[near] = (1.0 - zn) ** (-a) * series

    if far.any():
        zf = flat[far]
        w = 1.0 / (1.0 - zf)
        coef_a = _gamma_signed(c) * _gamma_signed(b - a) * _reciprocal_gamma(b) * _reciprocal_gamma(c - a)
        coef_b = _gamma_signed(c) * _gamma_signed(a - b) * _reciprocal_gamma(a) * _reciprocal_gamma(c - b)
        first = _hypergeometric_series(a, c - b, a - b + 1.0, w).unwrap(
            "gauss_2f1 connection series", **diagnostics
        )
        second = _hypergeometric_series(b, c - a, b - a + 1.0, w).unwrap(
            "gauss_2f1 connection series", **diagnostics
        )
        with np.errstate(over="ignore"):
            out[far] = (
                coef_a * (1.0 - zf) ** (-a) * first + coef_b * (1.0 - zf) ** (-b) * second
            )

    return _as_output(out.reshape(arr.shape), scalar)


def gauss_2f1_integral(a: float, b: float, c: float, z: float) -> float:
    """
    2F1(a, b; c; z) from the Euler integral, valid for c > b > 0 and z < 1.

    Gamma(c) / (Gamma(b) Gamma(c - b)) * int_0^1 t^(b-1) (1-t)^(c-b-1) (1 - z t)^(-a) dt,
    integrated with algebraic endpoint weights.
    """
    if not (c > b > 0):
        raise DomainError(f"gauss_2f1_integral requires c > b > 0, got b={b}, c={c}")
    if not z < 1:
        raise DomainError(f"gauss_2f1_integral requires z < 1, got z={z}")

    value, abserr = integrate.quad(
        lambda t: (1.0 - z * t) ** (-a),
        0.0,
        1.0,
        weight="alg",
        wvar=(b - 1.0, c - b - 1.0),
        epsabs=1e-14,
        epsrel=1e-12,
        limit=200,
    )
    result = SpecFunResult(
        value * math.exp(-float(log_beta(b, c - b))),
        abserr <= 1e-10 * max(abs(value), 1.0),
        0,
    )
    return result.unwrap("gauss_2f1_integral quadrature", a=a, b=b, c=c, z=z, abserr=abserr)


@lru_cache(maxsize=None)
def _mittag_leffler_coefficient(beta: float, k: int) -> float:
    return math.exp(-float(log_gamma(beta * k + 1.0)))


def _mittag_leffler_series(beta: float, z: np.ndarray) -> SpecFunResult:
    """Taylor series sum_k z^k / Gamma(beta k + 1) with term-ratio stopping."""
    total = np.ones_like(z)
    power = np.ones_like(z)
    largest = np.ones_like(z)
    active = z != 0.0
    for k in range(1, MAX_SERIES_TERMS):
        if not active.any():
            return SpecFunResult((total, largest), True, k)
        power = power * z
        term = power * _mittag_leffler_coefficient(beta, k)
        total = np.where(active, total + term, total)
        largest = np.where(active, np.maximum(largest, np.abs(term)), largest)
        active &= np.abs(term) >= EPS * np.abs(total)
    return SpecFunResult((total, largest), not active.any(), MAX_SERIES_TERMS)


def _mittag_leffler_integral(beta: float, x: float) -> float:
    """E_beta(-x) for 0 < beta < 1, x > 0, from its completely monotone spectral form."""
    cos_term = math.cos(beta * math.pi)
    value, abserr = integrate.quad(
        lambda s: math.exp(-((s * x) ** (1.0 / beta))) / (s * s + 2.0 * s * cos_term + 1.0),
        0.0,
        np.inf,
        epsabs=1e-14,
        epsrel=1e-12,
        limit=400,
    )
    result = SpecFunResult(
        value * math.sin(beta * math.pi) / (beta * math.pi),
        abserr <= 1e-10,
        0,
    )
    return result.unwrap("mittag_leffler integral", beta=beta, z=-x, abserr=abserr)


def mittag_leffler(beta: float, z: ArrayLike) -> ArrayLike:
    """
    One-parameter Mittag-Leffler function E_{beta,1}(z) for z <= 0.

    Args:
        beta: Order in (0, 1]
        z: Argument(s), z <= 0

    Returns:
        E_{beta,1}(z)
    """
    if not (0 < beta <= 1):
        raise DomainError(f"mittag_leffler requires 0 < beta <= 1, got {beta}")
    arr, scalar = _as_array(z)
    if np.any(~(arr <= 0)) or np.any(~np.isfinite(arr)):
        raise DomainError(f"mittag_leffler supports finite z <= 0 only, got {z}")

    flat = np.atleast_1d(arr).astype(float)
    if beta == 1.0:
        return _as_output(np.exp(flat).reshape(arr.shape), scalar)

    out = np.empty_like(flat)
    inside = np.abs(flat) <= ML_SERIES_RADIUS
    fallback = ~inside
    if inside.any():
        total, largest = _mittag_leffler_series(beta, flat[inside]).unwrap(
            "mittag_leffler series", beta=beta
        )
        out[inside] = total
        lossy = largest > ML_CANCELLATION_LIMIT * np.abs(total)
        fallback[np.flatnonzero(inside)[lossy]] = True
    for i in np.flatnonzero(fallback):
        out[i] = _mittag_leffler_integral(beta, -flat[i])

    return _as_output(out.reshape(arr.shape), scalar)
