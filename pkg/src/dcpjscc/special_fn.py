"""Scalar special functions: normal tail, Owen's T, skew-normal and bivariate normal.

Conventions follow the rest of the package: ``phi`` is the standard normal
density and ``Q`` its upper tail, ``Q(x) = P(N(0,1) > x)``. ``Q`` is always
evaluated through the complementary error function so that deep tails keep
their relative accuracy.

``std_normal_pdf``, ``std_normal_tail``, ``skew_normal_pdf`` and ``g_aux`` are
numpy ufunc-style and accept arrays. ``owen_t``, ``skew_normal_cdf`` and
``bvn_cdf`` are quadrature based; they accept arrays too but loop in Python.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from ._quadrature import integrate

__all__ = [
    "Correlation",
    "SkewShape",
    "std_normal_pdf",
    "std_normal_tail",
    "log_std_normal_tail",
    "mills_ratio",
    "owen_t",
    "skew_normal_pdf",
    "skew_normal_cdf",
    "bvn_cdf",
    "g_aux",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_INV_2PI = 1.0 / (2.0 * math.pi)
# |s| beyond this contributes < Q(9.5) ~ 1e-21 to any normal-weighted integral
_NORMAL_SPAN = 9.5


@dataclass(frozen=True)
class Correlation:
    """Correlation coefficient restricted to the open interval (-1, 1)."""

    rho: float

    def __post_init__(self):
        if not math.isfinite(self.rho) or abs(self.rho) >= 1.0:
            raise ValueError(f"correlation must lie in (-1, 1), got {self.rho!r}")

    def __float__(self) -> float:
        return float(self.rho)


@dataclass(frozen=True)
class SkewShape:
    """Shape parameter of the skew-normal law; any finite real."""

    lam: float

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise ValueError(f"skew shape must be finite, got {self.lam!r}")

    def __float__(self) -> float:
        return float(self.lam)


def _elementwise(func):
    """Let a scalar function accept arrays by looping over elements."""

    @functools.wraps(func)
    def wrapper(*args):
        if all(np.ndim(a) == 0 for a in args):
            return func(*(float(a) for a in args))
        arrays = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in args))
        out = np.empty(arrays[0].shape)
        for idx in np.ndindex(out.shape):
            out[idx] = func(*(float(a[idx]) for a in arrays))
        return out

    return wrapper


def std_normal_pdf(xi):
    """Standard normal density ``exp(-xi^2/2) / sqrt(2 pi)``."""
    xi = np.asarray(xi, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * xi * xi)
    return out[()] if out.ndim == 0 else out


def std_normal_tail(xi):
    """Upper tail ``Q(xi) = P(N(0,1) > xi)`` with full relative accuracy for xi > 0."""
    out = 0.5 * special.erfc(np.asarray(xi, dtype=float) / math.sqrt(2.0))
    return out[()] if np.ndim(out) == 0 else out


def log_std_normal_tail(xi):
    """``log Q(xi)``, finite for every finite xi."""
    out = special.log_ndtr(-np.asarray(xi, dtype=float))
    return out[()] if np.ndim(out) == 0 else out


def mills_ratio(xi):
    """``Q(xi) / phi(xi)``, computed without forming either factor."""
    out = 0.5 * _SQRT_2PI * special.erfcx(np.asarray(xi, dtype=float) / math.sqrt(2.0))
    return out[()] if np.ndim(out) == 0 else out


def _owen_t_base(h: float, a: float) -> float:
    # 0 <= a <= 1, h >= 0: integrate the defining integrand directly
    if h == 0.0:
        return math.atan(a) * _INV_2PI
    scale = math.exp(-0.5 * h * h)
    if scale == 0.0:
        return 0.0
    h2 = h * h

    def integrand(s):
        return np.exp(-0.5 * h2 * s * s) / (1.0 + s * s)

    # the Gaussian factor has width ~1/h; give the partition a hint
    bp = (6.0 / h,) if 6.0 / h < a else ()
    val, _ = integrate(integrand, 0.0, a, abs_tol=1e-16, rel_tol=1e-15, breakpoints=bp)
    return scale * val * _INV_2PI


@_elementwise
def owen_t(h: float, a: float) -> float:
    """Owen's T function ``(1/2pi) int_0^a exp(-h^2 (1+s^2)/2) / (1+s^2) ds``.

    For ``|a| <= 1`` the integrand is integrated directly by adaptive
    Gauss-Kronrod; for ``|a| > 1`` the reflection

        T(h, a) = Q(h)/2 + Q(ah)/2 - Q(h) Q(ah) - T(ah, 1/a),   h >= 0,

    maps the problem back onto the unit interval. Absolute error is below
    1e-13 on ``|h|, |a| <= 5``.
    """
    if not (math.isfinite(h) and math.isfinite(a)):
        raise ValueError("owen_t arguments must be finite")
    if a == 0.0:
        return 0.0
    if a < 0.0:
        return -owen_t(h, -a)
    h = abs(h)
    if a <= 1.0:
        return _owen_t_base(h, a)
    ah = a * h
    qh = float(std_normal_tail(h))
    qah = float(std_normal_tail(ah))
    return 0.5 * qh + 0.5 * qah - qh * qah - _owen_t_base(ah, 1.0 / a)


def skew_normal_pdf(xi, shape):
    """Skew-normal density ``2 phi(xi) Q(-shape * xi)``."""
    shape = float(shape) if isinstance(shape, SkewShape) else shape
    xi = np.asarray(xi, dtype=float)
    return 2.0 * std_normal_pdf(xi) * std_normal_tail(-np.asarray(shape) * xi)


@_elementwise
def _skew_normal_cdf(xi: float, lam: float) -> float:
    if xi < 0.0 < lam:
        # Q(-xi) and 2T cancel in the lower tail; integrate 2 phi(s) Phi(lam s) instead
        def log_f(s):
            return -0.5 * s * s + special.log_ndtr(lam * s)

        peak = float(log_f(np.array([xi]))[0])
        if peak < -745.0:
            return 0.0
        # log_f is concave, so its slope at xi bounds the decay to the left
        slope = -xi + lam * math.exp(-0.5 * (lam * xi) ** 2 - 0.5 * math.log(2 * math.pi) - special.log_ndtr(lam * xi))
        width = min(10.0, 60.0 / slope)
        val, _ = integrate(
            lambda s: np.exp(log_f(s) - peak), xi - width, xi, abs_tol=1e-300, rel_tol=1e-13
        )
        return 2.0 * _INV_SQRT_2PI * val * math.exp(peak)
    return float(std_normal_tail(-xi)) - 2.0 * owen_t(xi, lam)


def skew_normal_cdf(xi, shape):
    """Skew-normal distribution function ``Q(-xi) - 2 T(xi, shape)``."""
    shape = float(shape) if isinstance(shape, SkewShape) else shape
    if np.ndim(shape) == 0:
        SkewShape(float(shape))
    out = _skew_normal_cdf(xi, shape)
    # clip rounding excursions outside [0, 1]
    return np.clip(out, 0.0, 1.0)[()] if np.ndim(out) == 0 else np.clip(out, 0.0, 1.0)


@_elementwise
def _bvn_cdf(xi: float, omega: float, rho: float) -> float:
    if xi == -math.inf or omega == -math.inf:
        return 0.0
    r = math.sqrt((1.0 - rho) * (1.0 + rho))
    upper = min(xi, _NORMAL_SPAN)
    lower = -_NORMAL_SPAN if upper > -_NORMAL_SPAN else upper - 10.0

    def integrand(s):
        return std_normal_tail((rho * s - omega) / r) * std_normal_pdf(s)

    bp: tuple[float, ...] = ()
    if rho != 0.0 and math.isfinite(omega):
        # the tail factor switches from ~0 to ~1 around s = omega / rho
        s0 = omega / rho
        bp = (s0 - 4.0 * r / abs(rho), s0, s0 + 4.0 * r / abs(rho))
    val, _ = integrate(integrand, lower, upper, abs_tol=1e-15, rel_tol=1e-14, breakpoints=bp)
    return min(max(val, 0.0), 1.0)


def bvn_cdf(xi, omega, rho):
    """Bivariate standard normal CDF ``P(X <= xi, Y <= omega)`` with correlation ``rho``.

    Evaluated as the single integral ``int_{-inf}^{xi} Q[(rho s - omega)/sqrt(1-rho^2)] phi(s) ds``.
    ``rho`` may be a float or a :class:`Correlation`; ``|rho| >= 1`` raises.
    """
    if isinstance(rho, Correlation):
        rho = rho.rho
    for r in np.atleast_1d(np.asarray(rho, dtype=float)).ravel():
        Correlation(float(r))
    return _bvn_cdf(xi, omega, rho)


def g_aux(xi):
    """``G(xi) = xi Q(-xi) + phi(xi)``, an antiderivative of the normal CDF."""
    xi = np.asarray(xi, dtype=float)
    out = xi * std_normal_tail(-xi) + std_normal_pdf(xi)
    return out[()] if np.ndim(out) == 0 else out
