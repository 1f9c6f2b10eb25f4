"""Piecewise-linear JSCC for a Gaussian source with balanced binary classes.

All quantities are normalized: ``x~ = x / sigma_x``, ``w~ = w / sigma_z`` and
the encoder ``g~(x~) = alpha x~ + beta sign(x~)`` with dimensionless gains
``alpha = A sigma_x / sigma_z`` and ``beta = B / sigma_z``. The class is
``C = 1{x > 0}``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import PeAboveRange, PeBelowRange
from .special_fn import (
    log_std_normal_tail,
    skew_normal_cdf,
    std_normal_tail,
)

__all__ = [
    "SourceChannelConfig",
    "PiecewiseLinearEncoder",
    "DesignTarget",
    "DesignSolution",
    "encode",
    "decode_mmse",
    "decode_denormalized",
    "decode_erf_surrogate",
    "classify",
    "risk_closed_form",
    "power",
    "mmse_linear",
    "mmse_tanh_bound",
    "pareto_range",
    "beta_from_alpha",
    "design_equation_lhs",
    "design",
]

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
# endpoints of the Pareto range are accepted within this band
PARETO_GUARD = 1e-8


@dataclass(frozen=True)
class SourceChannelConfig:
    """Physical source/channel/power parameters.

    Attributes:
        sigma_x: source standard deviation.
        sigma_z: channel noise standard deviation.
        power: average transmit power budget ``P``.
    """

    sigma_x: float
    sigma_z: float
    power: float

    def __post_init__(self):
        for name in ("sigma_x", "sigma_z", "power"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")

    def snr(self) -> float:
        return self.power / self.sigma_z**2


@dataclass(frozen=True)
class PiecewiseLinearEncoder:
    """Normalized gains of ``g~(x~) = alpha x~ + beta sign(x~)``."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")

    def varsigma(self) -> float:
        return math.sqrt(1.0 + self.alpha**2)

    @classmethod
    def from_physical(cls, A: float, B: float, cfg: SourceChannelConfig) -> PiecewiseLinearEncoder:
        return cls(A * cfg.sigma_x / cfg.sigma_z, B / cfg.sigma_z)

    def to_physical(self, cfg: SourceChannelConfig) -> tuple[float, float]:
        """Return ``(A, B)`` in signal/channel units."""
        return self.alpha * cfg.sigma_z / cfg.sigma_x, self.beta * cfg.sigma_z


@dataclass(frozen=True)
class DesignTarget:
    """Classification error budget ``P_e`` in (0, 0.5)."""

    pe: float

    def __post_init__(self):
        if not (0.0 < self.pe < 0.5):
            raise ValueError(f"pe must lie in (0, 0.5), got {self.pe!r}")


@dataclass(frozen=True)
class DesignSolution:
    """Output of :func:`design`.

    ``corner`` is ``None`` for an interior Pareto point, ``"reconstruction"``
    when the linear encoder is returned (target at or above the upper end of
    the range) and ``"classification"`` at the lower end.
    """

    alpha_star: float
    beta_star: float
    achieved_risk: float
    solver_residual: float
    corner: str | None = None

    @property
    def encoder(self) -> PiecewiseLinearEncoder:
        return PiecewiseLinearEncoder(self.alpha_star, self.beta_star)

    @property
    def degenerate(self) -> bool:
        return self.corner is not None


def encode(x_tilde, enc: PiecewiseLinearEncoder):
    """``alpha x + beta sign(x)`` with ``sign(0) = +1``."""
    x = np.asarray(x_tilde, dtype=float)
    out = enc.alpha * x + enc.beta * np.where(x >= 0.0, 1.0, -1.0)
    return out[()] if out.ndim == 0 else out


def _log_skew_normal_pdf(xi, lam):
    # log(2 phi(xi) Q(-lam xi))
    return math.log(2.0) - 0.5 * math.log(2.0 * math.pi) - 0.5 * xi * xi + log_std_normal_tail(-lam * xi)


def decode_mmse(w_tilde, enc: PiecewiseLinearEncoder):
    """Closed-form conditional mean ``E[x~ | w~]`` for the piecewise-linear encoder.

    With ``S+ = phi_SN((w-beta)/s; alpha)``, ``S- = phi_SN((w+beta)/s; -alpha)``
    and ``s = sqrt(1 + alpha^2)``::

        h(w) = [ (2/(pi s)) exp(-(w^2+beta^2)/2) sinh(w beta)
                 + (alpha/s^2) ((w+beta) S- + (w-beta) S+) ] / (S- + S+)

    Every term is carried in the log domain relative to ``max(log S+, log S-)``,
    and the sinh term is formed as ``phi(w-beta) - phi(w+beta)``, so the
    expression stays finite for any finite ``w``.
    """
    w = np.asarray(w_tilde, dtype=float)
    a, b = enc.alpha, enc.beta
    s = math.sqrt(1.0 + a * a)
    log_sp = _log_skew_normal_pdf((w - b) / s, a)
    log_sm = _log_skew_normal_pdf((w + b) / s, -a)
    m = np.maximum(log_sp, log_sm)
    sp = np.exp(log_sp - m)
    sm = np.exp(log_sm - m)
    den = sp + sm
    # (2/(pi s)) e^{-(w^2+b^2)/2} sinh(wb) = sqrt(2pi)/(pi s) [phi(w-b) - phi(w+b)]
    log_norm = -0.5 * math.log(2.0 * math.pi)
    diff = np.exp(log_norm - 0.5 * (w - b) ** 2 - m) - np.exp(log_norm - 0.5 * (w + b) ** 2 - m)
    sinh_term = math.sqrt(2.0 * math.pi) / (math.pi * s) * diff
    lin_term = a / (s * s) * ((w + b) * sm + (w - b) * sp)
    out = (sinh_term + lin_term) / den
    return out[()] if out.ndim == 0 else out


def decode_denormalized(w, enc: PiecewiseLinearEncoder, cfg: SourceChannelConfig):
    """Decoder in physical units: ``sigma_x * h~(w / sigma_z)``."""
    return cfg.sigma_x * decode_mmse(np.asarray(w, dtype=float) / cfg.sigma_z, enc)


def decode_erf_surrogate(w_tilde, beta: float):
    """Sign-encoder decoder with ``tanh(u)`` replaced by ``erf(sqrt(pi) u / 2)``."""
    w = np.asarray(w_tilde, dtype=float)
    out = SQRT_2_OVER_PI * special.erf(0.5 * math.sqrt(math.pi) * beta * w)
    return out[()] if out.ndim == 0 else out


def classify(w_tilde):
    """Bayes classifier ``1{w~ > 0}``; ``classify(0) == 0``."""
    out = (np.asarray(w_tilde) > 0).astype(int)
    return int(out) if out.ndim == 0 else out


def risk_closed_form(enc: PiecewiseLinearEncoder) -> float:
    """Misclassification probability ``Phi_SN(-beta / sqrt(1+alpha^2); alpha)``."""
    return float(skew_normal_cdf(-enc.beta / enc.varsigma(), enc.alpha))


def power(enc: PiecewiseLinearEncoder) -> float:
    """Normalized average power ``alpha^2 + 2 alpha beta sqrt(2/pi) + beta^2``."""
    a, b = enc.alpha, enc.beta
    return a * a + 2.0 * a * b * SQRT_2_OVER_PI + b * b


def mmse_linear(alpha: float) -> float:
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return 1.0 / (1.0 + alpha * alpha)


def mmse_tanh_bound(beta: float) -> float:
    """Upper bound on the MMSE of the sign encoder (``alpha = 0``).

    Exact MSE of the erf-surrogate decoder::

        (pi-2)/pi + (8/pi) Phi_SN(-beta^2 sqrt(pi) / sqrt(2 + pi beta^2); 1/sqrt(1 + pi beta^2))
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    xi = -beta * beta * math.sqrt(math.pi) / math.sqrt(2.0 + math.pi * beta * beta)
    lam = 1.0 / math.sqrt(1.0 + math.pi * beta * beta)
    return (math.pi - 2.0) / math.pi + 8.0 / math.pi * float(skew_normal_cdf(xi, lam))


def pareto_range(snr: float) -> tuple[float, float]:
    """``(Q(sqrt(snr)), arccot(sqrt(snr)) / pi)``: the non-trivial range of ``P_e``."""
    if not snr > 0:
        raise ValueError("snr must be > 0")
    r = math.sqrt(snr)
    return float(std_normal_tail(r)), math.atan2(1.0, r) / math.pi


def beta_from_alpha(alpha: float, snr: float) -> float:
    """Offset gain that makes the power constraint active for a given ``alpha``."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if alpha * alpha > snr * (1.0 + 1e-12):
        raise ValueError(f"alpha^2 = {alpha * alpha!r} exceeds snr = {snr!r}")
    radicand = max(snr - alpha * alpha * (1.0 - 2.0 / math.pi), 0.0)
    return max(-alpha * SQRT_2_OVER_PI + math.sqrt(radicand), 0.0)


def design_equation_lhs(alpha: float, snr: float) -> float:
    """Risk along the active power constraint, as a function of ``alpha``.

    ``Phi_SN((alpha sqrt2 - sqrt(pi snr - alpha^2 (pi-2))) / sqrt(pi (1+alpha^2)); alpha)``,
    whose argument equals ``-beta(alpha) / sqrt(1 + alpha^2)``.
    """
    radicand = max(math.pi * snr - alpha * alpha * (math.pi - 2.0), 0.0)
    u = (alpha * math.sqrt(2.0) - math.sqrt(radicand)) / math.sqrt(math.pi * (1.0 + alpha * alpha))
    return float(skew_normal_cdf(u, alpha))


def design(cfg: SourceChannelConfig, target: DesignTarget) -> DesignSolution:
    """Solve the distortion-classification-power problem for the piecewise-linear family.

    The risk along the active power constraint is strictly increasing in
    ``alpha``, so the root of ``design_equation_lhs(alpha) = pe`` on
    ``[0, sqrt(snr)]`` is unique and bracketed.

    Raises:
        PeBelowRange: ``pe < Q(sqrt(snr))``.

    Warns:
        PeAboveRange: ``pe > arccot(sqrt(snr))/pi``; the linear encoder
            ``(sqrt(snr), 0)`` is returned with ``corner="reconstruction"``.
    """
    snr = cfg.snr()
    pe = target.pe
    pe_min, pe_max = pareto_range(snr)
    alpha_max = math.sqrt(snr)

    if pe < pe_min - PARETO_GUARD:
        raise PeBelowRange(f"pe={pe!r} is below the minimum achievable Q(sqrt(SNR))={pe_min!r}")
    if pe >= pe_max - PARETO_GUARD:
        if pe > pe_max + PARETO_GUARD:
            warnings.warn(
                f"pe={pe!r} exceeds arccot(sqrt(SNR))/pi={pe_max!r}; returning the linear encoder",
                PeAboveRange,
                stacklevel=2,
            )
        return DesignSolution(alpha_max, 0.0, pe_max, pe_max - min(pe, pe_max), "reconstruction")
    if pe <= pe_min + PARETO_GUARD:
        return DesignSolution(0.0, alpha_max, pe_min, pe_min - pe, "classification")

    def f(alpha):
        return design_equation_lhs(alpha, snr) - pe

    alpha_star = optimize.brentq(f, 0.0, alpha_max, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    beta_star = beta_from_alpha(alpha_star, snr)
    achieved = risk_closed_form(PiecewiseLinearEncoder(alpha_star, beta_star))
    return DesignSolution(alpha_star, beta_star, achieved, achieved - pe)
