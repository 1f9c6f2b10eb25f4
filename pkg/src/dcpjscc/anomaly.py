"""Anomaly detection over the JSCC link: truncated-Gaussian normality model.

Normal samples are ``x~ ~ N(0,1)`` restricted to ``|x~| <= t`` (mass
``theta = 1 - 2Q(t)``); anomalies come from the Gaussian tails ``|x~| > t``
and, with prior weight ``epsilon``, from an unknown law on the tails (here
uniform on ``[-m,-t] U [t,m]``). The encoder is

    g~(x~) = alpha x~                       |x~| <= t
           = beta x~ + delta sign(x~)       |x~| >  t

and the detector flags ``|w~| > psi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .binary_class import DesignTarget, SourceChannelConfig
from .errors import NoRootInBracket, TargetUnreachable
from .special_fn import (
    bvn_cdf,
    g_aux,
    mills_ratio,
    std_normal_pdf,
    std_normal_tail,
)

__all__ = [
    "NormalityModel",
    "ContaminationModel",
    "ADEncoder",
    "DetectorConfig",
    "ADRiskBreakdown",
    "ADDesign",
    "encode_ad",
    "snr_split",
    "power_ad",
    "decode_ok",
    "anomaly_score",
    "detect",
    "fpr",
    "fnr_tails",
    "fnr_sign",
    "fnr_uniform",
    "risk_ad",
    "risk_derivative",
    "bayes_threshold",
    "alpha_max",
    "delta_from_alpha",
    "achievable_risk_range",
    "design_ad",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
# endpoint risks are matched within this band before root finding
_RISK_GUARD = 1e-10


@dataclass(frozen=True)
class NormalityModel:
    """Normal region ``|x~| <= t`` of a standard Gaussian."""

    t: float

    def __post_init__(self):
        if not (math.isfinite(self.t) and self.t > 0):
            raise ValueError(f"t must be finite and > 0, got {self.t!r}")

    @classmethod
    def from_physical(cls, T: float, sigma_x: float) -> NormalityModel:
        return cls(T / sigma_x)

    @property
    def tail_mass(self) -> float:
        """``1 - theta = 2 Q(t)``, computed without cancellation."""
        return 2.0 * float(std_normal_tail(self.t))

    @property
    def theta(self) -> float:
        return 1.0 - self.tail_mass


@dataclass(frozen=True)
class ContaminationModel:
    """Unknown-anomaly weight ``epsilon`` and upper support bound ``m`` of the uniform law."""

    epsilon: float
    m: float

    def __post_init__(self):
        if not (0.0 <= self.epsilon <= 0.1):
            raise ValueError(f"epsilon must lie in [0, 0.1], got {self.epsilon!r}")
        if not (math.isfinite(self.m) and self.m > 0):
            raise ValueError(f"m must be finite and > 0, got {self.m!r}")

    @classmethod
    def default(cls, model: NormalityModel, epsilon: float = 0.0) -> ContaminationModel:
        """Uniform contamination on ``[-2t, -t] U [t, 2t]``."""
        return cls(epsilon, 2.0 * model.t)

    def pi_ok(self, model: NormalityModel) -> float:
        return model.theta * (1.0 - self.epsilon)

    def pi_ko(self, model: NormalityModel) -> float:
        return model.tail_mass + model.theta * self.epsilon

    def tau(self, model: NormalityModel) -> float:
        return self.epsilon / self.pi_ko(model)


@dataclass(frozen=True)
class ADEncoder:
    """Normal-region gain ``alpha``; anomaly gain ``beta`` and offset ``delta``."""

    alpha: float
    beta: float
    delta: float

    def __post_init__(self):
        for name in ("alpha", "beta", "delta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")

    def varsigma(self) -> float:
        return math.sqrt(1.0 + self.alpha**2)

    def vartheta(self) -> float:
        return math.sqrt(1.0 + self.beta**2)


@dataclass(frozen=True)
class DetectorConfig:
    """Detection threshold on ``|w~|``; ``inf`` means the detector never fires."""

    psi: float

    def __post_init__(self):
        if math.isnan(self.psi) or self.psi < 0:
            raise ValueError(f"psi must be >= 0, got {self.psi!r}")


@dataclass(frozen=True)
class ADRiskBreakdown:
    fpr: float
    fnr_tails: float
    fnr_unknown: float
    fnr: float
    risk: float


@dataclass(frozen=True)
class ADDesign:
    """Output of :func:`design_ad`.

    ``corner`` is ``None`` for an interior solution, ``"detection"`` when all
    power goes to the anomaly offset (``alpha = 0``) and ``"reconstruction"``
    when it all goes to the normal signal (``delta = 0``, detector off).
    ``roots`` lists every bracketed ``alpha`` solving the system, in
    increasing order; the reported design uses the first.
    """

    alpha: float
    delta: float
    psi: float
    risk: float
    risk_residual: float
    stationarity_residual: float
    power: float
    corner: str | None = None
    roots: tuple[float, ...] = field(default_factory=tuple)

    @property
    def encoder(self) -> ADEncoder:
        return ADEncoder(self.alpha, 0.0, self.delta)

    @property
    def detector(self) -> DetectorConfig:
        return DetectorConfig(self.psi)


def _sign(x):
    return np.where(x >= 0.0, 1.0, -1.0)


def encode_ad(x_tilde, enc: ADEncoder, model: NormalityModel):
    x = np.asarray(x_tilde, dtype=float)
    out = np.where(
        np.abs(x) <= model.t,
        enc.alpha * x,
        enc.beta * x + enc.delta * _sign(x),
    )
    return out[()] if out.ndim == 0 else out


def snr_split(enc: ADEncoder, model: NormalityModel) -> tuple[float, float]:
    """Per-class average powers ``(SNR_ok, SNR_ko)`` (tails law, no contamination)."""
    t, theta, tail = model.t, model.theta, model.tail_mass
    pdf_t = float(std_normal_pdf(t))
    snr_ok = enc.alpha**2 * (1.0 - 2.0 * t * pdf_t / theta)
    b, d = enc.beta, enc.delta
    ko_mass = 2.0 * (b * (t * b + 2.0 * d) * pdf_t + (b * b + d * d) * float(std_normal_tail(t)))
    snr_ko = ko_mass / tail if tail > 0 else 0.0
    return snr_ok, snr_ko


def power_ad(enc: ADEncoder, model: NormalityModel) -> float:
    """Normalized average power ``theta SNR_ok + (1-theta) SNR_ko`` with ``epsilon = 0``."""
    t = model.t
    pdf_t = float(std_normal_pdf(t))
    b, d = enc.beta, enc.delta
    ok = enc.alpha**2 * (model.theta - 2.0 * t * pdf_t)
    ko = 2.0 * (b * (t * b + 2.0 * d) * pdf_t + (b * b + d * d) * float(std_normal_tail(t)))
    return ok + ko


def _tail_pair(w_abs, alpha: float, t: float):
    """Shared pieces of decoder and score for ``w >= 0``.

    Returns ``(u, ratio, log_q)`` with ``u = alpha w / s``,
    ``ratio = [phi(u - ts) - phi(u + ts)] / [Q(u - ts) - Q(u + ts)]`` and
    ``log_q = log[Q(u - ts) - Q(u + ts)]``.
    """
    s = math.sqrt(1.0 + alpha * alpha)
    u = alpha * w_abs / s
    a = u - t * s
    b = u + t * s
    far = a >= 0.0
    ratio = np.empty_like(u)
    log_q = np.empty_like(u)

    # both arguments in the upper tail: factor out phi(a) and use Mills ratios
    if np.any(far):
        af, bf, uf = a[far], b[far], u[far]
        e = np.exp(-2.0 * t * s * uf)
        den = mills_ratio(af) - e * mills_ratio(bf)
        ratio[far] = (1.0 - e) / den
        log_q[far] = -0.5 * af * af - _LOG_SQRT_2PI + np.log(den)

    near = ~far
    if np.any(near):
        an, bn = a[near], b[near]
        den = (1.0 - std_normal_tail(bn)) - std_normal_tail(-an)
        ratio[near] = (std_normal_pdf(an) - std_normal_pdf(bn)) / den
        log_q[near] = np.log(den)
    return u, ratio, log_q


def decode_ok(w_tilde, alpha: float, model: NormalityModel):
    """MMSE estimate of a normal-class sample from the channel output.

    ``alpha w / s^2 - (1/s) [phi(u - ts) - phi(u + ts)] / [Q(u - ts) - Q(u + ts)]``
    with ``s = sqrt(1 + alpha^2)`` and ``u = alpha w / s``; the output lies in
    ``(-t, t)``.
    """
    w = np.atleast_1d(np.asarray(w_tilde, dtype=float))
    s = math.sqrt(1.0 + alpha * alpha)
    _, ratio, _ = _tail_pair(np.abs(w), alpha, model.t)
    out = _sign(w) * (alpha * np.abs(w) / (s * s) - ratio / s)
    # odd symmetry makes h(0) = 0 exactly
    out = np.where(w == 0.0, 0.0, out)
    return out[0] if np.ndim(w_tilde) == 0 else out


def anomaly_score(w_tilde, alpha: float, model: NormalityModel):
    """Negative log-likelihood of the normal-class output, up to a constant.

    ``w^2 / (2 s^2) - log[Q(alpha w / s - ts) - Q(alpha w / s + ts)]``.
    """
    w = np.atleast_1d(np.abs(np.asarray(w_tilde, dtype=float)))
    s2 = 1.0 + alpha * alpha
    _, _, log_q = _tail_pair(w, alpha, model.t)
    out = w * w / (2.0 * s2) - log_q
    return out[0] if np.ndim(w_tilde) == 0 else out


def detect(w_tilde, det: DetectorConfig):
    """``1{|w~| > psi}``; a sample exactly at the threshold is called normal."""
    out = (np.abs(np.asarray(w_tilde)) > det.psi).astype(int)
    return int(out) if out.ndim == 0 else out


def fpr(det: DetectorConfig, alpha: float, model: NormalityModel) -> float:
    """False-positive rate ``P(|w~| > psi | normal)``.

    ``2 [Phi2(-psi/s, t; -alpha/s) - Phi2(-psi/s, -t; -alpha/s)] / theta``.
    """
    if math.isinf(det.psi):
        return 0.0
    s = math.sqrt(1.0 + alpha * alpha)
    h = -det.psi / s
    rho = -alpha / s
    t = model.t
    val = 2.0 * (bvn_cdf(h, t, rho) - bvn_cdf(h, -t, rho)) / model.theta
    return min(max(val, 0.0), 1.0)


def fnr_sign(det: DetectorConfig, delta: float) -> float:
    """Miss rate of sign-encoded anomalies, ``Q(delta - psi) - Q(delta + psi)``.

    Holds for any anomaly law symmetric about zero and supported on the tails.
    """
    if math.isinf(det.psi):
        return 1.0
    return float(std_normal_tail(delta - det.psi) - std_normal_tail(delta + det.psi))


def fnr_tails(det: DetectorConfig, enc: ADEncoder, model: NormalityModel) -> float:
    """Miss rate for anomalies drawn from the Gaussian tails.

    ``2 [Phi2(k+/v, -t; beta/v) - Phi2(k-/v, -t; beta/v)] / (1 - theta)`` with
    ``k = delta +- psi`` and ``v = sqrt(1 + beta^2)``.
    """
    if enc.beta == 0.0:
        return fnr_sign(det, enc.delta)
    if math.isinf(det.psi):
        return 1.0
    v = enc.vartheta()
    rho = enc.beta / v
    t = model.t
    kp = (enc.delta + det.psi) / v
    km = (enc.delta - det.psi) / v
    val = 2.0 * (bvn_cdf(kp, -t, rho) - bvn_cdf(km, -t, rho)) / model.tail_mass
    return min(max(val, 0.0), 1.0)


def fnr_uniform(
    det: DetectorConfig,
    enc: ADEncoder,
    model: NormalityModel,
    contamination: ContaminationModel,
) -> float:
    """Miss rate for anomalies uniform on ``[-m, -t] U [t, m]``.

    ``[G(k+ + beta m) - G(k+ + beta t) + G(k- + beta t) - G(k- + beta m)] / (beta (m - t))``
    with ``G(x) = x Q(-x) + phi(x)``; ``beta = 0`` reduces to :func:`fnr_sign`.
    """
    m, t = contamination.m, model.t
    if m <= t:
        raise ValueError(f"uniform support bound m={m!r} must exceed t={t!r}")
    if enc.beta == 0.0:
        return fnr_sign(det, enc.delta)
    if math.isinf(det.psi):
        return 1.0
    b = enc.beta
    kp = enc.delta + det.psi
    km = enc.delta - det.psi
    nu = b * (m - t)
    val = (g_aux(kp + b * m) - g_aux(kp + b * t) + g_aux(km + b * t) - g_aux(km + b * m)) / nu
    return min(max(float(val), 0.0), 1.0)


def risk_ad(
    det: DetectorConfig,
    enc: ADEncoder,
    model: NormalityModel,
    contamination: ContaminationModel | None = None,
) -> ADRiskBreakdown:
    """Detector risk ``pi_ok FPR + pi_ko [(1 - tau) FNR_tails + tau FNR_unknown]``."""
    if contamination is None:
        contamination = ContaminationModel.default(model)
    f_pos = fpr(det, enc.alpha, model)
    f_tails = fnr_tails(det, enc, model)
    f_unk = fnr_uniform(det, enc, model, contamination)
    tau = contamination.tau(model)
    f_neg = (1.0 - tau) * f_tails + tau * f_unk
    risk = contamination.pi_ok(model) * f_pos + contamination.pi_ko(model) * f_neg
    return ADRiskBreakdown(f_pos, f_tails, f_unk, f_neg, risk)


def _stationarity(psi, enc: ADEncoder, model: NormalityModel):
    # d/dpsi [theta FPR + (1 - theta) FNR_tails], vectorized over psi
    psi = np.asarray(psi, dtype=float)
    a, t = enc.alpha, model.t
    s = math.sqrt(1.0 + a * a)
    normal = (
        2.0
        / s
        * std_normal_pdf(psi / s)
        * (std_normal_tail((a * psi + t * s * s) / s) - std_normal_tail((a * psi - t * s * s) / s))
    )
    b, d = enc.beta, enc.delta
    v = math.sqrt(1.0 + b * b)
    kp, km = d + psi, d - psi
    anomalous = (
        2.0
        / v
        * (
            std_normal_pdf(kp / v) * std_normal_tail((t * v * v + b * kp) / v)
            + std_normal_pdf(km / v) * std_normal_tail((t * v * v + b * km) / v)
        )
    )
    return normal + anomalous


def risk_derivative(det: DetectorConfig, enc: ADEncoder, model: NormalityModel) -> float:
    """``dR/dpsi`` of the uncontaminated risk ``theta FPR + (1-theta) FNR_tails``."""
    if math.isinf(det.psi):
        return 0.0
    return float(_stationarity(det.psi, enc, model))


def bayes_threshold(
    enc: ADEncoder,
    model: NormalityModel,
    *,
    psi_max: float | None = None,
    n_grid: int = 1024,
) -> DetectorConfig:
    """Smallest local minimizer of the uncontaminated risk in ``psi``.

    The derivative is scanned on ``(0, psi_max]`` (default ``delta + 10``) for
    the first change of sign from negative to positive, then refined by
    Brent's method.

    Raises:
        NoRootInBracket: the derivative never crosses from negative to
            positive on the bracket.
    """
    if psi_max is None:
        psi_max = enc.delta + 10.0
    grid = np.linspace(0.0, psi_max, n_grid + 1)
    grid[0] = 1e-12 * psi_max
    vals = _stationarity(grid, enc, model)
    crossing = np.flatnonzero((vals[:-1] < 0.0) & (vals[1:] >= 0.0))
    if crossing.size == 0:
        raise NoRootInBracket(
            f"risk derivative has no negative-to-positive crossing on (0, {psi_max:g}]"
        )
    i = crossing[0]
    if vals[i + 1] == 0.0:
        return DetectorConfig(float(grid[i + 1]))
    psi = optimize.brentq(
        lambda p: float(_stationarity(p, enc, model)),
        grid[i],
        grid[i + 1],
        xtol=1e-15,
        rtol=4 * np.finfo(float).eps,
        maxiter=200,
    )
    return DetectorConfig(float(psi))


def _normal_power_coefficient(model: NormalityModel) -> float:
    t = model.t
    return model.theta - 2.0 * t * float(std_normal_pdf(t))


def alpha_max(snr: float, model: NormalityModel) -> float:
    """Largest normal-region gain allowed by the power budget (``delta = 0``)."""
    return math.sqrt(snr / _normal_power_coefficient(model))


def delta_from_alpha(alpha: float, snr: float, model: NormalityModel) -> float:
    """Anomaly offset that exhausts the power budget with ``beta = 0``.

    ``sqrt((snr - alpha^2 [theta - 2 t phi(t)]) / (1 - theta))``.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    c = _normal_power_coefficient(model)
    spare = snr - alpha * alpha * c
    if spare < -1e-12 * snr:
        raise ValueError(f"alpha={alpha!r} exceeds the feasible bound {math.sqrt(snr / c)!r}")
    return math.sqrt(max(spare, 0.0) / model.tail_mass)


def _operating_point(alpha: float, snr: float, model: NormalityModel) -> tuple[float, float, float]:
    """``(delta, psi, risk)`` at ``alpha`` with the Bayes threshold, ``epsilon = 0``.

    When no interior minimizer exists the detector is switched off
    (``psi = inf``) and the risk equals the anomaly mass ``1 - theta``.
    """
    delta = delta_from_alpha(alpha, snr, model)
    enc = ADEncoder(alpha, 0.0, delta)
    try:
        det = bayes_threshold(enc, model)
    except NoRootInBracket:
        return delta, math.inf, model.tail_mass
    risk = model.theta * fpr(det, alpha, model) + model.tail_mass * fnr_sign(det, delta)
    if risk > model.tail_mass:
        return delta, math.inf, model.tail_mass
    return delta, det.psi, risk


def achievable_risk_range(snr: float, model: NormalityModel) -> tuple[float, float]:
    """Risks at the two power-allocation endpoints, ``(risk(alpha=0), 1 - theta)``."""
    return _operating_point(0.0, snr, model)[2], model.tail_mass


def _finish(alpha, snr, model, pe, corner=None, roots=()):
    delta, psi, risk = _operating_point(alpha, snr, model)
    enc = ADEncoder(alpha, 0.0, delta)
    stat = 0.0 if math.isinf(psi) else float(_stationarity(psi, enc, model))
    return ADDesign(
        alpha=alpha,
        delta=delta,
        psi=psi,
        risk=risk,
        risk_residual=risk - pe,
        stationarity_residual=stat,
        power=power_ad(enc, model),
        corner=corner,
        roots=tuple(roots),
    )


def design_ad(
    cfg: SourceChannelConfig,
    target: DesignTarget,
    model: NormalityModel,
    *,
    n_scan: int = 64,
) -> ADDesign:
    """Power split and threshold meeting a detection-risk budget with ``beta = 0``.

    Nested one-dimensional solves: for each ``alpha`` the offset follows from
    the active power constraint and ``psi`` from the stationarity condition;
    ``alpha`` is then located by an ``n_scan``-point bracket scan of
    ``risk(alpha) - pe`` over ``[0, alpha_max]`` and Brent refinement of every
    sign change.

    Raises:
        TargetUnreachable: ``pe`` lies outside the achievable risk interval, or
            no bracketed root satisfies the system.
    """
    snr = cfg.snr()
    pe = target.pe
    a_hi = alpha_max(snr, model)
    achievable = achievable_risk_range(snr, model)
    risk_lo, risk_hi = achievable

    if pe < risk_lo * (1.0 - _RISK_GUARD):
        raise TargetUnreachable(
            f"pe={pe!r} is below the minimum achievable risk {risk_lo!r}", achievable
        )
    if pe >= risk_hi - _RISK_GUARD:
        return _finish(a_hi, snr, model, pe, corner="reconstruction")
    # risk_lo can be ~1e-16, so this end of the guard is relative
    if pe <= risk_lo * (1.0 + _RISK_GUARD):
        return _finish(0.0, snr, model, pe, corner="detection")

    def gap(alpha):
        return _operating_point(alpha, snr, model)[2] - pe

    grid = np.linspace(0.0, a_hi, n_scan)
    gaps = np.array([gap(a) for a in grid])
    roots = []
    for i in np.flatnonzero(np.sign(gaps[:-1]) * np.sign(gaps[1:]) <= 0):
        if gaps[i] == 0.0:
            root = float(grid[i])
        else:
            root = optimize.brentq(gap, grid[i], grid[i + 1], xtol=1e-14, maxiter=200)
        _, psi, risk = _operating_point(root, snr, model)
        # a sign change across the detector switch-off point is not a solution
        if math.isfinite(psi) and abs(risk - pe) <= 1e-9 * min(pe, 1.0):
            if not roots or abs(root - roots[-1]) > 1e-10:
                roots.append(root)
    if not roots:
        raise TargetUnreachable(
            f"no (alpha, psi) pair reaches pe={pe!r} with a stationary threshold", achievable
        )
    return _finish(roots[0], snr, model, pe, roots=roots)
