"""Seeded Monte-Carlo transmission chains and brute-force quadrature oracles.

Everything here is deliberately independent of the closed forms in
:mod:`binary_class` and :mod:`anomaly`: the chains only use the encoders,
decoders and detectors as black boxes, and the quadrature routines integrate
the defining ratios of integrals directly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import special

from . import anomaly as ad
from . import binary_class as bc
from ._quadrature import integrate
from .errors import DCPError

__all__ = [
    "BINARY",
    "ANOMALY",
    "SimConfig",
    "SimEstimate",
    "ChainResult",
    "QuadratureSpec",
    "SourceSample",
    "sample_source",
    "run_chain",
    "quadrature_decoder",
    "quadrature_mse",
    "pareto_sweep",
]

BINARY = "binary_classification"
ANOMALY = "anomaly_detection"

# labels of the generating law in AD draws
LAW_NORMAL, LAW_TAILS, LAW_UNKNOWN = 0, 1, 2
_CONDITIONS = {"normal": LAW_NORMAL, "tails": LAW_TAILS, "unknown": LAW_UNKNOWN}

# fixed chunking keeps results independent of the worker count
CHUNK_SIZE = 1 << 16


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    std_error: float
    n: int

    def within(self, value: float, k: float = 3.0) -> bool:
        """True if ``value`` is within ``k`` standard errors of the estimate."""
        return abs(self.mean - value) <= k * self.std_error


@dataclass(frozen=True)
class ChainResult:
    """Monte-Carlo estimates from :func:`run_chain`.

    ``mse`` is the normalized squared error; in the AD scenario it is
    averaged over normal-class samples only (decoded by
    :func:`anomaly.decode_ok`). ``error_rate`` is the classification error
    or the detector risk; ``fpr``/``fnr`` are ``None`` for binary runs.
    """

    mse: SimEstimate
    error_rate: SimEstimate
    empirical_power: SimEstimate
    fpr: SimEstimate | None = None
    fnr: SimEstimate | None = None


@dataclass(frozen=True)
class SimConfig:
    """One Monte-Carlo experiment on normalized quantities.

    Attributes:
        scenario: ``BINARY`` or ``ANOMALY``.
        n: number of source samples.
        seed: root seed; chunk ``i`` uses child ``i`` of ``SeedSequence(seed)``.
        encoder: :class:`binary_class.PiecewiseLinearEncoder` or
            :class:`anomaly.ADEncoder`.
        model: normality model (AD only).
        contamination: unknown-anomaly law (AD only, default ``epsilon = 0``).
        detector: AD threshold; defaults to the Bayes threshold.
        decoder: optional override ``w~ -> x^~`` (vectorized).
        condition: restrict AD draws to one law, ``"normal"``, ``"tails"``
            or ``"unknown"``.
        workers: thread count; does not change the result.
    """

    scenario: str
    n: int
    seed: int
    encoder: object
    model: ad.NormalityModel | None = None
    contamination: ad.ContaminationModel | None = None
    detector: ad.DetectorConfig | None = None
    decoder: Callable | None = field(default=None, compare=False)
    condition: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.scenario not in (BINARY, ANOMALY):
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.scenario == ANOMALY:
            if self.model is None:
                raise ValueError("anomaly scenario needs a NormalityModel")
            if not isinstance(self.encoder, ad.ADEncoder):
                raise TypeError("anomaly scenario needs an ADEncoder")
            if self.condition is not None and self.condition not in _CONDITIONS:
                raise ValueError(f"unknown condition {self.condition!r}")
        elif not isinstance(self.encoder, bc.PiecewiseLinearEncoder):
            raise TypeError("binary scenario needs a PiecewiseLinearEncoder")


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and integration support for the quadrature oracles.

    ``support`` is a tuple of ``(lo, hi)`` intervals; infinite ends are cut
    where the Gaussian weight becomes negligible.
    """

    abs_tol: float = 1e-10
    max_subdivisions: int = 2000
    support: tuple[tuple[float, float], ...] = ((-math.inf, math.inf),)

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be > 0")


class SourceSample(NamedTuple):
    x: np.ndarray
    label: np.ndarray
    law: np.ndarray


def _truncated_normal(rng, n, t):
    # inverse CDF on [-t, t], using the symmetric half for tail accuracy
    qt = float(special.ndtr(-t))
    v = rng.random(n)
    half = 0.5 - qt
    mag = special.ndtri(0.5 + half * v)
    return np.where(rng.random(n) < 0.5, -mag, mag)


def _gaussian_tail(rng, n, t):
    # |x| = Q^{-1}(v Q(t)) for v in (0, 1]
    v = 1.0 - rng.random(n)
    mag = -special.ndtri(v * float(special.ndtr(-t)))
    return np.where(rng.random(n) < 0.5, -mag, mag)


def _uniform_tail(rng, n, t, m):
    mag = t + (m - t) * rng.random(n)
    return np.where(rng.random(n) < 0.5, -mag, mag)


def sample_source(
    scenario: str,
    n: int,
    rng: np.random.Generator,
    model: ad.NormalityModel | None = None,
    contamination: ad.ContaminationModel | None = None,
    condition: str | None = None,
) -> SourceSample:
    """Draw ``n`` normalized source samples with their labels.

    Binary scenario: ``x ~ N(0, 1)``, label ``1{x > 0}``. AD scenario: the
    normal class (label 0) with probability ``pi_ok``, otherwise an anomaly
    (label 1) from the unknown law with probability ``tau`` and from the
    Gaussian tails otherwise. ``law`` records which of the three produced
    each sample (always 0 for binary draws).
    """
    if scenario == BINARY:
        x = rng.standard_normal(n)
        return SourceSample(x, (x > 0).astype(np.int8), np.zeros(n, dtype=np.int8))

    if contamination is None:
        contamination = ad.ContaminationModel.default(model)
    t = model.t
    if condition is not None:
        law = np.full(n, _CONDITIONS[condition], dtype=np.int8)
    else:
        u = rng.random(n)
        pi_ok = contamination.pi_ok(model)
        tau = contamination.tau(model)
        pi_unk = (1.0 - pi_ok) * tau
        law = np.where(u < pi_ok, LAW_NORMAL, np.where(u < pi_ok + pi_unk, LAW_UNKNOWN, LAW_TAILS))
        law = law.astype(np.int8)

    x = np.empty(n)
    for code, draw in (
        (LAW_NORMAL, lambda k: _truncated_normal(rng, k, t)),
        (LAW_TAILS, lambda k: _gaussian_tail(rng, k, t)),
        (LAW_UNKNOWN, lambda k: _uniform_tail(rng, k, t, contamination.m)),
    ):
        sel = law == code
        k = int(np.count_nonzero(sel))
        if k:
            x[sel] = draw(k)
    return SourceSample(x, (law != LAW_NORMAL).astype(np.int8), law)


def _chunk_binary(cfg: SimConfig, rng, size):
    enc = cfg.encoder
    x, label, _ = sample_source(BINARY, size, rng)
    y = bc.encode(x, enc)
    w = y + rng.standard_normal(size)
    decoder = cfg.decoder or (lambda v: bc.decode_mmse(v, enc))
    se = (x - decoder(w)) ** 2
    errors = np.count_nonzero(bc.classify(w) != label)
    p = y * y
    return {
        "n": size,
        "se": math.fsum(se),
        "se2": math.fsum(se * se),
        "err": errors,
        "pw": math.fsum(p),
        "pw2": math.fsum(p * p),
    }


def _chunk_anomaly(cfg: SimConfig, rng, size, detector):
    enc, model = cfg.encoder, cfg.model
    x, label, _ = sample_source(ANOMALY, size, rng, model, cfg.contamination, cfg.condition)
    y = ad.encode_ad(x, enc, model)
    w = y + rng.standard_normal(size)
    flag = ad.detect(w, detector)
    ok = label == 0
    decoder = cfg.decoder or (lambda v: ad.decode_ok(v, enc.alpha, model))
    se = (x[ok] - decoder(w[ok])) ** 2 if np.any(ok) else np.empty(0)
    p = y * y
    return {
        "n": size,
        "n_ok": int(np.count_nonzero(ok)),
        "se": math.fsum(se),
        "se2": math.fsum(se * se),
        "fp": int(np.count_nonzero(flag[ok] == 1)),
        "fn": int(np.count_nonzero(flag[~ok] == 0)),
        "err": int(np.count_nonzero(flag != label)),
        "pw": math.fsum(p),
        "pw2": math.fsum(p * p),
    }


def _mean_estimate(s1: float, s2: float, n: int) -> SimEstimate:
    if n == 0:
        return SimEstimate(math.nan, math.nan, 0)
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / (n - 1) if n > 1 else 0.0
    return SimEstimate(mean, math.sqrt(var / n), n)


def _rate_estimate(k: int, n: int) -> SimEstimate:
    if n == 0:
        return SimEstimate(math.nan, math.nan, 0)
    p = k / n
    return SimEstimate(p, math.sqrt(p * (1.0 - p) / n), n)


def run_chain(cfg: SimConfig) -> ChainResult:
    """Simulate encode -> AWGN -> decode/detect on ``cfg.n`` samples.

    Samples are split into fixed chunks of ``CHUNK_SIZE``; chunk ``i`` draws
    from its own generator seeded by child ``i`` of ``SeedSequence(seed)``
    and the chunk sums are reduced in chunk order, so the output is
    bit-identical for any ``workers``.
    """
    n_chunks = -(-cfg.n // CHUNK_SIZE)
    sizes = [CHUNK_SIZE] * (n_chunks - 1) + [cfg.n - CHUNK_SIZE * (n_chunks - 1)]
    children = np.random.SeedSequence(cfg.seed).spawn(n_chunks)

    if cfg.scenario == BINARY:

        def job(i):
            return _chunk_binary(cfg, np.random.Generator(np.random.PCG64(children[i])), sizes[i])

    else:
        detector = cfg.detector or ad.bayes_threshold(cfg.encoder, cfg.model)

        def job(i):
            rng = np.random.Generator(np.random.PCG64(children[i]))
            return _chunk_anomaly(cfg, rng, sizes[i], detector)

    if cfg.workers == 1:
        parts = [job(i) for i in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(job, range(n_chunks)))

    def total(key):
        vals = [p[key] for p in parts]
        return sum(vals) if isinstance(vals[0], int) else math.fsum(vals)

    n = total("n")
    power_est = _mean_estimate(total("pw"), total("pw2"), n)
    err = _rate_estimate(total("err"), n)
    if cfg.scenario == BINARY:
        return ChainResult(_mean_estimate(total("se"), total("se2"), n), err, power_est)
    n_ok = total("n_ok")
    return ChainResult(
        mse=_mean_estimate(total("se"), total("se2"), n_ok),
        error_rate=err,
        empirical_power=power_est,
        fpr=_rate_estimate(total("fp"), n_ok),
        fnr=_rate_estimate(total("fn"), n - n_ok),
    )


# --- quadrature oracles ---------------------------------------------------

_LOG_FLOOR = 60.0  # e^-60 ~ 1e-26 relative to the peak
_SPAN = 10.0


def _clip_support(support, reach):
    out = []
    for lo, hi in support:
        lo, hi = max(lo, -reach), min(hi, reach)
        if lo < hi:
            out.append((lo, hi))
    return out


def quadrature_decoder(
    w_tilde: float,
    encoder_fn: Callable[[np.ndarray], np.ndarray],
    spec: QuadratureSpec | None = None,
) -> float:
    """Posterior mean ``int s f(s) ds / int f(s) ds`` with ``f(s) = phi(g(s) - w) phi(s)``.

    The integrand is rescaled by its maximum on a dense grid so that far
    outputs do not underflow, and the integration window is shrunk to where
    the log-integrand is within 60 of the peak.
    """
    spec = spec or QuadratureSpec()
    w = float(w_tilde)

    def log_f(s):
        r = encoder_fn(s) - w
        return -0.5 * (r * r + s * s)

    pieces = _clip_support(spec.support, _SPAN + abs(w))
    windows = []
    peak = -math.inf
    for lo, hi in pieces:
        grid = np.linspace(lo, hi, 4001)
        vals = log_f(grid)
        peak = max(peak, float(vals.max()))
        windows.append((grid, vals))

    num = den = 0.0
    for grid, vals in windows:
        keep = np.flatnonzero(vals >= peak - _LOG_FLOOR)
        if keep.size == 0:
            continue
        lo = grid[max(keep[0] - 1, 0)]
        hi = grid[min(keep[-1] + 1, grid.size - 1)]
        bp = (0.0,) if lo < 0.0 < hi else ()

        def weight(s):
            return np.exp(log_f(s) - peak)

        d, _ = integrate(
            weight, lo, hi, abs_tol=spec.abs_tol * 1e-3, rel_tol=1e-14,
            max_subdivisions=spec.max_subdivisions, breakpoints=bp,
        )
        m, _ = integrate(
            lambda s: s * weight(s), lo, hi, abs_tol=spec.abs_tol * 1e-3, rel_tol=1e-14,
            max_subdivisions=spec.max_subdivisions, breakpoints=bp,
        )
        num += m
        den += d
    return num / den


def quadrature_mse(
    decoder_fn: Callable[[np.ndarray], np.ndarray],
    encoder_fn: Callable[[np.ndarray], np.ndarray],
    spec: QuadratureSpec | None = None,
) -> float:
    """``E[(x - h(g(x) + nu))^2]`` by nested adaptive quadrature.

    ``x`` is standard normal restricted to ``spec.support`` (renormalized),
    ``nu`` is standard normal. Both integrals are cut at 10 standard
    deviations.
    """
    spec = spec or QuadratureSpec()
    inner_tol = spec.abs_tol * 1e-2

    def inner(s):
        g = float(encoder_fn(np.array([s]))[0])

        def f(nu):
            e = s - decoder_fn(g + nu)
            return e * e * np.exp(-0.5 * nu * nu)

        v, _ = integrate(f, -_SPAN, _SPAN, abs_tol=inner_tol, rel_tol=1e-13,
                         max_subdivisions=spec.max_subdivisions)
        return v / math.sqrt(2.0 * math.pi)

    def outer(s):
        vals = np.array([inner(float(si)) for si in s])
        return vals * np.exp(-0.5 * s * s) / math.sqrt(2.0 * math.pi)

    total = mass = 0.0
    for lo, hi in _clip_support(spec.support, _SPAN):
        bp = (0.0,) if lo < 0.0 < hi else ()
        v, _ = integrate(outer, lo, hi, abs_tol=spec.abs_tol, rel_tol=1e-12,
                         max_subdivisions=spec.max_subdivisions, breakpoints=bp)
        total += v
        mass += float(special.ndtr(hi) - special.ndtr(lo))
    return total / mass


# --- trade-off sweeps -----------------------------------------------------

SWEEP_FIELDS = (
    "scenario",
    "index",
    "status",
    "corner",
    "pe_target",
    "alpha",
    "beta_or_delta",
    "psi",
    "A",
    "B_or_D",
    "closed_form_risk",
    "solver_residual",
    "power",
    "mc_mse",
    "mc_mse_se",
    "mc_risk",
    "mc_risk_se",
    "mc_power",
    "mc_n",
    "seed",
)


def _blank_record(scenario, index, pe, mc_n, seed):
    rec = dict.fromkeys(SWEEP_FIELDS)
    rec.update(scenario=scenario, index=index, pe_target=pe, mc_n=mc_n, seed=seed)
    return rec


def _sweep_binary(cfg, n_points, mc_n, seed, workers):
    snr = cfg.snr()
    pe_lo, pe_hi = bc.pareto_range(snr)
    out = []
    for i, pe in enumerate(np.linspace(pe_lo, pe_hi, n_points)):
        pe = float(pe)
        rec = _blank_record(BINARY, i, pe, mc_n, seed)
        try:
            sol = bc.design(cfg, bc.DesignTarget(pe))
        except (DCPError, ValueError) as exc:
            rec["status"] = f"failed: {type(exc).__name__}: {exc}"
            out.append(rec)
            continue
        enc = sol.encoder
        A, B = enc.to_physical(cfg)
        # common random numbers across the sweep keep the MC column smooth
        res = run_chain(SimConfig(BINARY, mc_n, seed, enc, workers=workers))
        rec.update(
            status="ok",
            corner=sol.corner or "",
            alpha=sol.alpha_star,
            beta_or_delta=sol.beta_star,
            A=A,
            B_or_D=B,
            closed_form_risk=sol.achieved_risk,
            solver_residual=sol.solver_residual,
            power=bc.power(enc),
            mc_mse=res.mse.mean,
            mc_mse_se=res.mse.std_error,
            mc_risk=res.error_rate.mean,
            mc_risk_se=res.error_rate.std_error,
            mc_power=res.empirical_power.mean,
        )
        out.append(rec)
    return out


def _sweep_anomaly(cfg, model, contamination, n_points, mc_n, seed, workers):
    snr = cfg.snr()
    lo, hi = ad.achievable_risk_range(snr, model)
    out = []
    for i, pe in enumerate(np.linspace(lo, hi, n_points)):
        pe = float(pe)
        rec = _blank_record(ANOMALY, i, pe, mc_n, seed)
        try:
            sol = ad.design_ad(cfg, bc.DesignTarget(pe), model)
        except (DCPError, ValueError) as exc:
            rec["status"] = f"failed: {type(exc).__name__}"
            out.append(rec)
            continue
        enc, det = sol.encoder, sol.detector
        res = run_chain(
            SimConfig(ANOMALY, mc_n, seed, enc, model=model, contamination=contamination,
                      detector=det, workers=workers)
        )
        rec.update(
            status="ok",
            corner=sol.corner or "",
            alpha=sol.alpha,
            beta_or_delta=sol.delta,
            psi=sol.psi if math.isfinite(sol.psi) else None,
            A=sol.alpha * cfg.sigma_z / cfg.sigma_x,
            B_or_D=sol.delta * cfg.sigma_z,
            closed_form_risk=sol.risk,
            solver_residual=max(abs(sol.risk_residual), abs(sol.stationarity_residual)),
            power=sol.power,
            mc_mse=res.mse.mean,
            mc_mse_se=res.mse.std_error,
            mc_risk=res.error_rate.mean,
            mc_risk_se=res.error_rate.std_error,
            mc_power=res.empirical_power.mean,
        )
        out.append(rec)
    return out


def pareto_sweep(
    scenario: str,
    cfg: bc.SourceChannelConfig,
    n_points: int,
    mc_n: int,
    *,
    seed: int = 0,
    model: ad.NormalityModel | None = None,
    contamination: ad.ContaminationModel | None = None,
    workers: int = 1,
) -> list[dict]:
    """Design and simulate ``n_points`` targets evenly spread over the feasible risk range.

    Binary: the Pareto range ``[Q(sqrt(SNR)), arccot(sqrt(SNR))/pi]``. AD:
    from the ``alpha = 0`` risk up to the anomaly mass ``1 - theta``; MC
    runs use ``contamination`` (default ``epsilon = 0``). A point whose
    design fails is kept with ``status = "failed: ..."`` and empty numbers.
    Records come back sorted by ``pe_target``.
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    if scenario == BINARY:
        return _sweep_binary(cfg, n_points, mc_n, seed, workers)
    if scenario == ANOMALY:
        if model is None:
            raise ValueError("anomaly sweep needs a NormalityModel")
        return _sweep_anomaly(cfg, model, contamination, n_points, mc_n, seed, workers)
    raise ValueError(f"unknown scenario {scenario!r}")

