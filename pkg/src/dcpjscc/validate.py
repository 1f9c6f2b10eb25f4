"""Cross-oracle validation suites: closed forms vs quadrature vs Monte Carlo.

Each suite returns a list of :class:`Check`; a check passes when its
deviation is within tolerance. Monte-Carlo checks compare against
``k`` standard errors, so their tolerance is reported in those units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import anomaly as ad
from . import binary_class as bc
from . import sim_oracle as so
from .special_fn import bvn_cdf, owen_t, skew_normal_cdf, std_normal_tail

SUITES = ("special", "class", "ad", "all")


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.deviation <= self.tolerance)


def _sign(s):
    return np.where(s >= 0, 1.0, -1.0)


def _mc_sigmas(est: so.SimEstimate, value: float) -> float:
    # deviation in units of standard error; an exact hit with zero SE is 0
    diff = abs(est.mean - value)
    if est.std_error == 0:
        return 0.0 if diff == 0 else math.inf
    return diff / est.std_error


def special_suite(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    h = np.linspace(-6, 6, 61)
    a = np.linspace(-5, 5, 41)
    out = []

    out.append(Check("special", "T(h,0) = 0", float(np.max(np.abs(owen_t(h, 0.0)))), 1e-12))
    dev = np.max(np.abs(owen_t(0.0, a) - np.arctan(a) / (2 * math.pi)))
    out.append(Check("special", "T(0,a) = atan(a)/2pi", float(dev), 1e-12))
    q = std_normal_tail(-h)
    dev = np.max(np.abs(owen_t(h, 1.0) - 0.5 * q * (1 - q)))
    out.append(Check("special", "T(h,1) = Q(-h)(1-Q(-h))/2", float(dev), 1e-12))
    hh, aa = rng.uniform(-5, 5, 300), rng.uniform(-5, 5, 300)
    dev = np.max(np.abs(owen_t(hh, aa) - special.owens_t(hh, aa)))
    out.append(Check("special", "T vs reference implementation", float(dev), 1e-12))

    xi = np.linspace(-8, 8, 81)
    dev = np.max(np.abs(skew_normal_cdf(xi, 0.0) - std_normal_tail(-xi)))
    out.append(Check("special", "Phi_SN(xi;0) = Q(-xi)", float(dev), 1e-12))

    g = np.linspace(-4, 4, 17)
    X, Y = np.meshgrid(g, g)
    dev = np.max(np.abs(bvn_cdf(X, Y, 0.0) - std_normal_tail(-X) * std_normal_tail(-Y)))
    out.append(Check("special", "Phi2 factorizes at rho=0", float(dev), 1e-10))
    worst_sym = worst_frechet = 0.0
    for rho in (-0.9, -0.5, 0.3, 0.8, 0.99):
        p = bvn_cdf(X, Y, rho)
        worst_sym = max(worst_sym, float(np.max(np.abs(p - bvn_cdf(Y, X, rho)))))
        fx, fy = std_normal_tail(-X), std_normal_tail(-Y)
        lower = np.maximum(fx + fy - 1.0, 0.0)
        upper = np.minimum(fx, fy)
        worst_frechet = max(
            worst_frechet, float(np.max(np.maximum(lower - p, 0.0) + np.maximum(p - upper, 0.0)))
        )
    out.append(Check("special", "Phi2 symmetric in its arguments", worst_sym, 1e-10))
    out.append(Check("special", "Phi2 within Frechet bounds", worst_frechet, 1e-10))
    return out


def class_suite(seed: int = 0, mc_n: int = 200_000) -> list[Check]:
    out = []
    w = np.linspace(-8, 8, 33)
    worst = 0.0
    for alpha, beta in ((0.9, 1.1), (0.0, 2.0), (1.5, 0.0), (2.3, 0.4)):
        enc = bc.PiecewiseLinearEncoder(alpha, beta)
        quad = np.array(
            [so.quadrature_decoder(v, lambda s, a=alpha, b=beta: a * s + b * _sign(s)) for v in w]
        )
        worst = max(worst, float(np.max(np.abs(bc.decode_mmse(w, enc) - quad))))
    out.append(Check("class", "decode_mmse vs quadrature", worst, 1e-6))

    snr = 3.0
    worst = 0.0
    for pe in (0.05, 0.1, 0.15):
        sol = bc.design(bc.SourceChannelConfig(1.0, 1.0 / math.sqrt(snr), 1.0), bc.DesignTarget(pe))
        worst = max(worst, abs(sol.achieved_risk - pe))
    out.append(Check("class", "design round-trips pe", worst, 1e-9))

    grid = np.linspace(0, math.sqrt(snr), 200)
    lhs = np.array([bc.design_equation_lhs(a, snr) for a in grid])
    out.append(Check("class", "design equation increasing", float(max(0.0, -np.min(np.diff(lhs)))), 0.0))

    worst = 0.0
    for i, (alpha, beta) in enumerate(((1.0, 0.0), (0.0, 1.0), (0.8, 1.5))):
        enc = bc.PiecewiseLinearEncoder(alpha, beta)
        res = so.run_chain(so.SimConfig(so.BINARY, mc_n, seed + i, enc))
        worst = max(worst, _mc_sigmas(res.error_rate, bc.risk_closed_form(enc)))
        worst = max(worst, _mc_sigmas(res.empirical_power, bc.power(enc)))
    out.append(Check("class", "risk and power vs MC (SE units)", worst, 3.0))

    res = so.run_chain(so.SimConfig(so.BINARY, mc_n, seed, bc.PiecewiseLinearEncoder(math.sqrt(snr), 0.0)))
    out.append(Check("class", "linear MSE vs MC (SE units)", _mc_sigmas(res.mse, bc.mmse_linear(math.sqrt(snr))), 3.0))
    return out


def ad_suite(seed: int = 0, mc_n: int = 200_000) -> list[Check]:
    out = []
    model = ad.NormalityModel(2.0)
    w = np.linspace(-8, 8, 33)
    worst = 0.0
    for alpha in (0.5, 1.0, 2.0):
        spec = so.QuadratureSpec(support=((-model.t, model.t),))
        quad = np.array([so.quadrature_decoder(v, lambda s, a=alpha: a * s, spec) for v in w])
        worst = max(worst, float(np.max(np.abs(ad.decode_ok(w, alpha, model) - quad))))
    out.append(Check("ad", "decode_ok vs quadrature", worst, 1e-6))

    enc = ad.ADEncoder(1.0, 0.5, 1.5)
    worst = 0.0
    for psi in np.linspace(0.1, enc.delta + 5, 25):
        h = 1e-5

        def risk(p):
            return ad.risk_ad(ad.DetectorConfig(p), enc, model).risk

        fd = (risk(psi + h) - risk(psi - h)) / (2 * h)
        worst = max(worst, abs(fd - ad.risk_derivative(ad.DetectorConfig(psi), enc, model)))
    out.append(Check("ad", "risk derivative vs finite differences", worst, 1e-6))

    det = ad.DetectorConfig(1.5)
    worst = 0.0
    for i, (cond, expected) in enumerate(
        (
            ("normal", ad.fpr(det, enc.alpha, model)),
            ("tails", ad.fnr_tails(det, enc, model)),
        )
    ):
        res = so.run_chain(
            so.SimConfig(so.ANOMALY, mc_n, seed + i, enc, model=model, detector=det, condition=cond)
        )
        est = res.fpr if cond == "normal" else res.fnr
        worst = max(worst, _mc_sigmas(est, expected))
    cont = ad.ContaminationModel(1e-3, 4.0)
    res = so.run_chain(
        so.SimConfig(so.ANOMALY, mc_n, seed + 2, enc, model=model, contamination=cont,
                     detector=det, condition="unknown")
    )
    worst = max(worst, _mc_sigmas(res.fnr, ad.fnr_uniform(det, enc, model, cont)))
    res = so.run_chain(so.SimConfig(so.ANOMALY, mc_n, seed + 3, enc, model=model, detector=det))
    worst = max(worst, _mc_sigmas(res.error_rate, ad.risk_ad(det, enc, model).risk))
    worst = max(worst, _mc_sigmas(res.empirical_power, ad.power_ad(enc, model)))
    out.append(Check("ad", "FPR/FNR/risk/power vs MC (SE units)", worst, 3.0))

    cfg = bc.SourceChannelConfig(2.0, 1.0, 3.0)
    lo, hi = ad.achievable_risk_range(cfg.snr(), model)
    sol = ad.design_ad(cfg, bc.DesignTarget(0.5 * (lo + hi)), model)
    worst = max(abs(sol.risk_residual), abs(sol.stationarity_residual))
    out.append(Check("ad", "design_ad residuals", worst, 1e-8))
    out.append(Check("ad", "design_ad power constraint", abs(sol.power - cfg.snr()), 1e-9))
    return out


def run_suite(name: str, seed: int = 0) -> list[Check]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}")
    checks = []
    if name in ("special", "all"):
        checks += special_suite(seed)
    if name in ("class", "all"):
        checks += class_suite(seed)
    if name in ("ad", "all"):
        checks += ad_suite(seed)
    return checks


def format_table(checks: list[Check]) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{'suite':<8} {'check':<{width}} {'deviation':>12} {'tolerance':>10}  result"]
    for c in checks:
        lines.append(
            f"{c.suite:<8} {c.name:<{width}} {c.deviation:>12.3e} {c.tolerance:>10.1e}  "
            f"{'PASS' if c.passed else 'FAIL'}"
        )
    return "\n".join(lines)
