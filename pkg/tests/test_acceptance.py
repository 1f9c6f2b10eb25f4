"""Acceptance suite: ten end-to-end criteria at their stated tolerances.

Each test prints one ``ACCEPTANCE <n> PASS|FAIL`` line (also visible under
plain ``pytest -v``) and then asserts. Monte-Carlo budgets and seeds are
fixed, so the numbers in the lines are reproducible.
"""

import math

import numpy as np
import pytest

from dcpjscc import anomaly as ad
from dcpjscc import binary_class as bc
from dcpjscc import cli
from dcpjscc import sim_oracle as so
from dcpjscc.special_fn import bvn_cdf, owen_t, skew_normal_cdf, std_normal_tail

N_MC = 1_000_000
SEED = 20240601


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        assert ok, detail

    return emit


def sign(s):
    return np.where(s >= 0, 1.0, -1.0)


def binomial_sigmas(est, p):
    se = math.sqrt(p * (1 - p) / est.n)
    diff = abs(est.mean - p)
    return 0.0 if diff == 0 else diff / se if se > 0 else math.inf


def test_1_table_reproduction(report):
    cfg = bc.SourceChannelConfig(1.0, 0.63, 3.0)
    targets = (0.1, 0.058, 0.038, 0.013, 0.0071)
    expected = (0.12, 0.13, 0.15, 0.22, 0.28)
    got = []
    for pe in targets:
        enc = bc.design(cfg, bc.DesignTarget(pe)).encoder
        got.append(so.run_chain(so.SimConfig(so.BINARY, N_MC, SEED, enc)).mse.mean)
    worst = max(abs(g - e) for g, e in zip(got, expected))
    detail = "MSE " + ", ".join(f"{g:.4f}" for g in got) + f"; max |dev| {worst:.4f} (tol 0.01)"
    report(1, "piecewise-linear MSE reference row", worst <= 0.01, detail)


def test_2_corner_formulas(report):
    worst = 0.0
    for i, snr in enumerate((0.25, 1.0, 3.0, 7.56, 20.0)):
        a = math.sqrt(snr)
        lin = so.run_chain(so.SimConfig(so.BINARY, N_MC, SEED + i, bc.PiecewiseLinearEncoder(a, 0.0)))
        worst = max(worst, abs(lin.mse.mean - 1 / (1 + snr)) / lin.mse.std_error)
        worst = max(worst, binomial_sigmas(lin.error_rate, math.atan(1 / a) / math.pi))
        sgn = so.run_chain(so.SimConfig(so.BINARY, N_MC, SEED + 10 + i, bc.PiecewiseLinearEncoder(0.0, a)))
        worst = max(worst, binomial_sigmas(sgn.error_rate, float(std_normal_tail(a))))
    report(2, "corner MSE and risk vs MC", worst <= 3.0, f"worst deviation {worst:.2f} SE over 5 points (tol 3)")


def test_3_bound_direction_and_tightness(report):
    worst_mc = -math.inf
    worst_quad = 0.0
    for i, b in enumerate((0.5, 1.0, math.sqrt(3), 2.5)):
        bound = bc.mmse_tanh_bound(b)
        cfg = so.SimConfig(so.BINARY, N_MC, SEED + i, bc.PiecewiseLinearEncoder(0.0, b),
                           decoder=lambda w, b=b: bc.SQRT_2_OVER_PI * np.tanh(b * w))
        mse = so.run_chain(cfg).mse
        worst_mc = max(worst_mc, (mse.mean - bound) / mse.std_error)
        quad = so.quadrature_mse(lambda w, b=b: bc.decode_erf_surrogate(w, b), lambda s, b=b: b * sign(s))
        worst_quad = max(worst_quad, abs(quad - bound))
    ok = worst_mc <= 3.0 and worst_quad <= 1e-5
    detail = f"max (MC - bound)/SE {worst_mc:.2f} (tol 3); surrogate quadrature |dev| {worst_quad:.1e} (tol 1e-5)"
    report(3, "tanh bound direction and tightness", ok, detail)


def test_4_decoder_oracle_equivalence(report):
    w = np.linspace(-8, 8, 161)
    worst_bc = 0.0
    for alpha, beta in ((0.9, 1.1), (0.3, 2.0), (1.96, 0.22), (2.5, 0.05)):
        enc = bc.PiecewiseLinearEncoder(alpha, beta)
        quad = np.array([so.quadrature_decoder(v, lambda s: alpha * s + beta * sign(s)) for v in w])
        worst_bc = max(worst_bc, float(np.max(np.abs(bc.decode_mmse(w, enc) - quad))))
    worst_ad = 0.0
    for alpha, t in ((0.5, 2.0), (1.5, 1.0), (3.0, 3.0)):
        model = ad.NormalityModel(t)
        spec = so.QuadratureSpec(support=((-t, t),))
        quad = np.array([so.quadrature_decoder(v, lambda s: alpha * s, spec) for v in w])
        worst_ad = max(worst_ad, float(np.max(np.abs(ad.decode_ok(w, alpha, model) - quad))))
    ok = max(worst_bc, worst_ad) <= 1e-6
    report(4, "closed-form vs quadrature decoders", ok,
           f"binary {worst_bc:.1e}, AD {worst_ad:.1e} (tol 1e-6)")


def test_5_design_equation(report):
    worst_drop = math.inf
    worst_rt = worst_end = 0.0
    for snr in (0.5, 2.0, 7.56, 30.0):
        grid = np.linspace(0, math.sqrt(snr), 200)
        lhs = np.array([bc.design_equation_lhs(a, snr) for a in grid])
        worst_drop = min(worst_drop, float(np.min(np.diff(lhs))))
        lo, hi = bc.pareto_range(snr)
        cfg = bc.SourceChannelConfig(1.0, 1 / math.sqrt(snr), 1.0)
        for pe in np.linspace(lo, hi, 9)[1:-1]:
            worst_rt = max(worst_rt, abs(bc.design(cfg, bc.DesignTarget(pe)).achieved_risk - pe))
        a = bc.design(cfg, bc.DesignTarget(lo))
        b = bc.design(cfg, bc.DesignTarget(hi))
        worst_end = max(worst_end, abs(a.alpha_star), abs(a.beta_star - math.sqrt(snr)),
                        abs(b.alpha_star - math.sqrt(snr)), abs(b.beta_star))
    ok = worst_drop > 0 and worst_rt <= 1e-9 and worst_end <= 1e-6
    detail = f"min step {worst_drop:.2e} (> 0); round-trip {worst_rt:.1e} (tol 1e-9); endpoints {worst_end:.1e} (tol 1e-6)"
    report(5, "design equation properties", ok, detail)


def test_6_special_identities(report):
    h = np.linspace(-8, 8, 321)
    a = np.linspace(-10, 10, 201)
    q = std_normal_tail(-h)
    dev12 = max(
        float(np.max(np.abs(owen_t(h, 0.0)))),
        float(np.max(np.abs(owen_t(0.0, a) - np.arctan(a) / (2 * math.pi)))),
        float(np.max(np.abs(owen_t(h, 1.0) - 0.5 * q * (1 - q)))),
        float(np.max(np.abs(skew_normal_cdf(h, 0.0) - q))),
    )
    g = np.linspace(-5, 5, 31)
    X, Y = np.meshgrid(g, g)
    fx, fy = std_normal_tail(-X), std_normal_tail(-Y)
    dev10 = float(np.max(np.abs(bvn_cdf(X, Y, 0.0) - fx * fy)))
    for rho in (-0.95, -0.5, 0.2, 0.7, 0.99):
        p = bvn_cdf(X, Y, rho)
        dev10 = max(dev10, float(np.max(np.abs(p - bvn_cdf(Y, X, rho)))))
        dev10 = max(dev10, float(np.max(np.maximum(np.maximum(fx + fy - 1, 0) - p, 0))))
        dev10 = max(dev10, float(np.max(np.maximum(p - np.minimum(fx, fy), 0))))
    ok = dev12 <= 1e-12 and dev10 <= 1e-10
    report(6, "special-function identities", ok, f"T/Phi_SN {dev12:.1e} (tol 1e-12), Phi2 {dev10:.1e} (tol 1e-10)")


def test_7_ad_risk_vs_mc(report):
    rng = np.random.default_rng(SEED)
    worst = 0.0
    worst_mix = 0.0
    for i in range(10):
        t = rng.uniform(1.0, 3.0)
        model = ad.NormalityModel(t)
        enc = ad.ADEncoder(rng.uniform(0.2, 2.0), rng.uniform(0.1, 1.5), rng.uniform(1.0, 5.0))
        det = ad.DetectorConfig(rng.uniform(0.5, enc.delta + 1.0))
        cont = ad.ContaminationModel(1e-3, rng.uniform(t + 0.5, 2 * t + 1.0))
        sign_enc = ad.ADEncoder(enc.alpha, 0.0, enc.delta)
        runs = (
            (enc, "normal", "fpr", ad.fpr(det, enc.alpha, model)),
            (enc, "tails", "fnr", ad.fnr_tails(det, enc, model)),
            (sign_enc, "tails", "fnr", ad.fnr_sign(det, enc.delta)),
            (enc, "unknown", "fnr", ad.fnr_uniform(det, enc, model, cont)),
        )
        for j, (e, cond, field, p) in enumerate(runs):
            res = so.run_chain(so.SimConfig(so.ANOMALY, N_MC, SEED + 4 * i + j, e, model=model,
                                            contamination=cont, detector=det, condition=cond))
            worst = max(worst, binomial_sigmas(getattr(res, field), p))
        br = ad.risk_ad(det, enc, model, cont)
        tau = cont.tau(model)
        mix = cont.pi_ok(model) * br.fpr + cont.pi_ko(model) * ((1 - tau) * br.fnr_tails + tau * br.fnr_unknown)
        worst_mix = max(worst_mix, abs(br.risk - mix))
    ok = worst <= 3.0 and worst_mix == 0.0
    report(7, "AD rates vs MC", ok,
           f"worst {worst:.2f} binomial SE over 10 points x 4 rates (tol 3); mixture identity |dev| {worst_mix:.1e}")


def test_8_stationarity_and_threshold(report):
    worst_fd = worst_grid = worst_sys = worst_pow = 0.0
    h = 1e-5
    for t, alpha, beta, delta, psi in ((2.0, 1.0, 0.0, 4.0, 2.5), (1.5, 0.6, 0.0, 3.0, 1.8),
                                       (2.0, 1.2, 0.7, 1.5, 1.8), (3.0, 2.0, 0.3, 5.0, 3.0)):
        model = ad.NormalityModel(t)
        enc = ad.ADEncoder(alpha, beta, delta)
        fd = (ad.risk_ad(ad.DetectorConfig(psi + h), enc, model).risk
              - ad.risk_ad(ad.DetectorConfig(psi - h), enc, model).risk) / (2 * h)
        worst_fd = max(worst_fd, abs(ad.risk_derivative(ad.DetectorConfig(psi), enc, model) - fd))
    for t, alpha, delta in ((2.0, 1.0, 4.0), (2.0, 0.5, 6.0), (1.0, 1.5, 3.0)):
        model = ad.NormalityModel(t)
        enc = ad.ADEncoder(alpha, 0.0, delta)
        grid = np.arange(0.0, delta + 6.0, 1e-3)
        risks = [ad.risk_ad(ad.DetectorConfig(p), enc, model).risk for p in grid]
        psi_grid = grid[int(np.argmin(risks))]
        worst_grid = max(worst_grid, abs(ad.bayes_threshold(enc, model).psi - psi_grid))
    for sigma_z in (0.5, 1.0):
        cfg = bc.SourceChannelConfig(2.0, sigma_z, 3.0)
        model = ad.NormalityModel.from_physical(4.0, 2.0)
        lo, hi = ad.achievable_risk_range(cfg.snr(), model)
        for pe in np.geomspace(lo, hi, 7)[1:-1]:
            sol = ad.design_ad(cfg, bc.DesignTarget(float(pe)), model)
            worst_sys = max(worst_sys, abs(sol.risk_residual), abs(sol.stationarity_residual))
            worst_pow = max(worst_pow, abs(sol.power - cfg.snr()))
    ok = worst_fd <= 1e-6 and worst_grid <= 2e-3 and worst_sys <= 1e-8 and worst_pow <= 1e-9
    detail = (f"FD {worst_fd:.1e} (tol 1e-6); grid {worst_grid:.1e} (tol 2e-3); "
              f"system {worst_sys:.1e} (tol 1e-8); power {worst_pow:.1e} (tol 1e-9)")
    report(8, "stationarity, threshold and design residuals", ok, detail)


def test_9_contamination_robustness(report):
    model = ad.NormalityModel.from_physical(4.0, 2.0)
    cont = ad.ContaminationModel.default(model, 1e-3)
    worst = 0.0
    count = 0
    for sigma_z in (0.5, 1.0):
        cfg = bc.SourceChannelConfig(2.0, sigma_z, 3.0)
        lo, hi = ad.achievable_risk_range(cfg.snr(), model)
        for k, pe in enumerate(np.geomspace(lo, hi, 8)[1:-1]):
            sol = ad.design_ad(cfg, bc.DesignTarget(float(pe)), model)
            res = so.run_chain(so.SimConfig(so.ANOMALY, N_MC, SEED + k, sol.encoder, model=model,
                                            contamination=cont, detector=sol.detector))
            worst = max(worst, abs(res.error_rate.mean - sol.risk))
            count += 1
    report(9, "contamination robustness", worst <= 0.005,
           f"max |MC risk (eps=1e-3) - closed form (eps=0)| {worst:.2e} over {count} designs (tol 0.005)")


def test_10_cli_determinism(capsys, report):
    commands = (
        ["design-class", "--sigma-z", "0.63", "--power", "3", "--pe", "0.038"],
        ["design-ad", "--sigma-x", "2", "--power", "3", "--t", "2", "--pe", "0.02"],
        ["pareto-class", "--power", "3", "--points", "6", "--mc-n", "150000", "--seed", "3"],
        ["pareto-ad", "--sigma-x", "2", "--power", "3", "--t", "2", "--epsilon", "1e-3",
         "--points", "5", "--mc-n", "150000", "--seed", "3"],
        ["simulate", "class", "--power", "3", "--pe", "0.05", "--mc-n", "300000", "--seed", "3"],
        ["simulate", "ad", "--power", "3", "--pe", "0.02", "--mc-n", "300000", "--seed", "3", "--format", "json"],
    )
    bad = []
    for argv in commands:
        outs = set()
        for extra in ([], [], ["--workers", "4"]):
            if extra and argv[0].startswith("design"):
                extra = []
            code = cli.main(argv + extra)
            outs.add((code, capsys.readouterr().out))
        if len(outs) != 1 or next(iter(outs))[0] != 0:
            bad.append(argv[0])
    report(10, "CLI determinism", not bad,
           f"{len(commands) - len(bad)}/{len(commands)} commands byte-identical across runs and workers")
