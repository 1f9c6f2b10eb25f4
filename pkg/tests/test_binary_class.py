import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcpjscc import sim_oracle as so
from dcpjscc.binary_class import (
    SQRT_2_OVER_PI,
    DesignTarget,
    PiecewiseLinearEncoder,
    SourceChannelConfig,
    beta_from_alpha,
    classify,
    decode_denormalized,
    decode_erf_surrogate,
    decode_mmse,
    design,
    design_equation_lhs,
    encode,
    mmse_linear,
    mmse_tanh_bound,
    pareto_range,
    power,
    risk_closed_form,
)
from dcpjscc.errors import PeAboveRange, PeBelowRange
from dcpjscc.special_fn import std_normal_tail


def cfg_for_snr(snr):
    return SourceChannelConfig(1.0, 1.0 / math.sqrt(snr), 1.0)


def sign_enc(alpha, beta):
    return lambda s: alpha * s + beta * np.where(s >= 0, 1.0, -1.0)


def test_config_validation():
    assert SourceChannelConfig(2.0, 0.5, 3.0).snr() == pytest.approx(12.0)
    for bad in ((0, 1, 1), (1, -1, 1), (1, 1, math.inf)):
        with pytest.raises(ValueError):
            SourceChannelConfig(*bad)
    with pytest.raises(ValueError):
        PiecewiseLinearEncoder(-0.1, 1.0)
    for pe in (0.0, 0.5, -1.0):
        with pytest.raises(ValueError):
            DesignTarget(pe)


def test_physical_round_trip():
    cfg = SourceChannelConfig(2.0, 0.5, 3.0)
    enc = PiecewiseLinearEncoder(1.2, 0.7)
    A, B = enc.to_physical(cfg)
    assert A == pytest.approx(1.2 * 0.5 / 2.0)
    assert B == pytest.approx(0.35)
    back = PiecewiseLinearEncoder.from_physical(A, B, cfg)
    assert back.alpha == pytest.approx(1.2) and back.beta == pytest.approx(0.7)
    assert enc.varsigma() == pytest.approx(math.sqrt(1 + 1.44))


def test_encode():
    enc = PiecewiseLinearEncoder(1.0, 2.0)
    assert encode(0.5, enc) == 2.5
    assert encode(-0.5, enc) == -2.5
    assert encode(0.0, enc) == 2.0
    x = np.linspace(-2, 2, 9)
    np.testing.assert_allclose(encode(x, PiecewiseLinearEncoder(math.sqrt(3), 0.0)), math.sqrt(3) * x)


def test_decoder_corners():
    w = np.linspace(-6, 6, 25)
    np.testing.assert_allclose(decode_mmse(w, PiecewiseLinearEncoder(1.0, 0.0)), w / 2, atol=1e-15)
    assert decode_mmse(1.3, PiecewiseLinearEncoder(0.0, 2.0)) == pytest.approx(
        SQRT_2_OVER_PI * math.tanh(2.6), abs=1e-15
    )
    for a, b in ((0.0, 1.0), (1.0, 1.0), (3.0, 0.2)):
        assert decode_mmse(0.0, PiecewiseLinearEncoder(a, b)) == 0.0


def test_decoder_point_against_quadrature():
    enc = PiecewiseLinearEncoder(0.9, 1.1)
    ref = so.quadrature_decoder(0.7, sign_enc(0.9, 1.1))
    assert decode_mmse(0.7, enc) == pytest.approx(ref, abs=1e-6)


@pytest.mark.parametrize("alpha,beta", [(1, 0), (0, 2), (0.9, 1.1), (2, 0.5)])
def test_decoder_grid_against_quadrature(alpha, beta):
    w = np.arange(-8, 8.0001, 0.05)
    ref = np.array([so.quadrature_decoder(v, sign_enc(alpha, beta)) for v in w])
    assert np.max(np.abs(decode_mmse(w, PiecewiseLinearEncoder(alpha, beta)) - ref)) <= 1e-6


def test_decoder_is_odd_and_stable():
    enc = PiecewiseLinearEncoder(0.8, 1.7)
    w = np.linspace(0, 60, 301)
    h = decode_mmse(w, enc)
    np.testing.assert_allclose(decode_mmse(-w, enc), -h, atol=1e-12)
    huge = decode_mmse(np.array([1e3, -1e3]), enc)
    assert np.all(np.isfinite(huge))
    # far out the decoder follows the linear branch (w - beta) alpha / (1 + alpha^2)
    assert huge[0] == pytest.approx((1e3 - 1.7) * 0.8 / 1.64, rel=1e-12)


def test_decode_denormalized():
    cfg = SourceChannelConfig(2.0, 1.0, 3.0)
    enc = PiecewiseLinearEncoder(0.7, 1.2)
    assert decode_denormalized(0.0, enc, cfg) == 0.0
    assert decode_denormalized(1.4, enc, cfg) == pytest.approx(2.0 * decode_mmse(1.4, enc))
    cfg1 = SourceChannelConfig(1.0, 1.0, 3.0)
    assert decode_denormalized(0.9, enc, cfg1) == pytest.approx(decode_mmse(0.9, enc))
    # w is scaled by sigma_z before the normalized decoder
    cfg2 = SourceChannelConfig(1.5, 0.5, 3.0)
    assert decode_denormalized(0.9, enc, cfg2) == pytest.approx(1.5 * decode_mmse(1.8, enc))


def test_classify():
    assert classify(0.01) == 1
    assert classify(-5.0) == 0
    assert classify(0.0) == 0
    np.testing.assert_array_equal(classify(np.array([-1.0, 0.0, 2.0])), [0, 0, 1])


def test_risk_values():
    assert risk_closed_form(PiecewiseLinearEncoder(1.0, 0.0)) == pytest.approx(0.25, abs=1e-15)
    assert risk_closed_form(PiecewiseLinearEncoder(0.0, 0.0)) == pytest.approx(0.5, abs=1e-15)
    for b in (0.5, 1.0, 2.5):
        assert risk_closed_form(PiecewiseLinearEncoder(0.0, b)) == pytest.approx(std_normal_tail(b), abs=1e-15)
    for a in (0.3, 1.7, 4.0):
        assert risk_closed_form(PiecewiseLinearEncoder(a, 0.0)) == pytest.approx(
            math.atan2(1.0, a) / math.pi, abs=1e-14
        )


def test_risk_against_mc():
    enc = PiecewiseLinearEncoder(0.8, 1.5)
    res = so.run_chain(so.SimConfig(so.BINARY, 1_000_000, 5, enc))
    p = risk_closed_form(enc)
    assert abs(res.error_rate.mean - p) <= 3 * math.sqrt(p * (1 - p) / 1_000_000)


def test_risk_against_mc_random_points():
    rng = np.random.default_rng(21)
    n = 200_000
    for i in range(10):
        enc = PiecewiseLinearEncoder(*rng.uniform(0, 2.5, 2))
        res = so.run_chain(so.SimConfig(so.BINARY, n, 100 + i, enc))
        p = risk_closed_form(enc)
        assert abs(res.error_rate.mean - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_power():
    assert power(PiecewiseLinearEncoder(1.0, 0.0)) == 1.0
    assert power(PiecewiseLinearEncoder(0.0, 3.0)) == 9.0
    assert power(PiecewiseLinearEncoder(1.0, 1.0)) == pytest.approx(2 + 2 * SQRT_2_OVER_PI)
    res = so.run_chain(so.SimConfig(so.BINARY, 1_000_000, 9, PiecewiseLinearEncoder(1.0, 1.0)))
    assert res.empirical_power.within(2 + 2 * SQRT_2_OVER_PI)


def test_mmse_linear():
    assert mmse_linear(0.0) == 1.0
    assert mmse_linear(1.0) == 0.5
    assert mmse_linear(math.sqrt(3)) == pytest.approx(0.25)


def test_mmse_tanh_bound():
    assert mmse_tanh_bound(0.0) == pytest.approx(1.0, abs=1e-14)
    assert mmse_tanh_bound(40.0) == pytest.approx((math.pi - 2) / math.pi, abs=1e-10)
    b = np.linspace(0, 6, 25)
    vals = [mmse_tanh_bound(x) for x in b]
    assert np.all(np.diff(vals) < 0)


def test_mmse_tanh_bound_sandwich():
    b = math.sqrt(3)
    n = 1_000_000
    opt = so.run_chain(so.SimConfig(so.BINARY, n, 3, PiecewiseLinearEncoder(0.0, b)))
    erf = so.run_chain(
        so.SimConfig(so.BINARY, n, 3, PiecewiseLinearEncoder(0.0, b),
                     decoder=lambda w: decode_erf_surrogate(w, b))
    )
    bound = mmse_tanh_bound(b)
    assert opt.mse.mean <= bound + 3 * opt.mse.std_error
    assert abs(erf.mse.mean - bound) <= 0.005


def test_mmse_consistency_mc():
    for a in (0.5, 1.5):
        res = so.run_chain(so.SimConfig(so.BINARY, 1_000_000, 4, PiecewiseLinearEncoder(a, 0.0)))
        assert res.mse.within(mmse_linear(a))


def test_pareto_range():
    lo, hi = pareto_range(3.0)
    assert hi == pytest.approx(1 / 6, abs=1e-15)
    assert lo == pytest.approx(0.041632, abs=1e-6)
    lo, hi = pareto_range(1e6)
    assert lo < 1e-100 and hi < 1e-3


def test_beta_from_alpha():
    assert beta_from_alpha(0.0, 3.0) == pytest.approx(math.sqrt(3))
    assert beta_from_alpha(math.sqrt(3), 3.0) == pytest.approx(0.0, abs=1e-15)
    b = beta_from_alpha(1.0, 3.0)
    assert b == pytest.approx(-SQRT_2_OVER_PI + math.sqrt(3 - (1 - 2 / math.pi)))
    # the closed form evaluates to 0.8259 and is pinned by the power check below
    assert b == pytest.approx(0.8259, abs=1e-4)
    assert power(PiecewiseLinearEncoder(1.0, b)) == pytest.approx(3.0, abs=1e-12)
    with pytest.raises(ValueError):
        beta_from_alpha(2.0, 3.0)


@pytest.mark.parametrize("snr", [1.0, 3.0, 7.56, 12.0])
def test_design_equation_monotone(snr):
    grid = np.linspace(0.01, 0.99 * math.sqrt(snr), 200)
    lhs = np.array([design_equation_lhs(a, snr) for a in grid])
    assert np.all(np.diff(lhs) > 0)


def test_design_equation_is_risk_on_the_power_boundary():
    snr = 3.0
    for a in (0.2, 0.9, 1.5):
        enc = PiecewiseLinearEncoder(a, beta_from_alpha(a, snr))
        assert design_equation_lhs(a, snr) == pytest.approx(risk_closed_form(enc), abs=1e-14)


@pytest.mark.parametrize("snr", [1.0, 3.0, 12.0])
def test_design_round_trip(snr):
    lo, hi = pareto_range(snr)
    for pe in np.linspace(lo, hi, 22)[1:-1]:
        sol = design(cfg_for_snr(snr), DesignTarget(float(pe)))
        assert risk_closed_form(sol.encoder) == pytest.approx(pe, abs=1e-9)
        assert power(sol.encoder) == pytest.approx(snr, abs=1e-9)
        assert sol.corner is None and not sol.degenerate


def test_design_endpoints():
    snr = 3.0
    lo, hi = pareto_range(snr)
    top = design(cfg_for_snr(snr), DesignTarget(hi))
    assert top.alpha_star == pytest.approx(math.sqrt(3), abs=1e-6)
    assert top.beta_star == pytest.approx(0.0, abs=1e-6)
    assert top.degenerate and top.corner == "reconstruction"
    bottom = design(cfg_for_snr(snr), DesignTarget(lo))
    assert bottom.alpha_star == pytest.approx(0.0, abs=1e-6)
    assert bottom.beta_star == pytest.approx(math.sqrt(3), abs=1e-6)
    assert bottom.corner == "classification"


def test_design_out_of_range():
    with pytest.raises(PeBelowRange):
        design(cfg_for_snr(3.0), DesignTarget(0.001))
    with pytest.warns(PeAboveRange):
        sol = design(cfg_for_snr(3.0), DesignTarget(0.3))
    assert sol.corner == "reconstruction"
    # exactly at the endpoint there is no warning
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        design(cfg_for_snr(3.0), DesignTarget(1 / 6))


def test_design_table_point_mse():
    cfg = SourceChannelConfig(1.0, 0.63, 3.0)
    sol = design(cfg, DesignTarget(0.038))
    res = so.run_chain(so.SimConfig(so.BINARY, 1_000_000, 2024, sol.encoder))
    assert abs(res.mse.mean - 0.15) <= 0.01


@given(st.floats(0.05, 20.0), st.floats(0.0, 1.0))
@settings(max_examples=60, deadline=None)
def test_design_property(snr, frac):
    lo, hi = pareto_range(snr)
    pe = lo + frac * (hi - lo)
    if not (0 < pe < 0.5) or not (lo + 1e-7 < pe < hi - 1e-7):
        return
    sol = design(cfg_for_snr(snr), DesignTarget(pe))
    assert 0 <= sol.alpha_star <= math.sqrt(snr) + 1e-12
    assert sol.beta_star >= 0
    assert abs(sol.achieved_risk - pe) <= 1e-9
