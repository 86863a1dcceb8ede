import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid
from scipy.special import ndtr

from isdfplc import analytic
from isdfplc.analytic import (
    QuadratureError,
    average_ber,
    derive,
    instantaneous_ber,
    outage_probability,
    partial_ber_closed,
    partial_ber_quadrature,
    relay_usage,
)
from isdfplc.model import LinkModel, NoiseModel, SnrParams, SystemConfig, Thresholds, snr_cdf, snr_params
from isdfplc.simulator import estimate_ber_semianalytic

NOISE = NoiseModel(0.1, 10.0)


def _closed(params, y1, y2, noise=NOISE):
    return partial_ber_closed(params, y1, y2, noise).value


def _quad(params, y1, y2, noise=NOISE):
    return partial_ber_quadrature(params, y1, y2, noise).value


def test_instantaneous_ber_examples():
    assert instantaneous_ber(0.0, NOISE) == pytest.approx(0.5)
    assert instantaneous_ber(8.0, NoiseModel(0.0, 3.0)) == pytest.approx(0.02275, abs=1e-5)
    expected = 0.9 * ndtr(-math.sqrt(10)) + 0.1 * ndtr(-math.sqrt(10 / 11))
    assert instantaneous_ber(10.0, NOISE) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        instantaneous_ber(-1.0, NOISE)


def test_outage_vanishes_with_tiny_thresholds():
    sys = derive(SystemConfig(p_t_db=200.0, r_th=1e-3))
    assert outage_probability(sys) < 1e-12
    assert relay_usage(sys) < 1e-12


def test_relay_usage_bounded_by_direct_failure():
    for pt in range(20, 81, 5):
        sys = derive(SystemConfig(p_t_db=pt, r_th=3.0))
        assert 0 <= relay_usage(sys) <= sys.fail_prob("sd")
        assert 0 <= outage_probability(sys) <= sys.fail_prob("sd")


def test_outage_decreases_with_power():
    values = [outage_probability(derive(SystemConfig(p_t_db=pt, r_th=3.0))) for pt in range(20, 81)]
    assert np.all(np.diff(values) < 0)


@pytest.mark.parametrize("integrator", ["closed", "quadrature"])
def test_partial_additivity(integrator):
    part = _closed if integrator == "closed" else _quad
    params = SnrParams(4.0, 1.4)
    whole = part(params, 0.0, math.inf)
    split = part(params, 0.0, 12.0) + part(params, 12.0, math.inf)
    tol = 1e-12 if integrator == "closed" else 1e-10
    assert abs(whole - split) <= tol


def test_partial_empty_interval():
    params = SnrParams(3.0, 1.0)
    assert _closed(params, 5.0, 5.0) == 0.0
    assert _quad(params, 5.0, 5.0) == 0.0
    with pytest.raises(ValueError):
        _closed(params, 6.0, 5.0)
    with pytest.raises(ValueError):
        _quad(params, -1.0, 5.0)


def test_closed_form_matches_quadrature_near_median():
    # fit error is smallest where the SNR mass sits near t = 0
    params = SnrParams(0.0, 1.0)
    assert _closed(params, 0.0, math.inf) == pytest.approx(_quad(params, 0.0, math.inf), rel=0.01)


def test_point_mass_limit():
    g = 7.3
    expected = instantaneous_ber(g, NOISE)
    assert _quad(SnrParams(math.log(g), 1e-6), 0.0, math.inf) == pytest.approx(expected, abs=1e-6)
    assert _quad(SnrParams(math.log(g), 0.0), 0.0, math.inf) == pytest.approx(expected, abs=1e-12)
    assert _quad(SnrParams(math.log(g), 0.0), 0.0, 1.0) == 0.0


@given(mu=st.floats(-2, 14), sigma=st.floats(0.2, 3), a=st.floats(0.01, 100), b=st.floats(0.01, 100))
@settings(max_examples=40, deadline=None)
def test_partial_ber_bound(mu, sigma, a, b):
    y1, y2 = sorted((a, b))
    params = SnrParams(mu, sigma)
    mass = snr_cdf(y2, params) - snr_cdf(y1, params)
    assert 0.0 <= _quad(params, y1, y2) <= 0.5 * mass + 1e-15


def test_quadrature_matches_sampling():
    params = SnrParams(2.0, 1.5)
    y1, y2 = 3.0, 40.0
    rng = np.random.default_rng(21)
    n = 1_000_000
    gamma = np.exp(params.mu + params.sigma * rng.standard_normal(n))
    x = np.where((gamma > y1) & (gamma <= y2), instantaneous_ber(gamma, NOISE), 0.0)
    se = x.std(ddof=1) / math.sqrt(n)
    assert abs(x.mean() - _quad(params, y1, y2)) <= 3 * se


def test_quadrature_deep_tail_keeps_digits():
    # at mu=12 the integral is dominated by deep fades far below the median
    params = SnrParams(12.0, 0.7)
    v = _quad(params, 0.0, math.inf)
    assert 0 < v < 1e-20
    assert _quad(params, 0.0, 1e4) + _quad(params, 1e4, math.inf) == pytest.approx(v, rel=1e-8)


def test_quadrature_error_type():
    assert issubclass(QuadratureError, RuntimeError)


def test_ber_without_relay_reduces_to_direct_link():
    noise = NoiseModel(0.0, 10.0)
    sys = derive(SystemConfig(p_t_db=30.0, noise=noise))
    # Gamma_SD -> 0: the direct link always passes and the relay is idle
    sys = replace(sys, thresholds=Thresholds(0.0, 0.0))
    direct = _quad(sys.snr["sd"], 0.0, math.inf, noise)
    g = np.linspace(-12, 12, 200_001)
    mu, s = sys.snr["sd"].mu, sys.snr["sd"].sigma
    integrand = ndtr(-np.sqrt(np.exp(mu + s * g) / 2)) * np.exp(-g ** 2 / 2) / math.sqrt(2 * math.pi)
    assert direct == pytest.approx(trapezoid(integrand, g), rel=1e-6)
    for mode in ("coherent", "paper_literal"):
        assert average_ber(sys, mode=mode, integrator="quadrature") == pytest.approx(direct, rel=1e-6)


def test_modes_and_integrators_are_named():
    sys = derive(SystemConfig(p_t_db=50.0))
    with pytest.raises(ValueError):
        average_ber(sys, mode="other")
    with pytest.raises(ValueError):
        average_ber(sys, integrator="other")


def test_evaluate_returns_all_metrics():
    out = analytic.evaluate(SystemConfig(p_t_db=50.0, r_th=3.0))
    assert set(out) == {"outage", "relay_usage", "ber_literal", "ber_coherent"}
    assert all(0 <= v <= 0.5 for k, v in out.items() if k.startswith("ber"))


def test_coherent_bound_by_half():
    for pt in (20, 40, 60, 80):
        sys = derive(SystemConfig(p_t_db=pt, r_th=3.0))
        assert 0 <= average_ber(sys, mode="coherent", integrator="quadrature") <= 0.5


def test_coherent_quadrature_matches_simulation():
    sys = derive(SystemConfig(p_t_db=45.0, r_th=3.0, p_l_db_per_km=60.0))
    est = estimate_ber_semianalytic(sys, 200_000, seed=3)
    assert est.agrees(average_ber(sys, mode="coherent", integrator="quadrature"))


def test_coherent_closed_form_within_ten_percent_of_simulation():
    # fig3 preset parameters wherever the BER is at least 1e-5.  Fails where the
    # SNR mass sits far above the fitted region and the mixture tails
    # dominate (P_T around 56-60 dB at P_L = 60); see the decisions ledger.
    worst = 0.0
    for r_th in (1.0, 3.0):
        for pt in range(20, 81, 4):
            sys = derive(SystemConfig(p_t_db=pt, r_th=r_th, d_sd_km=0.4, p_l_db_per_km=60.0))
            closed = average_ber(sys, mode="coherent")
            if closed < 1e-5:
                continue
            est = estimate_ber_semianalytic(sys, 1_000_000, seed=12345)
            worst = max(worst, abs(closed - est.mean) / est.mean)
    print(f"worst relative gap of closed-form coherent BER vs simulation: {worst:.3f}")
    assert worst <= 0.10


def test_snr_params_feed_thresholds():
    cfg = SystemConfig(p_t_db=48.0, r_th=3.0)
    sys = derive(cfg)
    assert sys.snr["sd"] == snr_params(cfg.link("sd"), cfg.noise)
    assert sys.links["sr"] == LinkModel(0.2, 3.0, cfg.link("sr").p_r)
    assert sys.fail_prob("sr") + sys.pass_prob("sr") == pytest.approx(1.0)
