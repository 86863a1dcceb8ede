import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from isdfplc.model import (
    LinkModel,
    NoiseModel,
    SnrParams,
    SystemConfig,
    capacity,
    channel_gain,
    db_linear_convert,
    db_to_linear,
    linear_to_db,
    noise_average_power,
    noise_cdf,
    received_power,
    sample_channel_gain,
    sample_noise,
    snr_cdf,
    snr_params,
    snr_sf,
    thresholds,
)

N_DRAWS = 1_000_000


def test_db_examples():
    assert db_to_linear(0.0) == 1.0
    assert db_to_linear(33.0) == pytest.approx(1995.26, rel=1e-5)
    assert db_linear_convert(33.0) == pytest.approx(1995.26, rel=1e-5)
    assert db_linear_convert(1995.26, "to_db") == pytest.approx(33.0, abs=1e-5)


def test_db_round_trip():
    x = np.arange(-50, 81, dtype=float)
    np.testing.assert_allclose(linear_to_db(db_to_linear(x)), x, atol=1e-10)


def test_negative_linear_rejected():
    with pytest.raises(ValueError):
        linear_to_db(-1.0)
    with pytest.raises(ValueError):
        db_linear_convert(1.0, "sideways")


@pytest.mark.parametrize("p_tx, d, p_l, expected", [
    (45.0, 0.2, 60.0, 1995.26),
    (45.0, 0.0, 60.0, 10 ** 4.5),
    (65.0, 0.8, 60.0, 50.12),
])
def test_received_power(p_tx, d, p_l, expected):
    assert received_power(p_tx, d, p_l) == pytest.approx(expected, rel=1e-4)


def test_received_power_rejects_negative_distance():
    with pytest.raises(ValueError):
        received_power(45.0, -0.1, 60.0)


@pytest.mark.parametrize("sw2, p, eta, expected", [
    (1.0, 0.1, 10.0, 2.0),
    (1.0, 0.0, 10.0, 1.0),
    (2.0, 0.5, 4.0, 6.0),
])
def test_noise_average_power(sw2, p, eta, expected):
    assert noise_average_power(NoiseModel(p, eta, sw2)) == pytest.approx(expected)


def test_unit_power_noise():
    n = NoiseModel.unit_power(0.1, 10.0)
    assert n.average_power == pytest.approx(1.0)
    assert n.sigma_w2 == pytest.approx(0.5)


def test_noise_validation():
    with pytest.raises(ValueError):
        NoiseModel(p=1.5)
    with pytest.raises(ValueError):
        NoiseModel(sigma_w2=0.0)


def test_snr_params_example():
    link = LinkModel(d_km=0.2, sigma_h_db=3.0, p_r=1995.26)
    assert link.sigma_h == pytest.approx(0.6908, abs=1e-4)
    assert link.mu_h == pytest.approx(-0.4772, abs=1e-4)
    params = snr_params(link, NoiseModel(0.1, 10.0, 1.0))
    assert params.sigma == pytest.approx(1.3816, abs=1e-4)
    assert params.mu == pytest.approx(5.9510, abs=1e-4)


def test_snr_params_zero_spread():
    params = snr_params(LinkModel(0.2, 0.0, 10.0), NoiseModel())
    assert params.sigma == 0.0
    assert params.mu == pytest.approx(math.log(10.0 / 2.0))


def test_snr_cdf_median_and_limits():
    params = SnrParams(mu=1.3, sigma=0.9)
    assert snr_cdf(math.exp(1.3), params) == pytest.approx(0.5)
    assert snr_cdf(0.0, params) == 0.0
    assert snr_cdf(1e-300, params) == pytest.approx(0.0, abs=1e-12)
    assert snr_cdf(2.0, params) + snr_sf(2.0, params) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        snr_cdf(-1.0, params)


def test_snr_cdf_matches_samples():
    link = LinkModel(0.2, 3.0, 1995.26)
    noise = NoiseModel(0.1, 10.0, 1.0)
    params = snr_params(link, noise)
    rng = np.random.default_rng(11)
    gamma = link.p_r * sample_channel_gain(rng, link, N_DRAWS) ** 2 / noise.average_power
    for w in (50.0, 400.0, 2000.0):
        f = snr_cdf(w, params)
        se = math.sqrt(f * (1 - f) / N_DRAWS)
        assert abs(np.mean(gamma < w) - f) <= 3 * se


def test_capacity_examples():
    n = NoiseModel(0.1, 10.0)
    assert capacity(0.0, n) == 0.0
    assert n.alphas == pytest.approx((1.0, 1.0 / 11.0))
    assert capacity(2.0, NoiseModel(0.0, 7.0)) == pytest.approx(1.0)


def test_capacity_concave_increasing():
    n = NoiseModel(0.1, 10.0)
    g = np.linspace(0.0, 100.0, 401)
    c = capacity(g, n)
    assert np.all(np.diff(c) > 0)
    assert np.all(np.diff(c, 2) < 0)


def test_thresholds_example():
    th = thresholds(1.0, NoiseModel(0.1, 10.0))
    assert th.gamma_sd == pytest.approx(2 * 11 ** 0.1, rel=1e-12)
    assert th.gamma_sd == pytest.approx(2.5420, abs=1e-4)
    assert th.gamma_sr == pytest.approx(5.0840, abs=1e-4)
    assert th.gamma_rd == th.gamma_sr


def test_thresholds_without_impulses():
    for r in (0.5, 1.0, 3.0):
        assert thresholds(r, NoiseModel(0.0, 10.0)).gamma_sd == pytest.approx(2 ** (r + 1))


@given(r=st.floats(0.1, 5.0), p=st.floats(0.0, 1.0), eta=st.floats(0.0, 100.0))
@settings(max_examples=60, deadline=None)
def test_threshold_ratio(r, p, eta):
    th = thresholds(r, NoiseModel(p, eta))
    assert th.gamma_sr_rd / th.gamma_sd == pytest.approx(2 ** r, rel=1e-12)


def test_threshold_meets_rate():
    # The closed-form threshold drops the 1 inside each log, so C(Gamma_SD)
    # overshoots R and the overshoot shrinks as R grows.  Measured relative
    # overshoot over R in [1, 3]: 0.672 at R=1, 0.200 at R=2, 0.076 at R=3.
    n = NoiseModel(0.1, 10.0)
    r = np.linspace(1.0, 3.0, 81)
    rel = np.array([(capacity(thresholds(x, n).gamma_sd, n) - x) / x for x in r])
    assert np.all(rel > 0)
    assert np.all(np.diff(rel) < 0)
    assert rel.max() == pytest.approx(0.6721, abs=1e-4)
    assert rel[r >= 2.5].max() <= 0.15


@pytest.mark.parametrize("ell", [1, 2, 3, 4])
def test_gain_moments(ell):
    link = LinkModel(0.4, 3.0)
    h = sample_channel_gain(np.random.default_rng(100 + ell), link, N_DRAWS)
    x = h ** ell
    expected = math.exp(ell * link.mu_h + ell ** 2 * link.sigma_h ** 2 / 2)
    assert abs(x.mean() - expected) <= 3 * x.std(ddof=1) / math.sqrt(N_DRAWS)


def test_gain_zero_spread():
    link = LinkModel(0.4, 0.0)
    h = sample_channel_gain(np.random.default_rng(0), link, 100)
    assert np.all(h == 1.0)
    assert channel_gain(link, 3.0) == 1.0


def test_noise_variance():
    n = NoiseModel(0.1, 10.0, 1.0)
    x = sample_noise(np.random.default_rng(5), n, N_DRAWS)
    x2 = x ** 2
    assert abs(x2.mean() - 2.0) <= 3 * x2.std(ddof=1) / math.sqrt(N_DRAWS)


def test_noise_without_impulses_is_gaussian():
    n = NoiseModel(0.0, 10.0, 2.0)
    x = sample_noise(np.random.default_rng(6), n, 200_000)
    assert stats.kstest(x, "norm", args=(0.0, math.sqrt(2.0))).pvalue > 0.01


def test_noise_mixture_goodness_of_fit():
    n = NoiseModel(0.1, 10.0, 1.0)
    x = sample_noise(np.random.default_rng(7), n, 200_000)
    edges = np.concatenate(([-np.inf], np.linspace(-6, 6, 41), [np.inf]))
    observed, _ = np.histogram(x, edges)
    expected = np.diff(noise_cdf(edges, n)) * x.size
    assert stats.chisquare(observed, expected).pvalue > 0.01


def test_system_geometry():
    cfg = SystemConfig(d_sd_km=0.8, d_f=0.25)
    assert cfg.d_sr_km == pytest.approx(0.2)
    assert cfg.d_rd_km == pytest.approx(0.6)
    assert cfg.link("sr").d_km == pytest.approx(0.2)
    with pytest.raises(ValueError):
        SystemConfig(d_f=1.2)


def test_half_split_costs_3db():
    full = SystemConfig(power_split="full")
    half = SystemConfig(power_split="half")
    assert full.node_power_db - half.node_power_db == pytest.approx(10 * math.log10(2))


@given(x=st.floats(-100, 100))
def test_db_inverse_property(x):
    assert linear_to_db(db_to_linear(x)) == pytest.approx(x, abs=1e-9)


@given(w=st.floats(1e-6, 1e6), mu=st.floats(-5, 15), sigma=st.floats(0.01, 3))
def test_cdf_in_unit_interval(w, mu, sigma):
    f = snr_cdf(w, SnrParams(mu, sigma))
    assert 0.0 <= f <= 1.0
