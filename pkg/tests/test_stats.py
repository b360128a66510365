import math

import numpy as np
import pytest

from dtasep import stats


def test_wilson_interval_basics():
    lo, hi = stats.wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert 0.4 < lo < 0.45 and 0.55 < hi < 0.6
    lo0, hi0 = stats.wilson_interval(0, 100)
    assert lo0 == 0.0 and hi0 > 0.0
    lo1, hi1 = stats.wilson_interval(100, 100)
    assert hi1 == 1.0 and lo1 < 1.0


def test_binomial_se():
    assert stats.binomial_se(0.5, 100) == pytest.approx(0.05)
    assert stats.binomial_se(0.0, 100) > 0.0


def test_loglog_fit_exact_power():
    x = np.array([10.0, 100.0, 1000.0, 10000.0])
    y = 3.0 * x**0.66
    slope, intercept, se = stats.loglog_fit(x, y)
    assert slope == pytest.approx(0.66, abs=1e-12)
    assert intercept == pytest.approx(math.log(3.0), abs=1e-10)
    assert se == pytest.approx(0.0, abs=1e-12)


def test_loglog_fit_noise_se():
    rng = np.random.default_rng(1)
    x = np.array([1e2, 1e3, 1e4, 1e5, 1e6])
    y = x**0.5 * np.exp(rng.normal(0, 0.05, size=5))
    slope, _, se = stats.loglog_fit(x, y)
    assert abs(slope - 0.5) < 0.1
    assert se > 0.0


def test_chi_square_pools_small_cells():
    probs = np.array([0.5, 0.3, 0.15, 0.04, 0.009, 0.001])
    rng = np.random.default_rng(2)
    counts = rng.multinomial(1000, probs)
    stat, dof, p = stats.chi_square_gof(counts, probs)
    assert dof <= 4  # tail cells were pooled
    assert 0.0 <= p <= 1.0


def test_chi_square_detects_wrong_model():
    probs = np.array([0.25, 0.25, 0.25, 0.25])
    counts = np.array([400, 100, 250, 250])
    _, _, p = stats.chi_square_gof(counts, probs)
    assert p < 1e-6


def test_dkw_band_value():
    assert stats.dkw_band(1_000_000, 1e-3) == pytest.approx(
        math.sqrt(math.log(2000.0) / 2e6))


def test_empirical_cdf_distance_uniform():
    rng = np.random.default_rng(3)
    xs = rng.random(100_000)
    d = stats.empirical_cdf_distance(xs, lambda v: np.clip(v, 0, 1))
    assert d < stats.dkw_band(100_000, 1e-3)


def test_ks_exponential():
    rng = np.random.default_rng(4)
    xs = rng.exponential(2.0, size=5000)
    assert stats.ks_exponential(xs, 0.5) > 1e-3
    assert stats.ks_exponential(xs, 5.0) < 1e-6
