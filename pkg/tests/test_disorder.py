import math

import numpy as np
import pytest

from dtasep import rng, stats
from dtasep.disorder import (RateLaw, critical_gap, critical_gap_quadrature,
                             gap_to_velocity, sample_rates,
                             scan_event_probability, slow_scan,
                             velocity_to_gap)
from dtasep.errors import HypothesisError


# ---------------------------------------------------------------- rate law

def test_pure_power_law_has_no_atom(bench_law):
    assert bench_law.top_mass == 0.0
    assert bench_law.window_mass == pytest.approx(1.0)


def test_atom_mass_from_normalization():
    law = RateLaw(c=0.5, nu=1.0, kappa=1.0, eps=0.5)
    assert law.top_mass == pytest.approx(0.75)


def test_overweight_window_rejected():
    with pytest.raises(ValueError, match="unit mass"):
        RateLaw(c=0.5, nu=1.0, kappa=8.0, eps=0.5)


@pytest.mark.parametrize("kwargs", [
    dict(c=0.0, nu=1.0, kappa=1.0, eps=0.5),
    dict(c=1.0, nu=1.0, kappa=1.0, eps=0.1),
    dict(c=0.5, nu=-1.0, kappa=1.0, eps=0.5),
    dict(c=0.5, nu=1.0, kappa=0.0, eps=0.5),
    dict(c=0.5, nu=1.0, kappa=1.0, eps=0.6),
])
def test_bad_parameters_rejected(kwargs):
    with pytest.raises(ValueError):
        RateLaw(**kwargs)


def test_cdf_shape():
    law = RateLaw(c=0.5, nu=1.0, kappa=1.0, eps=0.25)
    ps = np.linspace(0.0, 1.0, 2001)
    f = law.cdf(ps)
    assert np.all(np.diff(f) >= 0)
    assert law.cdf(law.c) == 0.0
    assert law.cdf(1.0) == 1.0
    assert law.cdf(0.4999) == 0.0
    # atop the window the cdf is flat at the window mass until the atom at 1
    assert law.cdf(0.9) == pytest.approx(law.window_mass)


def test_cdf_tail_constant_exact():
    # on the window the cdf is exactly kappa * (p - c)^(nu + 1)
    law = RateLaw(c=0.5, nu=0.5, kappa=2.0, eps=0.2)
    for dp in (1e-9, 1e-6, 1e-3, 0.2):
        assert law.cdf(law.c + dp) / dp ** (law.nu + 1.0) == pytest.approx(2.0)


def test_quantile_inverts_cdf():
    law = RateLaw(c=0.5, nu=1.0, kappa=1.0, eps=0.25)
    qs = np.linspace(1e-6, law.window_mass * (1 - 1e-9), 500)
    ps = law.quantile(qs)
    assert np.allclose(law.cdf(ps), qs, atol=1e-12)
    assert law.quantile(law.window_mass + 1e-9) == 1.0
    # a window reaching the right endpoint merges its top into the atom
    full = RateLaw(c=0.5, nu=1.0, kappa=1.0, eps=0.5)
    assert full.quantile(full.window_mass) == 1.0
    assert full.cdf(1.0) == 1.0


# ------------------------------------------------------------- sampling

def test_sampling_deterministic(bench_law):
    f1 = sample_rates(bench_law, -10, 10, seed=3)
    f2 = sample_rates(bench_law, -10, 10, seed=3)
    assert np.array_equal(f1.rates, f2.rates)
    assert not np.array_equal(f1.rates, sample_rates(bench_law, -10, 10, seed=4).rates)


def test_window_regeneration_bit_identical(bench_law):
    full = sample_rates(bench_law, -100, 100, seed=11)
    sub = full.extended(-7, 23)
    assert np.array_equal(sub.rates, full.rate_window(-7, 23))


def test_rates_within_support(bench_law):
    f = sample_rates(bench_law, 0, 100_000, seed=5)
    assert f.rates.min() > bench_law.c
    assert f.rates.max() <= 1.0


def test_atom_frequency_matches_mass():
    law = RateLaw(c=0.5, nu=1.0, kappa=1.0, eps=0.5)
    n = 100_000
    f = sample_rates(law, 0, n - 1, seed=21)
    frac = float(np.mean(f.rates == 1.0))
    se = math.sqrt(0.75 * 0.25 / n)
    assert abs(frac - 0.75) <= 3 * se


def test_empirical_cdf_within_dkw_band(bench_law):
    n = 1_000_000
    f = sample_rates(bench_law, 0, n - 1, seed=8)
    dist = stats.empirical_cdf_distance(f.rates, bench_law.cdf)
    assert dist <= stats.dkw_band(n, level=1e-3)


def test_field_csv_export(tmp_path, bench_law):
    f = sample_rates(bench_law, -2, 2, seed=1)
    path = tmp_path / "field.csv"
    f.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,rate"
    assert len(lines) == 6
    assert lines[1].startswith("-2,")


# ------------------------------------------------------- analytic constants

def test_derived_constants(bench_law):
    d = bench_law.derived()
    assert d.alpha == pytest.approx(1.0 / 3.0)
    assert d.one_minus_alpha == pytest.approx(2.0 / 3.0)
    assert d.a_nu == pytest.approx(27.0 / 4.0)
    assert d.alpha + d.one_minus_alpha == 1.0


def test_critical_gap_closed_form(bench_law):
    assert critical_gap(bench_law) == pytest.approx(2.0, abs=1e-14)
    assert bench_law.derived().rho_star == pytest.approx(1.0 / 3.0)


def test_critical_gap_vs_quadrature():
    for law in (RateLaw(c=0.5, nu=1.0, kappa=4.0, eps=0.5),
                RateLaw(c=0.3, nu=0.7, kappa=1.5, eps=0.4),
                RateLaw(c=0.6, nu=2.5, kappa=3.0, eps=0.2)):
        exact = critical_gap(law)
        quad = critical_gap_quadrature(law)
        assert abs(exact - quad) / exact < 1e-8


def test_critical_gap_infinite_at_nonpositive_nu():
    assert math.isinf(critical_gap(RateLaw(c=0.5, nu=0.0, kappa=1.0, eps=0.5)))
    assert math.isinf(critical_gap(RateLaw(c=0.5, nu=-0.5, kappa=1.0, eps=0.25)))
    d = RateLaw(c=0.5, nu=0.0, kappa=1.0, eps=0.5).derived()
    assert d.rho_star == 0.0


def test_critical_gap_window_vanishes_with_eps():
    # with kappa fixed, a shrinking window pushes all mass to the atom and
    # the critical gap tends to the atom term c/(1-c)
    target = 0.5 / (1.0 - 0.5)
    vals = [critical_gap(RateLaw(c=0.5, nu=0.5, kappa=1.0, eps=e))
            for e in (0.4, 0.1, 0.01, 0.001)]
    atoms = [RateLaw(c=0.5, nu=0.5, kappa=1.0, eps=e).top_mass * target
             for e in (0.4, 0.1, 0.01, 0.001)]
    assert abs(vals[-1] - target) < 0.05
    for v, a in zip(vals, atoms):
        assert v >= a


# ------------------------------------------------------- velocity <-> gap

def test_velocity_to_gap_endpoints(bench_law):
    assert velocity_to_gap(bench_law, 0.0) == 0.0
    assert velocity_to_gap(bench_law, bench_law.c) == pytest.approx(2.0)


def test_velocity_to_gap_against_riemann_oracle(bench_law):
    # midpoint Riemann sum on the substituted integrand q -> a k (nu+1) q^nu / (q+c-a)
    a = 0.25
    n = 4_000_000
    qs = (np.arange(n) + 0.5) * (bench_law.eps / n)
    integrand = a * bench_law.kappa * 2.0 * qs / (qs + bench_law.c - a)
    oracle = float(np.sum(integrand) * bench_law.eps / n)
    assert abs(velocity_to_gap(bench_law, a) - oracle) < 1e-8


def test_velocity_to_gap_monotone(bench_law):
    grid = np.linspace(0.0, bench_law.c, 21)
    vals = [velocity_to_gap(bench_law, a) for a in grid]
    assert all(x < y for x, y in zip(vals, vals[1:]))


def test_velocity_to_gap_domain(bench_law):
    with pytest.raises(HypothesisError):
        velocity_to_gap(bench_law, -0.1)
    with pytest.raises(HypothesisError):
        velocity_to_gap(bench_law, bench_law.c + 0.01)


def test_gap_to_velocity_roundtrip(bench_law):
    assert gap_to_velocity(bench_law, 0.0) == 0.0
    a = gap_to_velocity(bench_law, 1.0)
    assert abs(velocity_to_gap(bench_law, a) - 1.0) <= 1e-8


def test_gap_to_velocity_monotone_to_c(bench_law):
    us = [0.25, 0.5, 1.0, 1.5, 1.9, 1.99]
    avs = [gap_to_velocity(bench_law, u) for u in us]
    assert all(x < y for x, y in zip(avs, avs[1:]))
    assert avs[-1] < bench_law.c
    assert bench_law.c - avs[-1] < 0.01


def test_gap_to_velocity_domain(bench_law):
    with pytest.raises(HypothesisError):
        gap_to_velocity(bench_law, 2.0)  # u = u* excluded
    with pytest.raises(HypothesisError):
        gap_to_velocity(RateLaw(c=0.5, nu=0.0, kappa=1.0, eps=0.5), 1.0)


def test_fastened_velocity_integral(bench_law):
    # floored rates admit velocities above c as long as a < floor
    n_val = 1e4
    alpha = bench_law.derived().alpha
    r = bench_law.c + 1.0 * n_val**-alpha
    a = bench_law.c + 0.5 * n_val**-alpha
    u_hat = velocity_to_gap(bench_law, a, fastening=r)
    assert math.isfinite(u_hat) and u_hat > 0
    # mean gap approaches the critical gap from above as N grows
    vals = []
    for n_val in (1e2, 1e4, 1e6):
        r = bench_law.c + 1.0 * n_val**-alpha
        a = bench_law.c + 0.5 * n_val**-alpha
        vals.append(velocity_to_gap(bench_law, a, fastening=r))
    assert vals[0] > vals[1] > vals[2] > critical_gap(bench_law)


def test_fastening_below_support_is_plain_integral(bench_law):
    assert velocity_to_gap(bench_law, 0.25, fastening=0.1) == pytest.approx(
        velocity_to_gap(bench_law, 0.25))


# ------------------------------------------------------------- slow scan

def test_slow_scan_examples(bench_law):
    from dtasep.disorder import DisorderField
    field = DisorderField(law=bench_law, seed=0, first_label=0,
                          rates=np.array([0.9, 0.7, 0.55]))
    assert slow_scan(field, 0.6357) == 2
    assert slow_scan(field, 0.5) is None
    assert slow_scan(field, 0.95) == 0


def test_slow_scan_backward(bench_law):
    from dtasep.disorder import DisorderField
    field = DisorderField(law=bench_law, seed=0, first_label=-2,
                          rates=np.array([0.55, 0.9, 0.8]))
    assert slow_scan(field, 0.6, direction=-1) == 2


def test_slow_scan_characterization(bench_law):
    field = sample_rates(bench_law, 0, 199, seed=33)
    thr = 0.55
    j = slow_scan(field, thr)
    for m in range(0, 40):
        beyond = j is None or j > m
        assert beyond == (field.rates[:m + 1].min() > thr)


# --------------------------------------------------- scan event probability

def test_scan_event_exact_formula_and_limit():
    law = RateLaw(c=0.5, nu=1.0, kappa=1.0, eps=0.5)
    est = scan_event_probability(law, 1.0, 1.0, 1e8, 1, seed=0)
    assert abs(est.exact_finite_n - math.exp(-1.0)) < 1e-3
    assert est.limit == pytest.approx(math.exp(-1.0))


def test_scan_event_trivial_cases(bench_law):
    est = scan_event_probability(bench_law, 1e-9, 1.0, 1e6, 100, seed=0)
    assert est.empirical == 1.0 and est.exact_finite_n == 1.0
    est = scan_event_probability(bench_law, 1.0, 0.0, 1e6, 100, seed=0)
    assert est.empirical == 1.0 and est.exact_finite_n == 1.0


def test_scan_event_empirical_matches_exact():
    law = RateLaw(c=0.5, nu=1.0, kappa=1.0, eps=0.5)
    est = scan_event_probability(law, 1.0, 1.0, 1e6, 20_000, seed=12)
    assert abs(est.empirical - est.exact_finite_n) <= 4.0 * est.std_error


def test_scan_event_consistent_with_field_scan(bench_law):
    # the Monte Carlo event must equal a literal scan of sampled rates
    q1, q2, N = 0.03, 1.0, 1e6
    d = bench_law.derived()
    thr = bench_law.c + q2 * N**-d.alpha
    m = int(q1 * N ** (1 - d.alpha))
    agree = 0
    for r in range(200):
        rkey = rng.derive(77, rng.STREAM_REPLICA, r)
        field = sample_rates(bench_law, 0, m - 1, seed=rkey)
        agree += slow_scan(field, thr) is None
    est = scan_event_probability(bench_law, q1, q2, N, 200, seed=77)
    assert est.empirical == pytest.approx(agree / 200)
