"""Limit-law machinery: spectral tails, cumulants, Edgeworth p-values."""
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from geitest.asymptotics import (XiDistribution, bias_term,
                                 combined_statistics, edgeworth_tail_probability,
                                 family_limit_cumulants, null_mean,
                                 xi_cumulants, xi_distribution,
                                 xi_tail_probability)
from geitest.core import DataError, PerTermStatistic, build_subset_lag_family

# zeta(2r) = pi^(2r) / ZETA_DENOM[r] for r = 1..6 (Bernoulli numbers),
# an oracle independent of scipy.special.zeta
ZETA_DENOM = {1: Fraction(6), 2: Fraction(90), 3: Fraction(945),
              4: Fraction(9450), 5: Fraction(93555),
              6: Fraction(638512875, 691)}


def test_truncated_spectrum_preserves_the_mean_exactly():
    # the lumped tail eigenvalue is chosen so sum(lam * mult) = 6^-d
    for d in (2, 3):
        for trunc in (10, 30, None):
            dist = XiDistribution(d, trunc)
            assert float(dist.eigenvalues @ dist.multiplicities) == \
                pytest.approx(6.0 ** (-d), abs=1e-17)
            assert dist.mean == 6.0 ** (-d)
    with pytest.raises(DataError):
        XiDistribution(4)


def test_cumulants_match_bernoulli_number_oracle():
    for d in (2, 3):
        kap = xi_cumulants(d)
        for r in range(1, 7):
            fact = int(np.prod(range(1, r), dtype=object)) if r > 1 else 1
            exact = 2 ** (r - 1) * fact / ZETA_DENOM[r] ** d
            assert kap[r - 1] == pytest.approx(float(exact), rel=1e-13)
    # spot values: E[xi_2] = 1/36, Var[xi_2] = 2/8100
    assert xi_cumulants(2)[0] == pytest.approx(1 / 36, rel=1e-15)
    assert xi_cumulants(2)[1] == pytest.approx(2 / 8100, rel=1e-15)


def test_bias_term_against_exact_rational_arithmetic():
    def oracle(n, d):
        return (Fraction(n - 1, 6 * n) ** d - Fraction(1, 6) ** d
                + (n - 1) * Fraction(-1, 6 * n) ** d)

    for n, d in [(20, 2), (100, 2), (300, 2), (20, 3), (100, 3)]:
        assert bias_term(n, d) == pytest.approx(float(oracle(n, d)), rel=1e-12)
        assert null_mean(n, d) == pytest.approx(
            float(oracle(n, d) + Fraction(1, 6) ** d), rel=1e-12)
    # n = 100, d = 2 collapses to the exact rational -1/3600
    assert bias_term(100, 2) == pytest.approx(-1 / 3600, rel=1e-12)


def test_tail_probability_edge_cases_and_vector_input():
    dist = xi_distribution(2)
    assert dist.tail_probability(0.0) == 1.0
    assert dist.tail_probability(-1.0) == 1.0
    vec = dist.tail_probability(np.array([0.01, 0.05]))
    assert vec.shape == (2,)
    assert vec[0] > vec[1]
    assert xi_tail_probability(0.05, 2) == pytest.approx(vec[1])


def test_tail_grid_matches_adaptive_quadrature():
    for d in (2, 3):
        dist = xi_distribution(d)
        svals = np.array([0.2, 1.0, 2.0, 5.0]) * dist.mean
        grid = dist.tail_grid(svals)
        scalar = dist.tail_probability(svals)
        np.testing.assert_allclose(grid, scalar, atol=5e-7)
    assert xi_distribution(2).tail_grid(np.array([-1.0, 0.0])).tolist() == \
        [1.0, 1.0]


def test_tail_interpolator_tracks_exact_curve():
    dist = xi_distribution(2)
    f = dist.tail_interpolator()
    rng = np.random.default_rng(11)
    s = rng.uniform(0.005, 0.3, size=25)
    np.testing.assert_allclose(f(s), dist.tail_probability(s), atol=2e-5)
    assert f(0.0) == 1.0
    assert f(1e9) < 1e-10


def test_quantile_upper_roundtrip_and_pinned_values():
    dist = xi_distribution(2)
    for alpha in (0.10, 0.05, 0.01):
        q = dist.quantile_upper(alpha)
        assert dist.tail_probability(q) == pytest.approx(alpha, abs=1e-5)
    # regression values, cross-checked by direct Monte Carlo on the
    # spectral representation (10^6 draws)
    assert dist.quantile_upper(0.05) == pytest.approx(0.058382, abs=1e-4)
    assert xi_distribution(3).quantile_upper(0.05) == \
        pytest.approx(0.007812, abs=5e-5)
    assert dist.quantile_upper(0.01) > dist.quantile_upper(0.05)
    with pytest.raises(DataError):
        dist.quantile_upper(0.0)
    with pytest.raises(DataError):
        dist.quantile_upper(1.0)


def test_family_cumulants_are_weighted_sums_over_terms():
    fam2 = build_subset_lag_family(2, m2=5)
    np.testing.assert_allclose(family_limit_cumulants(fam2),
                               11 * xi_cumulants(2), rtol=1e-14)
    fam3 = build_subset_lag_family(3, m2=5, m3=2)
    r = np.arange(1, 7)
    expected = 33 * xi_cumulants(2) + 25 * np.pi ** (2 * r) * xi_cumulants(3)
    np.testing.assert_allclose(family_limit_cumulants(fam3), expected,
                               rtol=1e-14)
    np.testing.assert_allclose(family_limit_cumulants(fam3, pairs_only=True),
                               33 * xi_cumulants(2), rtol=1e-14)


def test_edgeworth_tail_against_simulated_limit_law():
    # simulate the limit of the d = 2, m2 = 5 summed statistic: 11
    # independent copies of xi_2, via the aggregated chi-square spectrum
    dist = xi_distribution(2)
    lam, mult = dist.eigenvalues, dist.multiplicities
    rng = np.random.default_rng(2024)
    draws = np.zeros(200_000)
    for l, m in zip(lam, mult):
        draws += l * rng.chisquare(df=11 * m, size=draws.shape[0])
    kap = family_limit_cumulants(build_subset_lag_family(2, m2=5))
    for level in (0.90, 0.95, 0.99):
        q = float(np.quantile(draws, level))
        p = edgeworth_tail_probability(q, kap)
        assert p == pytest.approx(1.0 - level, abs=0.015)
    with pytest.raises(DataError):
        edgeworth_tail_probability(1.0, kap[:4])


def test_edgeworth_is_monotone_and_clipped_in_the_upper_tail():
    # the expansion is used for upper-tail p-values only; from the mean
    # upward it must decrease (the far left tail can wiggle)
    kap = family_limit_cumulants(build_subset_lag_family(2, m2=5))
    grid = kap[0] + np.sqrt(kap[1]) * np.linspace(0.0, 12.0, 60)
    p = np.array([edgeworth_tail_probability(v, kap) for v in grid])
    assert np.all(np.diff(p) <= 1e-12)
    assert 0.0 <= p.min() and p.max() <= 1.0


def _synthetic_terms(family, value=0.04, corr=0.1, p=0.3):
    terms = []
    for block in family.blocks:
        for lag in np.atleast_2d(block.lags):
            key = (block.subset, tuple(int(v) for v in np.atleast_1d(lag)))
            terms.append(PerTermStatistic(key[0], key[1], "cvm", value, p))
            terms.append(PerTermStatistic(key[0], key[1], "corr", corr, 0.5))
            terms.append(PerTermStatistic(key[0], key[1], "spearman", corr, 0.5))
    return terms


def test_combined_statistics_bookkeeping_d2():
    fam = build_subset_lag_family(2, m2=5)
    out = combined_statistics(fam, n=200, per_term=_synthetic_terms(fam),
                              score_kinds=("spearman",))
    assert set(out) == {"W", "F", "H", "H_S"}
    assert out["F"].df == 22 and out["H"].df == 11 and out["H_S"].df == 11
    assert out["H"].value == pytest.approx(200 * 11 * 0.1 ** 2)
    assert out["F"].value == pytest.approx(-2 * 11 * np.log(0.3))
    assert out["F"].p_value == pytest.approx(stats.chi2.sf(out["F"].value, 22))
    assert out["W"].value == pytest.approx(11 * (0.04 - bias_term(200, 2)))


def test_combined_statistics_add_pair_restricted_variants_d3():
    fam = build_subset_lag_family(3, m2=5, m3=2)
    out = combined_statistics(fam, n=200, per_term=_synthetic_terms(fam),
                              score_kinds=("spearman",))
    assert set(out) == {"W", "F", "H", "H_S", "W2", "F2", "H2", "H_S2"}
    assert out["F"].df == 116 and out["H"].df == 58
    assert out["H2"].df == 33 and out["F2"].df == 66
    # triple terms carry spectral weight pi^2 in W but not in W2
    w_pairs = 33 * (0.04 - bias_term(200, 2))
    w_triple = 25 * np.pi ** 2 * (0.04 - bias_term(200, 3))
    assert out["W"].value == pytest.approx(w_pairs + w_triple)
    assert out["W2"].value == pytest.approx(w_pairs)


def test_h_reference_quantile_for_default_families():
    # 11 terms for d = 2 (chi-square 95% point 19.675), 58 for d = 3
    fam2 = build_subset_lag_family(2, m2=5)
    fam3 = build_subset_lag_family(3, m2=5, m3=2)
    assert fam2.total_terms == 11 and fam3.total_terms == 58
    assert stats.chi2.ppf(0.95, fam2.total_terms) == \
        pytest.approx(19.675, abs=1e-3)
