"""Score values, tie handling and the dependence coefficients."""
import numpy as np
import pytest
from scipy import integrate, stats
from scipy.special import ndtri

from geitest.core import DataError
from geitest.depmeasures import (SCORE_FAMILIES, dependence_coefficient,
                                 generalized_cross_correlation, score_values)


def test_spearman_scores_reduce_to_mid_grid():
    # distinct data: score of the observation with rank R is (R - 1/2)/n
    rng = np.random.default_rng(1)
    x = rng.standard_normal(50)
    ranks = stats.rankdata(x)
    sc = score_values(x, "spearman")
    assert np.allclose(sc, (ranks - 0.5) / 50, atol=1e-12)


@pytest.mark.parametrize("kind", ["vdw", "savage", "savage_classical"])
def test_scores_average_quantile_over_rank_span(kind):
    # the tie-safe score is the average of K^{-1} over the observation's
    # span of the empirical cdf; cross-check by numerical integration
    fam = SCORE_FAMILIES[kind]
    x = np.array([3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0])
    n = len(x)
    sc = score_values(x, fam)
    for i, xi in enumerate(x):
        lo = np.sum(x < xi) / n
        hi = np.sum(x <= xi) / n
        val, _ = integrate.quad(fam.quantile, lo, hi)
        assert sc[i] == pytest.approx(val / (hi - lo), abs=1e-7)


def test_tied_scores_are_finite_even_at_the_edges():
    # the largest observation's span reaches u = 1 where the vdW and
    # Savage quantiles blow up; the averaged score must stay finite
    x = np.array([1.0, 2.0, 2.0, 3.0, 3.0, 3.0])
    for kind in SCORE_FAMILIES:
        assert np.all(np.isfinite(score_values(x, kind)))


def test_scores_constant_data_rejected_downstream():
    with pytest.raises(DataError):
        dependence_coefficient(np.ones((30, 2)), (0, 1), (0, 0), "spearman")


def test_spearman_coefficient_equals_library_rho():
    # on distinct data at lag zero the coefficient is exactly the
    # Pearson correlation of ranks
    rng = np.random.default_rng(3)
    e = rng.random((200, 2))
    e[:, 1] = 0.6 * e[:, 0] + 0.4 * e[:, 1]
    ours = dependence_coefficient(e, (0, 1), (0, 0), "spearman")
    ref = stats.spearmanr(e[:, 0], e[:, 1]).statistic
    assert ours == pytest.approx(ref, abs=1e-12)


def test_coefficient_invariant_under_monotone_maps():
    rng = np.random.default_rng(4)
    e = rng.random((150, 2))
    base = {k: dependence_coefficient(e, (0, 1), (0, 2), k)
            for k in SCORE_FAMILIES}
    warped = np.column_stack([np.exp(3 * e[:, 0]), e[:, 1] ** 5])
    for k, v in base.items():
        assert dependence_coefficient(warped, (0, 1), (0, 2), k) == \
            pytest.approx(v, abs=1e-12)


def test_cross_correlation_known_value():
    # perfectly correlated columns at the matching lag
    n = 60
    x = np.sin(np.linspace(0, 12, n))
    e = np.column_stack([x, np.roll(x, 3)])
    r = generalized_cross_correlation(e, (0, 1), (0, 3))
    assert r == pytest.approx(1.0, abs=1e-12)


def test_permutation_variance_is_one_over_n():
    # under independence sqrt(n) * coefficient should be approximately
    # standard normal; check the variance across permutations
    rng = np.random.default_rng(8)
    n, reps = 80, 2000
    u = rng.random(n)
    v = rng.random(n)
    for kind in ("spearman", "vdw", "savage"):
        vals = np.empty(reps)
        for k in range(reps):
            e = np.column_stack([u, rng.permutation(v)])
            vals[k] = dependence_coefficient(e, (0, 1), (0, 0), kind)
        assert 0.8 < n * vals.var() < 1.2


def test_savage_tentmap_closed_forms():
    # tent-map copula: v = 1 - |2u - 1|; the log-score coefficient has
    # the closed form 1 - pi^2/12 + (log 2)^2/2, the reversed-log
    # variant 1 - pi^2/8
    rng = np.random.default_rng(12)
    n = 10000
    u = rng.random(n)
    e = np.column_stack([u, 1.0 - np.abs(2.0 * u - 1.0)])
    rho_e = dependence_coefficient(e, (0, 1), (0, 0), "savage")
    assert rho_e == pytest.approx(1 - np.pi ** 2 / 12 + np.log(2) ** 2 / 2,
                                  abs=0.02)
    rho_c = dependence_coefficient(e, (0, 1), (0, 0), "savage_classical")
    assert rho_c == pytest.approx(1 - np.pi ** 2 / 8, abs=0.02)
    # Spearman and van der Waerden are blind to this dependence
    for kind in ("spearman", "vdw"):
        assert abs(dependence_coefficient(e, (0, 1), (0, 0), kind)) < 0.03


def test_score_family_moments():
    # mu and sigma2 are the moments of K^{-1}(U): verified by quadrature
    for kind, fam in SCORE_FAMILIES.items():
        m, _ = integrate.quad(fam.quantile, 1e-12, 1 - 1e-12)
        v, _ = integrate.quad(lambda u: (fam.quantile(u) - fam.mu) ** 2,
                              1e-12, 1 - 1e-12)
        assert m == pytest.approx(fam.mu, abs=1e-6), kind
        assert v == pytest.approx(fam.sigma2, abs=1e-4), kind


def test_vdw_scores_match_normal_quantiles_inside():
    # away from the edges the tie-safe vdW score is close to the usual
    # ndtri((R - 1/2)/n) evaluation
    rng = np.random.default_rng(9)
    x = rng.random(500)
    ranks = stats.rankdata(x)
    sc = score_values(x, "vdw")
    mid = (ranks > 25) & (ranks < 475)
    assert np.allclose(sc[mid], ndtri((ranks[mid] - 0.5) / 500), atol=5e-3)
