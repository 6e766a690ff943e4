"""Closed-form CvM statistics against the direct-integration oracle."""
import numpy as np
import pytest

from geitest.asymptotics import null_mean
from geitest.core import DataError, build_subset_lag_family
from geitest.mobius import (circular_ranks, cvm_all_terms, cvm_oracle,
                            cvm_statistic)


def test_circular_ranks_basic_and_ties():
    r = circular_ranks(np.array([[0.3], [0.1], [0.9], [0.1]]))
    # ties broken by time order: the two 0.1s get ranks 1 and 2
    assert r[:, 0].tolist() == [3, 1, 4, 2]
    with pytest.raises(DataError):
        circular_ranks(np.array([[1.0, 2.0]]).T[:1])


def test_closed_form_equals_oracle_pairs_and_triples():
    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(3, 31))
        card = int(rng.integers(2, 4))
        x = rng.random((n, card))
        if rng.random() < 0.3:  # mix in ties
            x = np.round(x, 1)
        ranks = circular_ranks(x)
        subset = tuple(range(card))
        lags = rng.integers(-n, n + 1, size=card)
        lags[0] = 0
        s_fast = cvm_statistic(ranks, subset, lags)
        s_oracle = cvm_oracle(ranks, subset, lags)
        worst = max(worst, abs(s_fast - s_oracle))
    assert worst < 1e-10


def test_riemann_oracle_converges_to_exact():
    rng = np.random.default_rng(5)
    ranks = circular_ranks(rng.random((12, 2)))
    exact = cvm_oracle(ranks, (0, 1), (0, 2))
    coarse = cvm_oracle(ranks, (0, 1), (0, 2), grid_resolution=400)
    assert coarse == pytest.approx(exact, rel=0.05)


def test_lag_shift_equivalence():
    # shifting every lag in the subset by a constant leaves the
    # circular statistic unchanged
    rng = np.random.default_rng(42)
    ranks = circular_ranks(rng.random((25, 3)))
    base = cvm_statistic(ranks, (0, 1), (0, 3, 0))
    shifted = cvm_statistic(ranks, (0, 1), (7, 10, 0))
    assert base == pytest.approx(shifted, abs=1e-12)
    t_base = cvm_statistic(ranks, (0, 1, 2), (0, -1, 2))
    t_shift = cvm_statistic(ranks, (0, 1, 2), (4, 3, 6))
    assert t_base == pytest.approx(t_shift, abs=1e-12)


def test_rank_statistic_is_margin_free():
    rng = np.random.default_rng(7)
    x = rng.standard_normal((40, 2))
    y = np.column_stack([np.exp(x[:, 0]), x[:, 1] ** 3])  # strictly monotone
    fam = build_subset_lag_family(2, 3)
    a = cvm_all_terms(circular_ranks(x), fam)
    b = cvm_all_terms(circular_ranks(y), fam)
    assert np.allclose(a, b, atol=1e-12)


def test_all_terms_matches_per_term_calls():
    rng = np.random.default_rng(11)
    ranks = circular_ranks(rng.random((30, 3)))
    fam = build_subset_lag_family(3, m2=2, m3=1)
    vals = cvm_all_terms(ranks, fam)
    pos = 0
    for block in fam.blocks:
        for row in block.lags:
            assert vals[pos] == pytest.approx(
                cvm_statistic(ranks, block.subset, row), abs=1e-12)
            pos += 1


def test_null_mean_at_small_n():
    # E[S] under random permutations equals the closed-form null mean
    rng = np.random.default_rng(99)
    n, reps = 20, 3000
    base = np.arange(1, n + 1)
    vals = np.empty(reps)
    for k in range(reps):
        ranks = np.column_stack([base, rng.permutation(base)])
        vals[k] = cvm_statistic(ranks, (0, 1), (0, 0))
    se = vals.std() / np.sqrt(reps)
    assert abs(vals.mean() - null_mean(n, 2)) < 4 * se


def test_statistic_size_guards():
    with pytest.raises(DataError):
        cvm_statistic(np.ones((6000, 2), dtype=int), (0, 1), (0, 0))
    with pytest.raises(DataError):
        cvm_oracle(np.ones((60, 2), dtype=int), (0, 1), (0, 0))
    with pytest.raises(DataError):
        cvm_statistic(np.ones((10, 2), dtype=int), (0,), (0, 0))
