"""Containers, lag-family enumeration and report serialisation."""
import json

import numpy as np
import pytest

from geitest.core import (CombinedStatistic, DataError, GeneralizedErrorPanel,
                          PerTermStatistic, SeriesPanel, StatisticReport,
                          build_subset_lag_family)


def test_panel_validation():
    with pytest.raises(DataError):
        SeriesPanel(np.ones(5))  # 1-D
    with pytest.raises(DataError):
        SeriesPanel(np.ones((5, 1)))  # single series
    with pytest.raises(DataError):
        SeriesPanel(np.ones((5, 4)))  # too many series
    with pytest.raises(DataError):
        SeriesPanel([[1.0, np.nan], [0.0, 1.0]])
    with pytest.raises(DataError):
        SeriesPanel(np.ones((2, 2)), names=("a",))
    p = SeriesPanel(np.zeros((4, 3)))
    assert p.names == ("X1", "X2", "X3")
    assert (p.n, p.d) == (4, 3)


def test_error_panel_shapes_and_clipping():
    e = GeneralizedErrorPanel(np.full((6, 2), 0.5))
    assert e.replicates.shape == (1, 6, 2)
    assert e.m == 1 and e.n == 6 and e.d == 2
    # tiny numerical overshoot is clipped, real violations rejected
    e2 = GeneralizedErrorPanel(np.full((1, 4, 2), 1.0 + 5e-13))
    assert e2.replicates.max() == 1.0
    with pytest.raises(DataError):
        GeneralizedErrorPanel(np.full((4, 2), 1.5))


def test_family_counts_pairs():
    fam = build_subset_lag_family(2, m2=5)
    assert len(fam.blocks) == 1
    assert fam.blocks[0].subset == (0, 1)
    # one equivalence class per lag in -m2..m2
    assert fam.blocks[0].size == 11
    assert fam.total_terms == 11
    assert fam.pair_terms() == 11


def test_family_counts_triples():
    fam = build_subset_lag_family(3, m2=5, m3=2)
    sizes = {b.subset: b.size for b in fam.blocks}
    assert sizes == {(0, 1): 11, (0, 2): 11, (1, 2): 11, (0, 1, 2): 25}
    assert fam.total_terms == 58
    assert fam.pair_terms() == 33
    no_triple = build_subset_lag_family(3, m2=5, m3=2, include_triples=False)
    assert no_triple.total_terms == 33


def test_family_lags_anchored_and_distinct():
    fam = build_subset_lag_family(3, m2=4, m3=2)
    for block in fam.blocks:
        anchor = min(block.subset)
        assert np.all(block.lags[:, anchor] == 0)
        # entries outside the subset stay zero
        outside = [j for j in range(3) if j not in block.subset]
        for j in outside:
            assert np.all(block.lags[:, j] == 0)
        assert len({tuple(r) for r in block.lags}) == block.size


def test_family_rejects_bad_arguments():
    with pytest.raises(DataError):
        build_subset_lag_family(4, 5)
    with pytest.raises(DataError):
        build_subset_lag_family(2, -1)


def test_block_label_is_one_based():
    fam = build_subset_lag_family(3, 1, 1)
    assert fam.blocks[-1].label() == "{1,2,3}"


def test_report_json_round_trip():
    per = [PerTermStatistic((0, 1), (0, 3), "cvm", 0.12, 0.04),
           PerTermStatistic((0, 1), (0, -2), "spearman", -0.05, 0.61)]
    comb = {"W": CombinedStatistic(1.5, 0.03, None, "weighted sum"),
            "F": CombinedStatistic(30.0, 0.11, 22, "Fisher combination")}
    rep = StatisticReport(per, comb, metadata={"n_effective": 200},
                          warnings=["be careful"])
    back = StatisticReport.from_json(rep.to_json())
    assert back.per_term[0].subset == (0, 1)
    assert back.per_term[1].kind == "spearman"
    assert back.combined["F"].df == 22
    assert back.metadata == {"n_effective": 200}
    assert back.warnings == ["be careful"]
    # subsets serialise 1-based for human readers
    payload = json.loads(rep.to_json())
    assert payload["per_term"][0]["subset"] == [1, 2]


def test_report_rejection_logic():
    comb = {"W": CombinedStatistic(1.0, 0.20), "H": CombinedStatistic(9.0, 0.01)}
    rep = StatisticReport([], comb)
    assert rep.rejected(0.05)
    assert not rep.rejected(0.05, statistics=["W"])
    assert rep.rejected(0.05, statistics=["H"])
