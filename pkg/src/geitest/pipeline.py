"""From generalized errors to a full statistic report.

``compute_report`` is the single-dataset path used by the CLI: ranks,
per-(subset, lag) statistics with asymptotic p-values, then the
portmanteau statistics.  ``StudyEvaluator`` is the stripped-down
vectorised path used inside Monte-Carlo loops, computing only the
requested combined statistics (values first; p-values or rejections
afterwards, so empirical-quantile studies never pay for p-values).
"""
from __future__ import annotations

import numpy as np
from scipy import stats
from scipy.special import ndtr

from .asymptotics import (P_VALUE_FLOOR, SCORE_STAT_NAMES, bias_term,
                          combined_statistics, edgeworth_tail_probability,
                          family_limit_cumulants, xi_distribution)
from .core import (DataError, GeneralizedErrorPanel, PerTermStatistic,
                   StatisticReport, SubsetLagFamily, build_subset_lag_family)
from .depmeasures import SCORE_FAMILIES, score_values
from .mobius import circular_ranks, cvm_all_terms
from .pit import average_over_randomizations

__all__ = ["DEFAULT_SCORE_KINDS", "compute_report", "StudyEvaluator"]

DEFAULT_SCORE_KINDS = ("spearman", "vdw", "savage")

# names of combined statistics that need a triple block
_KIND_BY_NAME = {v: k for k, v in SCORE_STAT_NAMES.items()}


def _term_list(family: SubsetLagFamily):
    return [(block.subset, tuple(int(v) for v in row))
            for block in family.blocks for row in block.lags]


def _lagged_mean(cols: dict, subset, lags, n: int) -> float:
    t = np.arange(n)
    prod = np.ones(n)
    for j in subset:
        prod = prod * cols[j][(t + lags[j]) % n]
    return float(prod.mean())


def _centred_columns(values: np.ndarray, mu=None):
    """Centre each column and return (columns, rms norms)."""
    cols, norms = {}, {}
    for j in range(values.shape[1]):
        c = values[:, j] - (values[:, j].mean() if mu is None else mu)
        r = float(np.sqrt(np.mean(c ** 2)))
        if r <= 0:
            raise DataError("degenerate series (zero variance)")
        cols[j], norms[j] = c, r
    return cols, norms


def _score_columns(errors: np.ndarray, kind: str):
    fam = SCORE_FAMILIES[kind]
    scored = np.column_stack([score_values(errors[:, j], fam)
                              for j in range(errors.shape[1])])
    return _centred_columns(scored, mu=fam.mu)


def _single_report(errors: np.ndarray, family: SubsetLagFamily,
                   score_kinds, tails, exact: bool) -> StatisticReport:
    n = errors.shape[0]
    terms = _term_list(family)
    svals = cvm_all_terms(circular_ranks(errors), family)
    per_term = []
    for (subset, lags), s in zip(terms, svals):
        card = len(subset)
        p = float(xi_distribution(card).tail_probability(s)) if exact \
            else float(tails[card](s))
        per_term.append(PerTermStatistic(subset, lags, "cvm", float(s), p))

    def add_corr(kind, cols, norms):
        for subset, lags in terms:
            scale = np.prod([norms[j] for j in subset])
            r = _lagged_mean(cols, subset, lags, n) / scale
            p = 2.0 * float(ndtr(-abs(r) * np.sqrt(n)))
            per_term.append(PerTermStatistic(subset, lags, kind, r, p))

    add_corr("corr", *_centred_columns(errors))
    for kind in score_kinds:
        add_corr(kind, *_score_columns(errors, kind))

    combined = combined_statistics(family, n, per_term, score_kinds)
    return StatisticReport(per_term, combined,
                           metadata={"n_effective": n, "d": family.d})


def compute_report(errors, m2: int = 5, m3: int = 2,
                   include_triples: bool = True,
                   family: SubsetLagFamily | None = None,
                   score_kinds=DEFAULT_SCORE_KINDS,
                   exact_pvalues: bool = False,
                   metadata: dict | None = None) -> StatisticReport:
    """Run the full battery of lagged independence tests.

    Parameters
    ----------
    errors : GeneralizedErrorPanel or ndarray (n, d) or (M, n, d)
        Generalized errors.  With M > 1 randomizations every statistic
        is averaged over the randomizations before p-values are taken.
    m2, m3, include_triples : family parameters (ignored when
        ``family`` is given).
    score_kinds : score families reported per term and combined.
    exact_pvalues : bool
        Per-term p-values by exact numerical inversion instead of the
        interpolated tail (slower, equal to ~1e-6).
    """
    panel = errors if isinstance(errors, GeneralizedErrorPanel) \
        else GeneralizedErrorPanel(np.asarray(errors, dtype=float))
    family = family or build_subset_lag_family(panel.d, m2, m3,
                                               include_triples)
    if family.d != panel.d:
        raise DataError("lag family dimension does not match the errors")
    for kind in score_kinds:
        if kind not in SCORE_FAMILIES:
            raise DataError(f"unknown score family {kind!r}")
    cards = {len(b.subset) for b in family.blocks}
    tails = {c: xi_distribution(c).tail_interpolator() for c in cards}
    kap = {False: family_limit_cumulants(family, 6, pairs_only=False)}
    if any(len(b.subset) == 3 for b in family.blocks):
        kap[True] = family_limit_cumulants(family, 6, pairs_only=True)

    def refresh(report: StatisticReport) -> None:
        n = report.metadata["n_effective"]
        for t in report.per_term:
            if t.kind == "cvm":
                t.p_value = float(tails[len(t.subset)](t.value))
            else:
                t.p_value = 2.0 * float(ndtr(-abs(t.value) * np.sqrt(n)))
        for name, stat in report.combined.items():
            if name in ("W", "W2"):
                stat.p_value = edgeworth_tail_probability(
                    stat.value, kap[name == "W2"])
            else:
                stat.p_value = float(stats.chi2.sf(stat.value, stat.df))

    report = average_over_randomizations(
        panel,
        lambda e: _single_report(e, family, tuple(score_kinds), tails,
                                 exact_pvalues),
        refresh)
    report.metadata.update({
        "m2": family.m2, "m3": family.m3,
        "include_triples": family.include_triples,
        "total_terms": family.total_terms,
        "score_kinds": list(score_kinds),
    })
    if metadata:
        report.metadata.update(metadata)
    n_eff = report.metadata["n_effective"]
    if family.d == 3 and "savage" in score_kinds and n_eff < 500:
        report.warnings.append(
            "the Savage-score statistic with three series approaches its "
            "chi-square limit slowly; below n = 500 prefer the other "
            "statistics or simulated critical values")
    return report


class StudyEvaluator:
    """Computes a fixed tuple of combined statistics, fast.

    ``values`` maps one (n, d) error matrix to the statistic values in
    ``names`` order; ``reject`` turns a vector of values of one
    statistic (one entry per replicate) into rejection indicators at
    level alpha.  Splitting the two keeps quantile-mode studies free of
    p-value work.
    """

    def __init__(self, family: SubsetLagFamily, statistics):
        self.family = family
        self.names = tuple(statistics)
        self._terms = _term_list(family)
        cards = np.array([len(s) for s, _ in self._terms])
        self._cards = cards
        self._pair_mask = cards == 2
        self._weights = np.pi ** (2.0 * (cards - 2))
        has_triple = bool(np.any(cards == 3))
        valid = {"W", "F", "H"} | set(SCORE_STAT_NAMES.values())
        if has_triple:
            valid |= {v + "2" for v in valid}
        for name in self.names:
            if name not in valid:
                raise DataError(f"unknown statistic {name!r} for this family")
        base = {n[:-1] if n.endswith("2") else n for n in self.names}
        self._need_cvm = bool(base & {"W", "F"})
        self._need_corr = "H" in base
        self._kinds = tuple(_KIND_BY_NAME[b] for b in sorted(base)
                            if b in _KIND_BY_NAME)
        self._tails = {c: xi_distribution(c).tail_interpolator()
                       for c in sorted(set(cards))} if self._need_cvm else {}
        self._kap = {}
        for name in self.names:
            if name in ("W", "W2"):
                self._kap[name] = family_limit_cumulants(
                    family, 6, pairs_only=name == "W2")

    def _mask(self, name: str) -> np.ndarray:
        return self._pair_mask if name.endswith("2") \
            else np.ones(len(self._terms), dtype=bool)

    def values(self, errors: np.ndarray) -> np.ndarray:
        n = errors.shape[0]
        out = np.empty(len(self.names))
        svals = logp = None
        if self._need_cvm:
            svals = cvm_all_terms(circular_ranks(errors), self.family)
            tail = np.empty_like(svals)
            for c, f in self._tails.items():
                sel = self._cards == c
                tail[sel] = f(svals[sel])
            logp = np.log(np.maximum(tail, P_VALUE_FLOOR))
        rsq = {}
        if self._need_corr:
            rsq["H"] = self._rsq_terms(*_centred_columns(errors), n)
        for kind in self._kinds:
            rsq[SCORE_STAT_NAMES[kind]] = self._rsq_terms(
                *_score_columns(errors, kind), n)
        for i, name in enumerate(self.names):
            mask = self._mask(name)
            base = name[:-1] if name.endswith("2") else name
            if base == "W":
                cent = svals[mask] - np.array(
                    [bias_term(n, c) for c in self._cards[mask]])
                out[i] = float(self._weights[mask] @ cent)
            elif base == "F":
                out[i] = float(-2.0 * logp[mask].sum())
            else:
                out[i] = float(n * rsq[base][mask].sum())
        return out

    def _rsq_terms(self, cols, norms, n) -> np.ndarray:
        out = np.empty(len(self._terms))
        for i, (subset, lags) in enumerate(self._terms):
            scale = np.prod([norms[j] for j in subset])
            out[i] = (_lagged_mean(cols, subset, lags, n) / scale) ** 2
        return out

    def reject(self, name: str, values: np.ndarray, n: int,
               alpha: float) -> np.ndarray:
        """Rejection indicators for one statistic across replicates."""
        values = np.asarray(values, dtype=float)
        base = name[:-1] if name.endswith("2") else name
        n_terms = int(self._mask(name).sum())
        if base == "W":
            p = np.array([edgeworth_tail_probability(v, self._kap[name])
                          for v in values])
        elif base == "F":
            p = stats.chi2.sf(values, 2 * n_terms)
        else:
            p = stats.chi2.sf(values, n_terms)
        return p < alpha
