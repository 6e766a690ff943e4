"""Lagged cross-correlations and copula-based dependence coefficients.

The plain cross-correlation of generalized errors and three classical
rank-score coefficients (Spearman, van der Waerden, Savage), all made
tie-safe: the per-observation score is the mean of the reference
quantile function over the observation's span of the empirical margin,

    score(e) = [L(F_n(e)) - L(F_n(e-))] / [F_n(e) - F_n(e-)],

where L is the antiderivative of the reference quantile K^{-1}.  With
distinct observations this reduces to the usual scores evaluated on the
mid-grid (for Spearman, exactly (R - 1/2)/n); with ties or genuinely
discrete data it automatically averages the scores over each atom,
which keeps every score finite (no tail clipping needed even for the
unbounded van der Waerden and Savage quantiles).

Normalisation divides by s_K = sqrt(mean((score - mu)^2)), the sample
analogue of the score standard deviation under the observed margin, so
sqrt(n) times each coefficient is asymptotically standard normal under
independence.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtri

from .core import DataError

__all__ = [
    "ScoreFamily",
    "SCORE_FAMILIES",
    "score_values",
    "generalized_cross_correlation",
    "dependence_coefficient",
]


@dataclass(frozen=True)
class ScoreFamily:
    """Reference score distribution K.

    ``big_l`` is the antiderivative of the quantile function K^{-1} with
    big_l(0) = 0; ``mu`` and ``sigma2`` are the mean and variance of
    K^{-1}(U) for uniform U, i.e. of the reference distribution itself.
    """

    name: str
    big_l: Callable[[np.ndarray], np.ndarray]
    quantile: Callable[[np.ndarray], np.ndarray]
    mu: float
    sigma2: float
    description: str = field(default="", compare=False)


def _l_spearman(u):
    return 0.5 * np.asarray(u, dtype=float) ** 2


def _l_vdw(u):
    # integral of ndtri is -phi(ndtri(u)); endpoints are exact zeros
    u = np.asarray(u, dtype=float)
    inner = ndtri(np.clip(u, 1e-300, 1.0 - 1e-16))
    out = -np.exp(-0.5 * inner ** 2) / np.sqrt(2.0 * np.pi)
    return np.where((u <= 0.0) | (u >= 1.0), 0.0, out)


def _l_savage(u):
    # integral of log u, with 0 log 0 = 0
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = u * np.log(u) - u
    return np.where(u <= 0.0, 0.0, out)


def _l_savage_classical(u):
    # integral of log(1 - u), with the 0 log 0 = 0 convention at u = 1
    u = np.asarray(u, dtype=float)
    w = 1.0 - u
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -w * np.log(w) - u
    return np.where(w <= 0.0, -1.0, out)


SCORE_FAMILIES: dict[str, ScoreFamily] = {
    "spearman": ScoreFamily(
        "spearman", _l_spearman, lambda u: np.asarray(u, dtype=float),
        mu=0.5, sigma2=1.0 / 12.0,
        description="uniform scores (Spearman rho)"),
    "vdw": ScoreFamily(
        "vdw", _l_vdw, ndtri, mu=0.0, sigma2=1.0,
        description="Gaussian scores (van der Waerden)"),
    "savage": ScoreFamily(
        "savage", _l_savage, lambda u: np.log(u), mu=-1.0, sigma2=1.0,
        description="log scores (Savage, exponential reference)"),
    "savage_classical": ScoreFamily(
        "savage_classical", _l_savage_classical,
        lambda u: np.log1p(-np.asarray(u, dtype=float)), mu=-1.0, sigma2=1.0,
        description="reversed log scores (classical Savage orientation)"),
}


def score_values(x: np.ndarray, family: ScoreFamily | str) -> np.ndarray:
    """Tie-safe per-observation scores under the empirical margin."""
    if isinstance(family, str):
        family = SCORE_FAMILIES[family]
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 2:
        raise DataError("need at least 2 observations")
    _, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    hi = np.cumsum(counts) / n
    lo = hi - counts / n
    per_value = (family.big_l(hi) - family.big_l(lo)) / (counts / n)
    return per_value[inverse]


def _lagged_product_mean(columns: list[np.ndarray], lags: list[int]) -> float:
    n = len(columns[0])
    t = np.arange(n)
    prod = np.ones(n)
    for col, lag in zip(columns, lags):
        prod = prod * col[(t + lag) % n]
    return float(prod.mean())


def generalized_cross_correlation(errors: np.ndarray, subset, lags) -> float:
    """Lagged cross-correlation of the (centred) generalized errors.

    For a pair this is the ordinary circular cross-correlation; for a
    triple it is the third cross-moment normalised by the product of
    the three standard deviations.  Under independence sqrt(n) times
    the value is asymptotically standard normal.
    """
    errors = np.asarray(errors, dtype=float)
    subset = tuple(subset)
    cols, scales = [], 1.0
    for j in subset:
        e = errors[:, j]
        cols.append(e - e.mean())
        scales *= e.std()
    if scales <= 0:
        raise DataError("degenerate series (zero variance)")
    return _lagged_product_mean(cols, [int(lags[j]) for j in subset]) / scales


def dependence_coefficient(errors: np.ndarray, subset, lags,
                           family: ScoreFamily | str) -> float:
    """Lagged rank-score dependence coefficient for one subset.

    Scores are computed columnwise with ``score_values`` and centred at
    the reference mean ``mu``; the normaliser is the sample second
    moment of the centred scores, so the coefficient is exactly
    invariant under strictly increasing transformations of each series.
    """
    if isinstance(family, str):
        family = SCORE_FAMILIES[family]
    errors = np.asarray(errors, dtype=float)
    subset = tuple(subset)
    cols, scales = [], 1.0
    for j in subset:
        sc = score_values(errors[:, j], family) - family.mu
        cols.append(sc)
        s2 = float(np.mean(sc ** 2))
        if s2 <= 0:
            raise DataError("degenerate series (constant scores)")
        scales *= np.sqrt(s2)
    return _lagged_product_mean(cols, [int(lags[j]) for j in subset]) / scales
