"""Randomized probability integral transforms and related kernels.

For an observation X with conditional law G, the randomized PIT is

    U = G(X-) + V * [G(X) - G(X-)],   V ~ Uniform(0, 1) independent.

U is uniform whenever G is the true conditional law, with no continuity
assumption: the extra randomization spreads each atom of G uniformly
over its probability span.  ``j_transform`` is the smoothed indicator
whose conditional mean given X recovers u, and ``chi0`` is the
covariance correction those smoothed indicators pick up at atoms.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (ConditionalDistributionTrace, DataError, Distribution,
                   GeneralizedErrorPanel, SeriesPanel, StatisticReport)

__all__ = [
    "RandomizationPlan",
    "randomized_pit",
    "j_transform",
    "chi0",
    "average_over_randomizations",
]


@dataclass(frozen=True)
class RandomizationPlan:
    """Counter-based source of the extra PIT uniforms.

    Each (randomization k, series j) pair gets its own Philox stream
    keyed by ``seed`` with the pair baked into the counter block, so the
    variates do not depend on evaluation order and parallel runs are
    bit-identical to serial ones.
    """

    m: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise DataError("need at least one randomization")

    def uniforms(self, k: int, j: int, n: int) -> np.ndarray:
        bits = np.random.Philox(key=self.seed & (2 ** 64 - 1),
                                counter=[0, 0, k + 1, j + 1])
        return np.random.Generator(bits).random(n)


def randomized_pit(panel: SeriesPanel,
                   trace: ConditionalDistributionTrace,
                   plan: RandomizationPlan | None = None) -> GeneralizedErrorPanel:
    """Transform a panel into generalized errors under its trace.

    Observations before ``trace.start`` have no conditional law (lag
    initialisation) and are dropped from the output.  For continuous
    conditional laws the atom term vanishes and all replicates coincide.

    Returns
    -------
    GeneralizedErrorPanel
        Shape (plan.m, n - start, d).
    """
    plan = plan or RandomizationPlan()
    if trace.d != panel.d:
        raise DataError("trace and panel disagree on the number of series")
    for tr in trace.traces:
        if tr.n != panel.n:
            raise DataError("each series trace must cover the whole series")
    start = trace.start
    n_eff = panel.n - start
    if n_eff < 2:
        raise DataError("fewer than 2 usable observations after trimming lags")
    out = np.empty((plan.m, n_eff, panel.d))
    for j, series_trace in enumerate(trace.traces):
        cl, at = series_trace.pit_parts(panel.values[:, j])
        cl, at = cl[start:], at[start:]
        for k in range(plan.m):
            v = plan.uniforms(k, j, n_eff)
            out[k, :, j] = cl + v * at
    return GeneralizedErrorPanel(np.clip(out, 0.0, 1.0), seed=plan.seed)


def j_transform(dist: Distribution, x, u):
    """Smoothed indicator J(x, u): equals 1{G(x) <= u} at continuity
    points of G and ramps linearly across each atom.

    Its conditional expectation over the PIT randomization reproduces
    the indicator of {U <= u}, and E[J(X, u)] = u when X ~ G.
    """
    u = np.asarray(u, dtype=float)
    gl = np.asarray(dist.cdf_left(x), dtype=float)
    a = np.asarray(dist.atom(x), dtype=float)
    g = gl + a
    with np.errstate(divide="ignore", invalid="ignore"):
        ramp = np.clip((u - gl) / np.where(a > 0, a, 1.0), 0.0, 1.0)
    out = np.where(a > 0, ramp, (g <= u).astype(float))
    return float(out) if out.ndim == 0 else out


def chi0(dist: Distribution, u: float, v: float) -> float:
    """Atom covariance correction.

    cov{J(X, u), J(X, v)} = min(u,v) - u*v - chi0(u, v); the correction
    is non-zero only when u and v fall inside the span of the same atom
    of G, where it equals (u^v - G(x-)) (G(x) - u|v) / atom(x).
    """
    if not (0.0 <= u <= 1.0 and 0.0 <= v <= 1.0):
        raise DataError("u, v must lie in [0, 1]")
    if u <= 0.0 or v <= 0.0 or u >= 1.0 or v >= 1.0:
        return 0.0
    xu = dist.quantile(u)
    xv = dist.quantile(v)
    if xu != xv:
        return 0.0
    a = float(dist.atom(xu))
    if a <= 0.0:
        return 0.0
    gl = float(dist.cdf_left(xu))
    g = gl + a
    lo, hi = (u, v) if u <= v else (v, u)
    return max(lo - gl, 0.0) * max(g - hi, 0.0) / a


def average_over_randomizations(panel: GeneralizedErrorPanel, evaluator,
                                refresh_p=None) -> StatisticReport:
    """Average every statistic over the stacked randomizations.

    ``evaluator`` maps one (n, d) error matrix to a ``StatisticReport``.
    Statistic values are averaged across replicates; p-values are then
    refreshed by ``refresh_p(report)`` (in place) when given, since
    asymptotic p-values evaluated at an averaged statistic are only
    approximate.  A warning is recorded on the report when m > 1.
    """
    reports = [evaluator(panel.replicates[k]) for k in range(panel.m)]
    first = reports[0]
    if panel.m == 1:
        return first
    for i, term in enumerate(first.per_term):
        term.value = float(np.mean([r.per_term[i].value for r in reports]))
    for name, stat in first.combined.items():
        stat.value = float(np.mean([r.combined[name].value for r in reports]))
    if refresh_p is not None:
        refresh_p(first)
    first.metadata["randomizations"] = panel.m
    first.warnings.append(
        f"statistics averaged over {panel.m} randomizations; asymptotic "
        "p-values are approximate -- use the simulate command's quantile "
        "mode for empirical critical values")
    return first
