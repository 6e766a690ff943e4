"""Concrete conditional distributions and vectorised series traces.

Every class implements the four-method contract from ``core``:
``cdf``/``cdf_left``/``atom``/``quantile``; quantiles are always the
generalized inverse ``inf{y : cdf(y) >= u}`` so atoms and flat spots are
handled exactly.  Series traces add vectorised fast paths used by the
randomized PIT (``pit_parts``) and by copula-driven simulation
(``quantile_path``).
"""
from __future__ import annotations

import numpy as np
from scipy import stats
from scipy.special import ndtr, ndtri

from .core import DataError, Distribution, SeriesTrace

__all__ = [
    "MarginFamily",
    "MARGIN_FAMILIES",
    "TableDistribution",
    "UniformDistribution",
    "LocScaleMixture",
    "PoissonMixture",
    "ConstantTrace",
    "LocScaleMixtureTrace",
    "PoissonMixtureTrace",
]


class MarginFamily:
    """A continuous standardized noise law used inside mixture models."""

    name = "abstract"

    def cdf(self, z):
        raise NotImplementedError

    def pdf(self, z):
        raise NotImplementedError

    def ppf(self, u):
        raise NotImplementedError


class _GaussianMargin(MarginFamily):
    name = "gaussian"

    def cdf(self, z):
        return ndtr(z)

    def pdf(self, z):
        return np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi)

    def ppf(self, u):
        return ndtri(u)


class _CenteredExponentialMargin(MarginFamily):
    """Exp(1) shifted to mean zero: support [-1, inf)."""

    name = "exponential"

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z >= -1.0, -np.expm1(-(z + 1.0)), 0.0)

    def pdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z >= -1.0, np.exp(-(z + 1.0)), 0.0)

    def ppf(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) - 1.0


class _CenteredParetoMargin(MarginFamily):
    """Pareto tail index 6 shifted to mean zero: G(z) = 1 - (z + 6/5)^-6."""

    name = "pareto6"
    shift = 6.0 / 5.0

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z >= -0.2, 1.0 - (z + self.shift) ** -6.0, 0.0)

    def pdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z >= -0.2, 6.0 * (z + self.shift) ** -7.0, 0.0)

    def ppf(self, u):
        return (1.0 - np.asarray(u, dtype=float)) ** (-1.0 / 6.0) - self.shift


MARGIN_FAMILIES: dict[str, MarginFamily] = {
    f.name: f for f in (_GaussianMargin(), _CenteredExponentialMargin(),
                        _CenteredParetoMargin())
}


class TableDistribution(Distribution):
    """Finite discrete law on arbitrary support points."""

    def __init__(self, support, probs):
        support = np.asarray(support, dtype=float)
        probs = np.asarray(probs, dtype=float)
        order = np.argsort(support)
        self.support = support[order]
        self.probs = probs[order]
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1.0) > 1e-9:
            raise DataError("probabilities must be non-negative and sum to 1")
        self._cum = np.cumsum(self.probs)

    def cdf(self, y):
        idx = np.searchsorted(self.support, y, side="right")
        return np.concatenate(([0.0], self._cum))[idx]

    def cdf_left(self, y):
        idx = np.searchsorted(self.support, y, side="left")
        return np.concatenate(([0.0], self._cum))[idx]

    def quantile(self, u):
        u = np.clip(u, 0.0, 1.0)
        idx = np.searchsorted(self._cum, u, side="left")
        idx = np.minimum(idx, len(self.support) - 1)
        return self.support[idx]


class UniformDistribution(Distribution):
    def cdf(self, y):
        return np.clip(y, 0.0, 1.0)

    cdf_left = cdf

    def quantile(self, u):
        return np.clip(u, 0.0, 1.0)


class LocScaleMixture(Distribution):
    """Mixture of location-scale continuous components, optionally with a
    point mass at zero (zero-inflated regime)."""

    def __init__(self, weights, locs, scales, family="gaussian", zero_mass=0.0):
        self.weights = np.asarray(weights, dtype=float)
        self.locs = np.asarray(locs, dtype=float)
        self.scales = np.asarray(scales, dtype=float)
        self.family = MARGIN_FAMILIES[family] if isinstance(family, str) else family
        self.zero_mass = float(zero_mass)
        total = self.weights.sum() + self.zero_mass
        if abs(total - 1.0) > 1e-8:
            raise DataError(f"mixture weights sum to {total}, expected 1")

    def _continuous_cdf(self, y):
        y = np.asarray(y, dtype=float)
        z = (y[..., None] - self.locs) / self.scales
        return np.sum(self.weights * self.family.cdf(z), axis=-1)

    def cdf(self, y):
        out = self._continuous_cdf(y) + self.zero_mass * (np.asarray(y) >= 0.0)
        return out if np.ndim(y) else float(out)

    def cdf_left(self, y):
        out = self._continuous_cdf(y) + self.zero_mass * (np.asarray(y) > 0.0)
        return out if np.ndim(y) else float(out)

    def atom(self, y):
        out = self.zero_mass * (np.asarray(y) == 0.0)
        return out if np.ndim(y) else float(out)

    def quantile(self, u):
        scalar = np.ndim(u) == 0
        u = np.atleast_1d(np.clip(u, 1e-15, 1.0 - 1e-15))
        lo = np.full(u.shape, float(np.min(self.locs + self.scales
                                           * self.family.ppf(1e-14))))
        hi = np.full(u.shape, float(np.max(self.locs + self.scales
                                           * self.family.ppf(1.0 - 1e-14))))
        lo = np.minimum(lo, -1.0)
        hi = np.maximum(hi, 1.0)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            ge = self.cdf(mid) >= u
            hi = np.where(ge, mid, hi)
            lo = np.where(ge, lo, mid)
            if np.max(hi - lo) < 1e-13 * max(1.0, np.max(np.abs(hi))):
                break
        if self.zero_mass > 0.0:
            # bisection only approaches the atom; land exactly on it so
            # that atom(quantile(u)) sees the mass
            gl0 = float(self._continuous_cdf(np.float64(0.0)))
            hi = np.where((u > gl0) & (u <= gl0 + self.zero_mass), 0.0, hi)
        return float(hi[0]) if scalar else hi


class PoissonMixture(Distribution):
    """Mixture of Poisson laws (a plain Poisson when one component)."""

    def __init__(self, weights, lams):
        self.weights = np.atleast_1d(np.asarray(weights, dtype=float))
        self.lams = np.atleast_1d(np.asarray(lams, dtype=float))
        if abs(self.weights.sum() - 1.0) > 1e-8:
            raise DataError("mixture weights must sum to 1")

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        k = np.floor(y)
        out = np.sum(self.weights * stats.poisson.cdf(k[..., None], self.lams),
                     axis=-1)
        return out if np.ndim(y) else float(out)

    def cdf_left(self, y):
        y = np.asarray(y, dtype=float)
        is_int = (y == np.floor(y)) & (y >= 0)
        k = np.where(is_int, y - 1, np.floor(y))
        out = np.sum(self.weights * stats.poisson.cdf(k[..., None], self.lams),
                     axis=-1)
        return out if np.ndim(y) else float(out)

    def atom(self, y):
        y = np.asarray(y, dtype=float)
        is_int = (y == np.floor(y)) & (y >= 0)
        out = np.where(
            is_int,
            np.sum(self.weights * stats.poisson.pmf(y[..., None], self.lams),
                   axis=-1),
            0.0)
        return out if np.ndim(y) else float(out)

    def quantile(self, u):
        scalar = np.ndim(u) == 0
        u = np.atleast_1d(np.clip(u, 1e-15, 1.0 - 1e-15))
        hi = int(np.max(stats.poisson.ppf(np.max(u), np.max(self.lams)))) + 2
        lo = np.full(u.shape, -1.0)
        hi = np.full(u.shape, float(hi))
        while np.any(hi - lo > 1):
            mid = np.floor(0.5 * (lo + hi))
            ge = self.cdf(mid) >= u
            hi = np.where(ge, mid, hi)
            lo = np.where(ge, lo, mid)
        return float(hi[0]) if scalar else hi


class ConstantTrace(SeriesTrace):
    """Same conditional law at every time point (i.i.d. models)."""

    def __init__(self, dist: Distribution, n: int, start: int = 0):
        self.dist = dist
        self.n = n
        self.start = start

    def at(self, t):
        return self.dist

    def pit_parts(self, x):
        x = np.asarray(x, dtype=float)
        return np.asarray(self.dist.cdf_left(x), dtype=float), \
            np.asarray(self.dist.atom(x), dtype=float)

    def quantile_path(self, u):
        return np.asarray(self.dist.quantile(np.asarray(u, dtype=float)))


class LocScaleMixtureTrace(SeriesTrace):
    """Per-time mixture of location-scale components.

    Parameters
    ----------
    weights : ndarray (n, J)
        Mixture weights of the continuous components at each t.
    locs : ndarray (n, J)
        Component locations (regime conditional means).
    scales : ndarray (J,) or (n, J)
        Component scales.
    family : str
        Noise family name from ``MARGIN_FAMILIES``.
    zero_mass : ndarray (n,), optional
        Point mass at zero (weights + zero_mass must sum to 1 per t).
    """

    def __init__(self, weights, locs, scales, family="gaussian",
                 zero_mass=None, start=0):
        self.weights = np.asarray(weights, dtype=float)
        self.locs = np.asarray(locs, dtype=float)
        n, J = self.weights.shape
        scales = np.asarray(scales, dtype=float)
        self.scales = np.broadcast_to(scales, (n, J)).copy() \
            if scales.ndim == 1 else scales
        self.family = MARGIN_FAMILIES[family] if isinstance(family, str) else family
        self.zero_mass = (np.zeros(n) if zero_mass is None
                          else np.asarray(zero_mass, dtype=float))
        self.n = n
        self.start = start

    def at(self, t):
        return LocScaleMixture(self.weights[t], self.locs[t], self.scales[t],
                               self.family, self.zero_mass[t])

    def _cont_cdf(self, y):
        z = (np.asarray(y, dtype=float)[:, None] - self.locs) / self.scales
        return np.sum(self.weights * self.family.cdf(z), axis=1)

    def pit_parts(self, x):
        x = np.asarray(x, dtype=float)
        cl = self._cont_cdf(x) + self.zero_mass * (x > 0.0)
        return cl, self.zero_mass * (x == 0.0)

    def quantile_path(self, u):
        u = np.clip(np.asarray(u, dtype=float), 1e-15, 1.0 - 1e-15)
        zlo = float(self.family.ppf(1e-14))
        zhi = float(self.family.ppf(1.0 - 1e-14))
        lo = np.minimum(np.min(self.locs + self.scales * zlo, axis=1), -1.0)
        hi = np.maximum(np.max(self.locs + self.scales * zhi, axis=1), 1.0)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            cdf = self._cont_cdf(mid) + self.zero_mass * (mid >= 0.0)
            ge = cdf >= u
            hi = np.where(ge, mid, hi)
            lo = np.where(ge, lo, mid)
            if np.max(hi - lo) < 1e-13 * max(1.0, float(np.max(np.abs(hi)))):
                break
        if np.any(self.zero_mass > 0.0):
            # snap into the zero atom (see LocScaleMixture.quantile)
            gl0 = self._cont_cdf(np.zeros(self.n))
            in_atom = (u > gl0) & (u <= gl0 + self.zero_mass)
            hi = np.where(in_atom, 0.0, hi)
        return hi


class PoissonMixtureTrace(SeriesTrace):
    """Per-time mixture of Poisson laws (count models)."""

    def __init__(self, weights, lams, start=0):
        self.weights = np.atleast_2d(np.asarray(weights, dtype=float))
        self.lams = np.atleast_2d(np.asarray(lams, dtype=float))
        self.n = self.weights.shape[0]
        self.start = start

    def at(self, t):
        return PoissonMixture(self.weights[t], self.lams[t])

    def pit_parts(self, x):
        x = np.asarray(x, dtype=float)
        k = x[:, None]
        cl = np.sum(self.weights * stats.poisson.cdf(k - 1, self.lams), axis=1)
        at = np.sum(self.weights * stats.poisson.pmf(k, self.lams), axis=1)
        return cl, at

    def quantile_path(self, u):
        u = np.clip(np.asarray(u, dtype=float), 1e-15, 1.0 - 1e-15)
        if self.weights.shape[1] == 1:
            return stats.poisson.ppf(u, self.lams[:, 0])
        hi0 = float(np.max(stats.poisson.ppf(np.max(u), np.max(self.lams)))) + 2
        lo = np.full(self.n, -1.0)
        hi = np.full(self.n, hi0)
        while np.any(hi - lo > 1):
            mid = np.floor(0.5 * (lo + hi))
            cdf = np.sum(self.weights * stats.poisson.cdf(mid[:, None], self.lams),
                         axis=1)
            ge = cdf >= u
            hi = np.where(ge, mid, hi)
            lo = np.where(ge, lo, mid)
        return hi
