"""INGARCH(p, q) count model: X_t | past ~ Poisson(lambda_t) with

    lambda_t = omega + sum_i alpha_i X_{t-i} + sum_j beta_j lambda_{t-j}

and sum alpha + sum beta < 1 for stationarity.  Pre-sample values of
both X and lambda are set to the unconditional mean
omega / (1 - sum alpha - sum beta), so the recursion and the
conditional trace are defined from t = 0.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats
from scipy.special import gammaln

from ..core import DataError
from ..distributions import PoissonMixtureTrace
from .hmm import ModelFitError

__all__ = ["IngarchSpec", "IngarchFitResult", "fit_ingarch",
           "simulate_ingarch", "ingarch_intensities"]

STATIONARITY_MARGIN = 1e-6


@dataclass
class IngarchSpec:
    omega: float
    alpha: tuple[float, ...] = ()
    beta: tuple[float, ...] = ()

    def __post_init__(self):
        self.alpha = tuple(float(a) for a in np.atleast_1d(self.alpha)) \
            if not isinstance(self.alpha, tuple) else tuple(self.alpha)
        self.beta = tuple(float(b) for b in np.atleast_1d(self.beta)) \
            if not isinstance(self.beta, tuple) else tuple(self.beta)
        if self.omega <= 0:
            raise DataError("omega must be positive")
        if any(a < 0 for a in self.alpha) or any(b < 0 for b in self.beta):
            raise DataError("alpha and beta must be non-negative")
        if sum(self.alpha) + sum(self.beta) >= 1.0:
            raise DataError("sum(alpha) + sum(beta) must be < 1")

    @property
    def mean(self) -> float:
        return self.omega / (1.0 - sum(self.alpha) - sum(self.beta))


@dataclass
class IngarchFitResult:
    spec: IngarchSpec
    loglik: float
    converged: bool
    n_iter: int


def ingarch_intensities(spec: IngarchSpec, x: np.ndarray) -> np.ndarray:
    """Conditional means lambda_t given the observed series."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    p, q = len(spec.alpha), len(spec.beta)
    m = spec.mean
    lam = np.empty(n)
    for t in range(n):
        v = spec.omega
        for i in range(1, p + 1):
            v += spec.alpha[i - 1] * (x[t - i] if t - i >= 0 else m)
        for j in range(1, q + 1):
            v += spec.beta[j - 1] * (lam[t - j] if t - j >= 0 else m)
        lam[t] = v
    return lam


def simulate_ingarch(spec: IngarchSpec, n: int, rng, uniforms=None):
    """Simulate a path and its exact conditional trace.

    When ``uniforms`` is given, X_t is the Poisson quantile of u_t at
    intensity lambda_t (copula-driven generation); otherwise counts are
    drawn directly.
    """
    p, q = len(spec.alpha), len(spec.beta)
    m = spec.mean
    x = np.zeros(n)
    lam = np.empty(n)
    for t in range(n):
        v = spec.omega
        for i in range(1, p + 1):
            v += spec.alpha[i - 1] * (x[t - i] if t - i >= 0 else m)
        for j in range(1, q + 1):
            v += spec.beta[j - 1] * (lam[t - j] if t - j >= 0 else m)
        lam[t] = v
        x[t] = (stats.poisson.ppf(uniforms[t], v) if uniforms is not None
                else rng.poisson(v))
    trace = PoissonMixtureTrace(np.ones((n, 1)), lam[:, None], start=0)
    return x, trace


def _negloglik(params, x, p, q):
    spec_ok = params[0] > 0 and np.all(params[1:] >= 0) \
        and params[1:].sum() < 1.0
    if not spec_ok:
        return 1e12
    spec = IngarchSpec(params[0], tuple(params[1:1 + p]),
                       tuple(params[1 + p:]))
    lam = ingarch_intensities(spec, x)
    return float(np.sum(lam - x * np.log(lam)))


def fit_ingarch(x, p: int = 1, q: int = 1, max_iter: int = 500) -> IngarchFitResult:
    """Conditional maximum likelihood fit of an INGARCH(p, q) model.

    Uses SLSQP with the stationarity constraint
    sum(alpha) + sum(beta) <= 1 - 1e-6.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x != np.floor(x)):
        raise DataError("INGARCH requires non-negative integer data")
    if len(x) < 10 * (p + q + 1):
        raise DataError("series too short for the requested model")
    xbar = max(x.mean(), 0.1)
    a0 = np.full(p, 0.1 / max(p, 1))
    b0 = np.full(q, 0.5 / max(q, 1)) if q else np.empty(0)
    x0 = np.concatenate(([xbar * (1 - a0.sum() - b0.sum())], a0, b0))
    bounds = [(1e-8, None)] + [(0.0, 1.0 - STATIONARITY_MARGIN)] * (p + q)
    constraints = [{"type": "ineq",
                    "fun": lambda th: 1.0 - STATIONARITY_MARGIN - th[1:].sum()}]
    with warnings.catch_warnings():
        # SLSQP proposes points marginally outside bounds and scipy warns
        # while clipping them; the clipped point is what gets evaluated
        warnings.filterwarnings("ignore", message=".*outside bounds.*",
                                category=RuntimeWarning)
        res = optimize.minimize(_negloglik, x0, args=(x, p, q), method="SLSQP",
                                bounds=bounds, constraints=constraints,
                                options={"maxiter": max_iter, "ftol": 1e-12})
    if not np.isfinite(res.fun):
        raise ModelFitError("INGARCH likelihood did not evaluate")
    coef = np.maximum(res.x[1:], 0.0)
    total = coef.sum()
    if total >= 1.0 - STATIONARITY_MARGIN:
        coef *= (1.0 - 2.0 * STATIONARITY_MARGIN) / total
    spec = IngarchSpec(max(res.x[0], 1e-8), tuple(coef[:p]), tuple(coef[p:]))
    ll = -(res.fun + float(np.sum(gammaln(x + 1.0))))
    return IngarchFitResult(spec, ll, bool(res.success), int(res.nit))
