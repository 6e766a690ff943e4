"""Regime-switching AR models with Gaussian or Poisson emissions.

The observation at time t, conditional on regime j and the past, is

    Gaussian:  X_t ~ N(mu_tj, sigma_j^2)
    Poisson:   X_t ~ Poisson(mu_tj)

with mu_tj = theta_j' Z_t + sum_i phi_ij X_{t-i} and a hidden Markov
regime chain with transition matrix Q.  With ``zero_inflated`` the
first regime is a point mass at zero (Gaussian case only): an exact
zero forces that regime, any other value excludes it.

Fitting is plain EM (Baum-Welch): the observed-data log-likelihood is
recorded every iteration and must never decrease.  The Gaussian M-step
is weighted least squares; the Poisson M-step is a bounded
minimisation of the weighted negative log-likelihood warm-started at
the previous parameters, which preserves EM monotonicity.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from ..core import DataError
from ..distributions import (MARGIN_FAMILIES, LocScaleMixtureTrace,
                             PoissonMixtureTrace)

__all__ = [
    "ModelFitError",
    "SingularFitError",
    "GaussianHmmSpec",
    "PoissonHmmSpec",
    "HmmFitResult",
    "fit_gaussian_hmm",
    "fit_poisson_hmm",
    "simulate_gaussian_hmm",
    "simulate_poisson_hmm",
    "stationary_distribution",
]

POSTERIOR_MASS_FLOOR = 1e-6


class ModelFitError(RuntimeError):
    """Raised when an optimisation cannot produce a usable model."""


class SingularFitError(ModelFitError):
    """Raised when a regime degenerates (vanishing mass or variance)."""


def stationary_distribution(Q: np.ndarray) -> np.ndarray:
    """Stationary law of a transition matrix (left Perron eigenvector)."""
    Q = np.asarray(Q, dtype=float)
    vals, vecs = np.linalg.eig(Q.T)
    idx = int(np.argmin(np.abs(vals - 1.0)))
    pi = np.real(vecs[:, idx])
    pi = np.abs(pi)
    return pi / pi.sum()


def _check_transition(Q, J):
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (J, J) or np.any(Q < -1e-12):
        raise DataError("transition matrix must be J x J, non-negative")
    rows = Q.sum(axis=1)
    if np.any(np.abs(rows - 1.0) > 1e-6):
        raise DataError("transition matrix rows must sum to 1")
    return Q / rows[:, None]


@dataclass
class GaussianHmmSpec:
    """AR(p) Gaussian HMM, optionally zero-inflated.

    ``n_regimes`` counts all regimes.  When ``zero_inflated`` the first
    regime is the point mass at zero and carries no parameters, so
    ``theta``/``phi``/``sigma`` describe the remaining continuous
    regimes (one column each).  ``theta`` has one row per covariate
    (default: intercept only), ``phi`` one row per AR lag.  ``noise``
    selects the standardized innovation family ("gaussian",
    "exponential" or "pareto6"); only "gaussian" can be fitted.
    """

    n_regimes: int
    theta: np.ndarray
    sigma: np.ndarray
    Q: np.ndarray
    phi: np.ndarray | None = None
    zero_inflated: bool = False
    noise: str = "gaussian"

    def __post_init__(self):
        jc = self.n_continuous
        self.theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        if self.theta.shape[1] != jc:
            raise DataError("theta needs one column per continuous regime")
        self.sigma = np.asarray(self.sigma, dtype=float).reshape(jc)
        if np.any(self.sigma <= 0):
            raise DataError("sigma must be positive")
        self.phi = (np.zeros((0, jc)) if self.phi is None
                    else np.atleast_2d(np.asarray(self.phi, dtype=float)))
        self.Q = _check_transition(self.Q, self.n_regimes)
        if self.noise not in MARGIN_FAMILIES:
            raise DataError(f"unknown noise family {self.noise!r}")

    @property
    def n_continuous(self) -> int:
        return self.n_regimes - int(self.zero_inflated)

    @property
    def ar_order(self) -> int:
        return 0 if self.phi is None else self.phi.shape[0]


@dataclass
class PoissonHmmSpec:
    """AR(p) Poisson HMM with identity link: the conditional mean of
    regime j is theta_j' Z_t + sum_i phi_ij X_{t-i} (all coefficients
    non-negative)."""

    n_regimes: int
    theta: np.ndarray
    Q: np.ndarray
    phi: np.ndarray | None = None

    def __post_init__(self):
        self.theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        if self.theta.shape[1] != self.n_regimes:
            raise DataError("theta needs one column per regime")
        self.phi = (np.zeros((0, self.n_regimes)) if self.phi is None
                    else np.atleast_2d(np.asarray(self.phi, dtype=float)))
        if np.any(self.theta < 0) or np.any(self.phi < 0):
            raise DataError("identity-link Poisson coefficients must be >= 0")
        self.Q = _check_transition(self.Q, self.n_regimes)

    @property
    def ar_order(self) -> int:
        return self.phi.shape[0]


@dataclass
class HmmFitResult:
    spec: GaussianHmmSpec | PoissonHmmSpec
    loglik_path: list[float]
    converged: bool
    n_iter: int
    initial_probs: np.ndarray

    @property
    def loglik(self) -> float:
        return self.loglik_path[-1]


def _design(x, covariates, p):
    """Rows [Z_t, x_{t-1}, ..., x_{t-p}] for t = p..n-1."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if covariates is None:
        Z = np.ones((n, 1))
    else:
        Z = np.atleast_2d(np.asarray(covariates, dtype=float))
        if Z.shape[0] != n:
            raise DataError("covariates must align with the series")
    cols = [Z[p:]]
    for i in range(1, p + 1):
        cols.append(x[p - i:n - i][:, None])
    return np.hstack(cols), x[p:]


def _forward_backward(log_b, Q, pi0):
    """Scaled forward-backward; returns gamma, xi sums and loglik."""
    n, J = log_b.shape
    shift = log_b.max(axis=1, keepdims=True)
    shift[~np.isfinite(shift)] = 0.0
    b = np.exp(log_b - shift)
    alpha = np.empty((n, J))
    c = np.empty(n)
    a = pi0 * b[0]
    c[0] = a.sum()
    if c[0] <= 0:
        raise ModelFitError("data impossible under the current model")
    alpha[0] = a / c[0]
    for t in range(1, n):
        a = (alpha[t - 1] @ Q) * b[t]
        c[t] = a.sum()
        if c[t] <= 0:
            raise ModelFitError("data impossible under the current model")
        alpha[t] = a / c[t]
    beta = np.empty((n, J))
    beta[-1] = 1.0
    xi_sum = np.zeros((J, J))
    for t in range(n - 2, -1, -1):
        nxt = b[t + 1] * beta[t + 1]
        xi = (alpha[t][:, None] * Q) * nxt[None, :]
        xi_sum += xi / max(xi.sum(), 1e-300)
        beta[t] = (Q @ nxt) / c[t + 1]
    gamma = alpha * beta
    gamma /= gamma.sum(axis=1, keepdims=True)
    loglik = float(np.log(c).sum() + shift.sum())
    return gamma, xi_sum, loglik


def _update_transition(gamma, xi_sum, Q_old):
    J = Q_old.shape[0]
    Q = np.empty_like(Q_old)
    denom = xi_sum.sum(axis=1)
    for i in range(J):
        if denom[i] > 1e-12:
            Q[i] = xi_sum[i] / denom[i]
        else:
            Q[i] = np.full(J, 1.0 / J)  # regime never visited
    return Q


def _check_monotone(path, tol=1e-9):
    if len(path) >= 2 and path[-1] < path[-2] - tol * (1.0 + abs(path[-2])):
        raise ModelFitError(
            f"EM log-likelihood decreased: {path[-2]} -> {path[-1]}")


def _quantile_split_init(y, W, n_regimes):
    """Deterministic initial regimes: pooled regression, residuals split
    into contiguous quantile blocks for means and volatilities."""
    beta0, *_ = np.linalg.lstsq(W, y, rcond=None)
    resid = y - W @ beta0
    order = np.argsort(resid)
    blocks = np.array_split(order, n_regimes)
    betas, sigmas = [], []
    floor = max(np.std(y) * 1e-3, 1e-8)
    for blk in blocks:
        b = beta0.copy()
        b[0] += resid[blk].mean() if len(blk) else 0.0
        betas.append(b)
        sigmas.append(max(resid[blk].std() if len(blk) > 1 else np.std(resid),
                          floor))
    return np.column_stack(betas), np.array(sigmas)


def fit_gaussian_hmm(x, n_regimes: int, ar_order: int = 0, covariates=None,
                     zero_inflated: bool = False, max_iter: int = 500,
                     tol: float = 1e-8) -> HmmFitResult:
    """EM fit of an AR(p) Gaussian HMM.

    Parameters
    ----------
    x : array_like
        Observed series.
    n_regimes : int
        Total number of regimes (including the zero regime when
        ``zero_inflated``).
    ar_order : int
        Number of autoregressive lags p; the first p observations are
        conditioned on.
    covariates : ndarray (n, q), optional
        Exogenous regressors Z_t; defaults to an intercept.
    zero_inflated : bool
        Make regime 1 a point mass at zero.

    Raises
    ------
    SingularFitError
        When a continuous regime's posterior mass or variance collapses.
    """
    x = np.asarray(x, dtype=float)
    jc = n_regimes - int(zero_inflated)
    if jc < 1:
        raise DataError("need at least one continuous regime")
    if len(x) - ar_order <= n_regimes * (ar_order + 2):
        raise DataError("series too short for the requested model")
    W, y = _design(x, covariates, ar_order)
    n = len(y)
    is_zero = (y == 0.0)
    if zero_inflated:
        nz = ~is_zero
        betas, sigmas = _quantile_split_init(y[nz], W[nz], jc)
    else:
        betas, sigmas = _quantile_split_init(y, W, jc)
    Q = np.full((n_regimes, n_regimes), 1.0 / n_regimes)
    pi0 = np.full(n_regimes, 1.0 / n_regimes)
    path: list[float] = []
    converged = False
    sigma_floor = max(np.std(y) * 1e-10, 1e-300)
    for _ in range(max_iter):
        log_b = _gaussian_log_emissions(y, W, betas, sigmas, zero_inflated,
                                        is_zero)
        gamma, xi_sum, ll = _forward_backward(log_b, Q, pi0)
        path.append(ll)
        _check_monotone(path)
        if len(path) >= 2 and abs(path[-1] - path[-2]) < tol * (1 + abs(path[-2])):
            converged = True
            break
        pi0 = gamma[0]
        Q = _update_transition(gamma, xi_sum, Q)
        off = int(zero_inflated)
        for j in range(jc):
            w = gamma[:, j + off]
            mass = w.sum()
            if mass < POSTERIOR_MASS_FLOOR:
                raise SingularFitError(
                    f"regime {j + off + 1} lost all posterior mass")
            sw = np.sqrt(w)
            beta, *_ = np.linalg.lstsq(sw[:, None] * W, sw * y, rcond=None)
            resid = y - W @ beta
            s2 = float(w @ resid ** 2) / mass
            if s2 < sigma_floor ** 2:
                raise SingularFitError(f"regime {j + off + 1} variance collapsed")
            betas[:, j] = beta
            sigmas[j] = np.sqrt(s2)
    q = W.shape[1] - ar_order
    spec = GaussianHmmSpec(
        n_regimes=n_regimes, theta=betas[:q], sigma=sigmas, Q=Q,
        phi=betas[q:], zero_inflated=zero_inflated)
    return HmmFitResult(spec, path, converged, len(path), pi0)


def _gaussian_log_emissions(y, W, betas, sigmas, zero_inflated, is_zero):
    mu = W @ betas
    log_b = (-0.5 * ((y[:, None] - mu) / sigmas) ** 2
             - np.log(sigmas) - 0.5 * np.log(2 * np.pi))
    if zero_inflated:
        # under Lebesgue + delta_0: zero regime has mass 1 at {0} and
        # continuous regimes have density 0 there
        cont = np.where(is_zero[:, None], -np.inf, log_b)
        zero_col = np.where(is_zero, 0.0, -np.inf)[:, None]
        log_b = np.hstack([zero_col, cont])
    return log_b


def fit_poisson_hmm(x, n_regimes: int, ar_order: int = 0, covariates=None,
                    max_iter: int = 300, tol: float = 1e-8) -> HmmFitResult:
    """EM fit of an AR(p) Poisson HMM with identity link.

    The M-step solves a bounded weighted Poisson likelihood per regime,
    warm-started at the current coefficients so the EM objective cannot
    decrease.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x != np.floor(x)):
        raise DataError("Poisson HMM requires non-negative integer data")
    if len(x) - ar_order <= n_regimes * (ar_order + 2):
        raise DataError("series too short for the requested model")
    W, y = _design(x, covariates, ar_order)
    n, k = W.shape
    # init: quantile blocks of the observations set the intercepts apart
    order = np.argsort(y)
    blocks = np.array_split(order, n_regimes)
    coefs = np.zeros((k, n_regimes))
    for j, blk in enumerate(blocks):
        coefs[0, j] = max(y[blk].mean() if len(blk) else y.mean(), 0.05)
    bounds = [(1e-8, None)] + [(0.0, None)] * (k - 1)
    Q = np.full((n_regimes, n_regimes), 1.0 / n_regimes)
    pi0 = np.full(n_regimes, 1.0 / n_regimes)
    path: list[float] = []
    converged = False
    for _ in range(max_iter):
        mu = np.maximum(W @ coefs, 1e-12)
        log_b = stats.poisson.logpmf(y[:, None], mu)
        gamma, xi_sum, ll = _forward_backward(log_b, Q, pi0)
        path.append(ll)
        _check_monotone(path)
        if len(path) >= 2 and abs(path[-1] - path[-2]) < tol * (1 + abs(path[-2])):
            converged = True
            break
        pi0 = gamma[0]
        Q = _update_transition(gamma, xi_sum, Q)
        for j in range(n_regimes):
            w = gamma[:, j]
            if w.sum() < POSTERIOR_MASS_FLOOR:
                raise SingularFitError(f"regime {j + 1} lost all posterior mass")

            def nll(c):
                m = np.maximum(W @ c, 1e-12)
                return float(w @ (m - y * np.log(m)))

            def grad(c):
                m = np.maximum(W @ c, 1e-12)
                return W.T @ (w * (1.0 - y / m))

            res = optimize.minimize(nll, coefs[:, j], jac=grad,
                                    method="L-BFGS-B", bounds=bounds)
            if nll(res.x) <= nll(coefs[:, j]):
                coefs[:, j] = res.x
    q = k - ar_order
    spec = PoissonHmmSpec(n_regimes=n_regimes, theta=coefs[:q], Q=Q,
                          phi=coefs[q:])
    return HmmFitResult(spec, path, converged, len(path), pi0)


def _mixture_mu(spec, x, t, z_row):
    """Conditional component means at time t (missing lags read as 0)."""
    mu = z_row @ spec.theta
    for i in range(1, spec.ar_order + 1):
        mu = mu + spec.phi[i - 1] * (x[t - i] if t - i >= 0 else 0.0)
    return mu


def simulate_gaussian_hmm(spec: GaussianHmmSpec, n: int, rng,
                          uniforms=None, covariates=None):
    """Simulate a path and its exact conditional trace.

    When ``uniforms`` is given, X_t is the conditional quantile of u_t
    (so the PIT of the output recovers u exactly for continuous noise)
    and the regime is then drawn from its conditional law given X_t;
    otherwise regimes are drawn first and observations from the regime
    component.  The trace conditions on the realised regime path: its
    mixture weights at t are the transition row of regime t-1.
    """
    fam = MARGIN_FAMILIES[spec.noise]
    Z = np.ones((n, 1)) if covariates is None else np.asarray(covariates)
    J, jc = spec.n_regimes, spec.n_continuous
    off = int(spec.zero_inflated)
    pi = stationary_distribution(spec.Q)
    x = np.zeros(n)
    weights = np.empty((n, J))
    locs = np.zeros((n, jc))
    tau_prev = None
    for t in range(n):
        w = pi if tau_prev is None else spec.Q[tau_prev]
        weights[t] = w
        mu = _mixture_mu(spec, x, t, Z[t])
        locs[t] = mu
        w_cont = w[off:]
        zero_mass = w[0] if spec.zero_inflated else 0.0
        if uniforms is not None:
            u = uniforms[t]
            from ..distributions import LocScaleMixture
            dist = LocScaleMixture(w_cont, mu, spec.sigma, fam, zero_mass)
            x[t] = dist.quantile(u)
            dens = w_cont * fam.pdf((x[t] - mu) / spec.sigma) / spec.sigma
            if spec.zero_inflated:
                post = np.concatenate(([zero_mass * (x[t] == 0.0)],
                                       dens * (x[t] != 0.0)))
            else:
                post = dens
            post = post / post.sum()
            tau_prev = rng.choice(J, p=post)
        else:
            tau_prev = rng.choice(J, p=w)
            if spec.zero_inflated and tau_prev == 0:
                x[t] = 0.0
            else:
                z = fam.ppf(rng.random())
                j = tau_prev - off
                x[t] = mu[j] + spec.sigma[j] * z
    zero_mass = weights[:, 0] if spec.zero_inflated else None
    trace = LocScaleMixtureTrace(weights[:, off:], locs, spec.sigma,
                                 spec.noise, zero_mass, start=spec.ar_order)
    return x, trace


def simulate_poisson_hmm(spec: PoissonHmmSpec, n: int, rng,
                         uniforms=None, covariates=None):
    """Simulate a Poisson HMM path and its exact conditional trace."""
    from ..distributions import PoissonMixture
    Z = np.ones((n, 1)) if covariates is None else np.asarray(covariates)
    J = spec.n_regimes
    pi = stationary_distribution(spec.Q)
    x = np.zeros(n)
    weights = np.empty((n, J))
    lams = np.empty((n, J))
    tau_prev = None
    for t in range(n):
        w = pi if tau_prev is None else spec.Q[tau_prev]
        weights[t] = w
        mu = np.maximum(_mixture_mu(spec, x, t, Z[t]), 1e-12)
        lams[t] = mu
        if uniforms is not None:
            x[t] = PoissonMixture(w, mu).quantile(uniforms[t])
            post = w * stats.poisson.pmf(x[t], mu)
            post = post / post.sum()
            tau_prev = rng.choice(J, p=post)
        else:
            tau_prev = rng.choice(J, p=w)
            x[t] = rng.poisson(mu[tau_prev])
    trace = PoissonMixtureTrace(weights, lams, start=spec.ar_order)
    return x, trace
