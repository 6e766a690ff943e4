"""Model (de)serialisation and the shared conditional-trace entry point."""
from __future__ import annotations

import numpy as np
from scipy import stats

from ..core import DataError, SeriesTrace
from ..distributions import LocScaleMixtureTrace, PoissonMixtureTrace
from .hmm import (GaussianHmmSpec, PoissonHmmSpec, stationary_distribution,
                  _design, _gaussian_log_emissions)
from .ingarch import IngarchSpec, ingarch_intensities

__all__ = ["model_to_dict", "model_from_dict", "conditional_trace"]


def model_to_dict(spec) -> dict:
    """Plain-dict form of a model spec (JSON-ready)."""
    if isinstance(spec, GaussianHmmSpec):
        return {
            "kind": "gaussian_hmm",
            "n_regimes": spec.n_regimes,
            "theta": spec.theta.tolist(),
            "phi": spec.phi.tolist(),
            "sigma": spec.sigma.tolist(),
            "Q": spec.Q.tolist(),
            "zero_inflated": spec.zero_inflated,
            "noise": spec.noise,
        }
    if isinstance(spec, PoissonHmmSpec):
        return {
            "kind": "poisson_hmm",
            "n_regimes": spec.n_regimes,
            "theta": spec.theta.tolist(),
            "phi": spec.phi.tolist(),
            "Q": spec.Q.tolist(),
        }
    if isinstance(spec, IngarchSpec):
        return {"kind": "ingarch", "omega": spec.omega,
                "alpha": list(spec.alpha), "beta": list(spec.beta)}
    raise DataError(f"unknown model object {type(spec).__name__}")


def model_from_dict(payload: dict):
    kind = payload.get("kind")
    if kind == "gaussian_hmm":
        return GaussianHmmSpec(
            n_regimes=int(payload["n_regimes"]),
            theta=np.asarray(payload["theta"], dtype=float),
            phi=np.asarray(payload.get("phi") or
                           np.zeros((0, len(payload["sigma"]))), dtype=float),
            sigma=np.asarray(payload["sigma"], dtype=float),
            Q=np.asarray(payload["Q"], dtype=float),
            zero_inflated=bool(payload.get("zero_inflated", False)),
            noise=payload.get("noise", "gaussian"),
        )
    if kind == "poisson_hmm":
        theta = np.asarray(payload["theta"], dtype=float)
        return PoissonHmmSpec(
            n_regimes=int(payload["n_regimes"]), theta=theta,
            phi=np.asarray(payload.get("phi") or
                           np.zeros((0, theta.shape[-1])), dtype=float),
            Q=np.asarray(payload["Q"], dtype=float),
        )
    if kind == "ingarch":
        return IngarchSpec(float(payload["omega"]),
                           tuple(payload.get("alpha", ())),
                           tuple(payload.get("beta", ())))
    raise DataError(f"unknown model kind {kind!r}")


def conditional_trace(spec, x, covariates=None, initial_probs=None) -> SeriesTrace:
    """Predictive conditional laws of a series under a fitted model.

    For hidden Markov models the mixture weights at time t are the
    one-step-ahead regime probabilities from the forward filter run on
    the observed series (regimes are latent on real data); the filter
    starts from ``initial_probs`` or, by default, the stationary law of
    the transition matrix.  The first ``ar_order`` observations carry
    no conditional law and are flagged through ``trace.start``.
    """
    if isinstance(spec, IngarchSpec):
        lam = ingarch_intensities(spec, x)
        return PoissonMixtureTrace(np.ones((len(lam), 1)), lam[:, None],
                                   start=0)
    if isinstance(spec, GaussianHmmSpec):
        return _hmm_trace(spec, x, covariates, initial_probs, gaussian=True)
    if isinstance(spec, PoissonHmmSpec):
        return _hmm_trace(spec, x, covariates, initial_probs, gaussian=False)
    raise DataError(f"no conditional trace for {type(spec).__name__}")


def _hmm_trace(spec, x, covariates, initial_probs, gaussian):
    x = np.asarray(x, dtype=float)
    p = spec.ar_order
    W, y = _design(x, covariates, p)
    n = len(y)
    J = spec.n_regimes
    if gaussian:
        mu = W @ np.vstack([spec.theta, spec.phi])
        log_b = _gaussian_log_emissions(y, W, np.vstack([spec.theta, spec.phi]),
                                        spec.sigma, spec.zero_inflated,
                                        y == 0.0)
    else:
        mu = np.maximum(W @ np.vstack([spec.theta, spec.phi]), 1e-12)
        log_b = stats.poisson.logpmf(y[:, None], mu)
    pi = (stationary_distribution(spec.Q) if initial_probs is None
          else np.asarray(initial_probs, dtype=float))
    predictive = np.empty((n, J))
    filt = pi
    for t in range(n):
        predictive[t] = filt
        post = filt * np.exp(log_b[t] - log_b[t].max())
        total = post.sum()
        if total <= 0:
            raise DataError("observation impossible under the model trace")
        filt = (post / total) @ spec.Q
    # re-align with the full series; leading rows are placeholders
    full_pred = np.vstack([np.tile(pi, (p, 1)), predictive])
    if gaussian:
        full_mu = np.vstack([np.zeros((p, mu.shape[1])), mu])
        zero_mass = full_pred[:, 0] if spec.zero_inflated else None
        off = 1 if spec.zero_inflated else 0
        weights = full_pred[:, off:]
        return LocScaleMixtureTrace(weights, full_mu, spec.sigma, spec.noise,
                                    zero_mass, start=p)
    full_mu = np.vstack([np.ones((p, mu.shape[1])), mu])
    return PoissonMixtureTrace(full_pred, full_mu, start=p)
