"""Dynamic model adapters exposing conditional distribution traces.

Supported models: AR(p) Gaussian hidden Markov models with optional
exogenous covariates and an optional always-zero regime, AR(p) Poisson
hidden Markov models, and INGARCH(p, q) count models.  Each adapter
offers ``fit_*`` (maximum likelihood / EM), ``simulate_*`` and
``conditional_trace``; fitted specs serialise to and from plain dicts
for the CLI JSON files.
"""
from .hmm import (GaussianHmmSpec, PoissonHmmSpec, HmmFitResult,
                  ModelFitError, SingularFitError, fit_gaussian_hmm,
                  fit_poisson_hmm, simulate_gaussian_hmm,
                  simulate_poisson_hmm, stationary_distribution)
from .ingarch import IngarchSpec, IngarchFitResult, fit_ingarch, simulate_ingarch
from .serialize import model_from_dict, model_to_dict, conditional_trace

__all__ = [
    "GaussianHmmSpec",
    "PoissonHmmSpec",
    "IngarchSpec",
    "HmmFitResult",
    "IngarchFitResult",
    "ModelFitError",
    "SingularFitError",
    "fit_gaussian_hmm",
    "fit_poisson_hmm",
    "fit_ingarch",
    "simulate_gaussian_hmm",
    "simulate_poisson_hmm",
    "simulate_ingarch",
    "stationary_distribution",
    "conditional_trace",
    "model_to_dict",
    "model_from_dict",
]
