"""Tests of independence between time series with arbitrary margins.

The workflow: fit (or supply) a dynamic model per series, transform each
series into generalized errors with the randomized probability integral
transform, then test the errors for cross-series dependence at all lags
up to a chosen horizon with rank-based Cramer-von Mises statistics and
score-based dependence coefficients, combined into portmanteau
statistics with asymptotic p-values.

>>> from geitest import test_independence
>>> report = test_independence(panel, trace)          # doctest: +SKIP
>>> report.combined["W"].p_value                      # doctest: +SKIP
"""
from __future__ import annotations

__version__ = "0.1.0"

from .core import (CombinedStatistic, ConditionalDistributionTrace, DataError,
                   Distribution, GeneralizedErrorPanel, LagBlock,
                   PerTermStatistic, SeriesPanel, SeriesTrace,
                   StatisticReport, SubsetLagFamily, build_subset_lag_family)
from .pit import (RandomizationPlan, chi0, j_transform, randomized_pit)
from .mobius import circular_ranks, cvm_all_terms, cvm_oracle, cvm_statistic
from .depmeasures import (SCORE_FAMILIES, ScoreFamily, dependence_coefficient,
                          generalized_cross_correlation, score_values)
from .asymptotics import (XiDistribution, bias_term, edgeworth_tail_probability,
                          family_limit_cumulants, null_mean, xi_cumulants,
                          xi_distribution, xi_tail_probability)
from .pipeline import DEFAULT_SCORE_KINDS, compute_report
from .dependogram import render_dependogram, write_dependogram
from .models import (GaussianHmmSpec, HmmFitResult, IngarchFitResult,
                     IngarchSpec, ModelFitError, PoissonHmmSpec,
                     SingularFitError, conditional_trace, fit_gaussian_hmm,
                     fit_ingarch, fit_poisson_hmm, model_from_dict,
                     model_to_dict, simulate_gaussian_hmm, simulate_ingarch,
                     simulate_poisson_hmm, stationary_distribution)
from .simulate import (CopulaSpec, McStudyResult, McStudySpec, generate_dgp,
                       kendall_tau_parameter, run_study, sample_copula)

__all__ = [
    "__version__",
    "test_independence",
    # core containers
    "DataError", "SeriesPanel", "Distribution", "SeriesTrace",
    "ConditionalDistributionTrace", "GeneralizedErrorPanel", "LagBlock",
    "SubsetLagFamily", "build_subset_lag_family", "PerTermStatistic",
    "CombinedStatistic", "StatisticReport",
    # transforms
    "RandomizationPlan", "randomized_pit", "j_transform", "chi0",
    # statistics
    "circular_ranks", "cvm_statistic", "cvm_all_terms", "cvm_oracle",
    "ScoreFamily", "SCORE_FAMILIES", "score_values",
    "generalized_cross_correlation", "dependence_coefficient",
    # limit laws
    "XiDistribution", "xi_distribution", "xi_tail_probability",
    "xi_cumulants", "bias_term", "null_mean", "family_limit_cumulants",
    "edgeworth_tail_probability",
    # pipeline
    "DEFAULT_SCORE_KINDS", "compute_report",
    "render_dependogram", "write_dependogram",
    # models
    "GaussianHmmSpec", "PoissonHmmSpec", "HmmFitResult", "IngarchSpec",
    "IngarchFitResult", "ModelFitError", "SingularFitError",
    "fit_gaussian_hmm", "fit_poisson_hmm", "fit_ingarch",
    "simulate_gaussian_hmm", "simulate_poisson_hmm", "simulate_ingarch",
    "stationary_distribution", "conditional_trace", "model_to_dict",
    "model_from_dict",
    # simulation studies
    "CopulaSpec", "sample_copula", "kendall_tau_parameter", "generate_dgp",
    "McStudySpec", "McStudyResult", "run_study",
]


def test_independence(panel, trace, m: int = 1, seed: int = 0, **kwargs):
    """One-call wrapper: randomized PIT then the full test battery.

    ``panel`` is a SeriesPanel (or (n, d) array), ``trace`` the
    conditional laws of its columns; remaining keyword arguments go to
    ``compute_report``.
    """
    if not isinstance(panel, SeriesPanel):
        panel = SeriesPanel(panel)
    errors = randomized_pit(panel, trace, RandomizationPlan(m, seed))
    kwargs.setdefault("metadata", {})["seed"] = seed
    return compute_report(errors, **kwargs)
