"""The limit law machinery behind the p-values.

Each per-lag statistic converges to a weighted chi-square sum whose
weights depend only on the subset size d; tail probabilities come from
characteristic-function inversion.  The summed statistic W instead
uses a six-cumulant tail expansion.  This script prints the reference
quantiles and checks the two routes against each other.
"""
import numpy as np
from scipy import stats

from geitest.asymptotics import (bias_term, edgeworth_tail_probability,
                                 family_limit_cumulants, null_mean,
                                 xi_cumulants, xi_distribution)
from geitest.core import build_subset_lag_family

for d in (2, 3):
    dist = xi_distribution(d)
    print(f"limit law for subset size {d}: mean {dist.mean:.6f} "
          f"(= 6^-{d}), sd {np.sqrt(xi_cumulants(d)[1]):.6f}")
    for alpha in (0.10, 0.05, 0.01):
        q = dist.quantile_upper(alpha)
        print(f"  upper {alpha:>4} quantile {q:.6f}   "
              f"tail there {dist.tail_probability(q):.6f}")

print("\nfinite-n centering of the raw statistic:")
for n in (20, 100, 300):
    print(f"  n = {n:3d}: null mean {null_mean(n, 2):.6f} "
          f"(bias term {bias_term(n, 2):+.2e})")

# the family-level statistic W: cumulants add across the 11 terms of
# the default d = 2 family, and the expansion supplies its p-values
fam = build_subset_lag_family(2, m2=5)
kap = family_limit_cumulants(fam)
print(f"\nd = 2 family: {fam.total_terms} terms, "
      f"limit mean {kap[0]:.4f}, sd {np.sqrt(kap[1]):.4f}")
print("tail of W at a few points (expansion vs simulated limit):")
rng = np.random.default_rng(0)
dist = xi_distribution(2)
draws = np.zeros(100_000)
for lam, mult in zip(dist.eigenvalues, dist.multiplicities):
    draws += lam * rng.chisquare(11 * mult, size=len(draws))
for x in (0.45, 0.55, 0.70):
    print(f"  P(W > {x}) = {edgeworth_tail_probability(x, kap):.4f}   "
          f"mc {np.mean(draws > x):.4f}")

# correlation-type statistics use plain chi-square references
print(f"\nchi-square reference for H: df = {fam.total_terms}, "
      f"95% point {stats.chi2.ppf(0.95, fam.total_terms):.3f}")
