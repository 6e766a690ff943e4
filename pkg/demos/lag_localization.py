"""Localizing a hidden lagged link with the dependogram.

A count series and an AR(1) series are coupled through a tent-map
copula three steps apart, a dependence that is invisible to
cross-correlation (the tent map has zero linear correlation).  The
Cramer-von Mises bars flag the offending lag; the correlation-based
statistic H stays quiet.
"""
import numpy as np

from geitest.dependogram import dependogram_rows, write_dependogram
from geitest.pipeline import compute_report
from geitest.pit import RandomizationPlan, randomized_pit
from geitest.simulate import CopulaSpec, generate_dgp

LAG = 3

panel, trace = generate_dgp("dgp2", 800, np.random.default_rng(4),
                            copula=CopulaSpec("tentmap"),
                            lag_shift=LAG)
errors = randomized_pit(panel, trace, RandomizationPlan(m=1, seed=1))
report = compute_report(errors, m2=5)

print("combined statistics:")
for name in ("W", "F", "H"):
    stat = report.combined[name]
    print(f"  {name}: p = {stat.p_value:.2e}")
print("(H sees nothing: the tent map carries no linear correlation)")

print(f"\nper-lag bars around the injected lag {LAG}:")
for row in dependogram_rows(report, alpha=0.05):
    mark = " <-- " if row["significant"] else ""
    print(f"  lags {row['lags']:>7s}  S = {row['statistic']:.4f}  "
          f"critical {row['critical']:.4f}{mark}")

write_dependogram(report, "lag_localization.svg", alpha=0.05)
print("\nwrote lag_localization.svg")
