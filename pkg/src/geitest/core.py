"""Shared containers for the lagged-independence testing pipeline.

The pipeline moves through three representations:

1. ``SeriesPanel`` -- the observed series, one column per series.
2. ``ConditionalDistributionTrace`` -- per-observation conditional laws
   produced by a fitted (or known) dynamic model, one ``SeriesTrace`` per
   column.  Each law exposes ``cdf``, ``cdf_left``, ``atom`` and
   ``quantile`` so that discrete and mixed distributions are handled
   exactly.
3. ``GeneralizedErrorPanel`` -- the randomized probability integral
   transforms of the panel, uniform on [0, 1] under a correctly
   specified model.

Statistics are indexed by (subset, lag vector) pairs collected in a
``SubsetLagFamily``; results travel in a ``StatisticReport``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

__all__ = [
    "DataError",
    "SeriesPanel",
    "Distribution",
    "SeriesTrace",
    "ConditionalDistributionTrace",
    "GeneralizedErrorPanel",
    "LagBlock",
    "SubsetLagFamily",
    "build_subset_lag_family",
    "PerTermStatistic",
    "CombinedStatistic",
    "StatisticReport",
]

MAX_SERIES = 3


class DataError(ValueError):
    """Raised when input data violates a documented precondition."""


@dataclass(frozen=True)
class SeriesPanel:
    """Aligned multivariate sample, one column per series.

    Parameters
    ----------
    values : ndarray, shape (n, d)
        Observations.  ``d`` must be 2 or 3; all entries finite.
    names : tuple of str, optional
        Column labels, defaulting to ``X1 .. Xd``.
    """

    values: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise DataError("panel values must be a 2-D array")
        n, d = v.shape
        if not 2 <= d <= MAX_SERIES:
            raise DataError(f"panel needs 2 or {MAX_SERIES} columns, got {d}")
        if n < 2:
            raise DataError("panel needs at least 2 observations")
        if not np.all(np.isfinite(v)):
            raise DataError("panel contains non-finite values")
        object.__setattr__(self, "values", v)
        names = tuple(self.names) or tuple(f"X{j + 1}" for j in range(d))
        if len(names) != d:
            raise DataError("one name per column required")
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


class Distribution:
    """A single conditional law.

    Subclasses implement ``cdf`` and ``cdf_left`` (both vectorised over
    ``y``) and ``quantile`` (the generalized inverse
    ``inf{y : cdf(y) >= u}``).  ``atom`` is derived.
    """

    def cdf(self, y):
        raise NotImplementedError

    def cdf_left(self, y):
        """P(Y < y); differs from ``cdf`` only at atoms."""
        raise NotImplementedError

    def atom(self, y):
        """Probability mass exactly at ``y``."""
        return np.maximum(self.cdf(y) - self.cdf_left(y), 0.0)

    def quantile(self, u):
        raise NotImplementedError


class SeriesTrace:
    """Conditional laws of one series, one ``Distribution`` per time point.

    ``start`` marks leading observations with no conditional law (an
    AR(p) model conditions on the first p points); callers trim panels
    to a common offset before transforming.
    """

    n: int
    start: int = 0

    def at(self, t: int) -> Distribution:
        raise NotImplementedError

    def pit_parts(self, x: np.ndarray):
        """Left cdf and atom mass of each observation under its own law.

        Subclasses override with vectorised code; the fallback loops.
        """
        cl = np.empty(len(x))
        at = np.empty(len(x))
        for t, xi in enumerate(x):
            dist = self.at(t)
            cl[t] = dist.cdf_left(xi)
            at[t] = dist.atom(xi)
        return cl, at

    def quantile_path(self, u: np.ndarray) -> np.ndarray:
        return np.array([self.at(t).quantile(ui) for t, ui in enumerate(u)])


@dataclass
class ConditionalDistributionTrace:
    """One ``SeriesTrace`` per panel column."""

    traces: list[SeriesTrace]

    def __post_init__(self):
        if not 2 <= len(self.traces) <= MAX_SERIES:
            raise DataError("trace needs one entry per panel column (2 or 3)")

    @property
    def d(self) -> int:
        return len(self.traces)

    @property
    def start(self) -> int:
        return max(tr.start for tr in self.traces)


@dataclass(frozen=True)
class GeneralizedErrorPanel:
    """Randomized PIT output.

    ``replicates`` stacks the M randomizations, shape (M, n, d); under a
    correct model each slice is i.i.d. uniform in every column.
    """

    replicates: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        r = np.asarray(self.replicates, dtype=float)
        if r.ndim == 2:
            r = r[None, :, :]
        if r.ndim != 3:
            raise DataError("replicates must have shape (M, n, d)")
        if np.any((r < -1e-12) | (r > 1 + 1e-12)):
            raise DataError("generalized errors must lie in [0, 1]")
        object.__setattr__(self, "replicates", np.clip(r, 0.0, 1.0))

    @property
    def errors(self) -> np.ndarray:
        """First randomization, shape (n, d)."""
        return self.replicates[0]

    @property
    def m(self) -> int:
        return self.replicates.shape[0]

    @property
    def n(self) -> int:
        return self.replicates.shape[1]

    @property
    def d(self) -> int:
        return self.replicates.shape[2]


@dataclass(frozen=True)
class LagBlock:
    """All representative lag vectors for one subset of series.

    ``subset`` holds 0-based column indices; ``lags`` is an integer
    matrix with one full-length lag vector per row (entries outside the
    subset are zero, and the smallest subset index is anchored at lag
    zero so no two rows are circularly equivalent).
    """

    subset: tuple[int, ...]
    lags: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "subset", tuple(int(j) for j in self.subset))
        object.__setattr__(self, "lags", np.asarray(self.lags, dtype=int))

    @property
    def size(self) -> int:
        return self.lags.shape[0]

    def label(self) -> str:
        return "{" + ",".join(str(j + 1) for j in self.subset) + "}"


@dataclass(frozen=True)
class SubsetLagFamily:
    """Subsets of {1..d} with their representative lag vectors."""

    d: int
    m2: int
    m3: int
    include_triples: bool
    blocks: tuple[LagBlock, ...]

    @property
    def total_terms(self) -> int:
        return sum(b.size for b in self.blocks)

    def pair_terms(self) -> int:
        return sum(b.size for b in self.blocks if len(b.subset) == 2)


def build_subset_lag_family(d: int, m2: int, m3: int = 0,
                            include_triples: bool = True) -> SubsetLagFamily:
    """Enumerate subsets A of {1..d} (|A| >= 2) with representative lags.

    Two lag vectors that differ by a constant on A index the same
    circularly-shifted statistic, so each equivalence class is
    represented by the vector whose smallest subset index has lag 0.
    Pairs get lags -m2..m2 on the larger index; the triple (d = 3) gets
    the grid (-m3..m3)^2 on its last two indices.

    Parameters
    ----------
    d : int
        Number of series, 2 or 3.
    m2 : int
        Maximum pair lag (11 vectors per pair when m2 = 5).
    m3 : int
        Maximum triple lag; ignored when d = 2.
    include_triples : bool
        When False and d = 3, only the three pairs are kept.
    """
    if not 2 <= d <= MAX_SERIES:
        raise DataError(f"d must be 2 or {MAX_SERIES}, got {d}")
    if m2 < 0 or m3 < 0:
        raise DataError("lag bounds must be non-negative")
    blocks = []
    for a, b in combinations(range(d), 2):
        lags = np.zeros((2 * m2 + 1, d), dtype=int)
        lags[:, b] = np.arange(-m2, m2 + 1)
        blocks.append(LagBlock((a, b), lags))
    if d == 3 and include_triples:
        grid = list(product(range(-m3, m3 + 1), repeat=2))
        lags = np.zeros((len(grid), 3), dtype=int)
        lags[:, 1] = [g[0] for g in grid]
        lags[:, 2] = [g[1] for g in grid]
        blocks.append(LagBlock((0, 1, 2), lags))
    return SubsetLagFamily(d, m2, m3, include_triples and d == 3, tuple(blocks))


@dataclass
class PerTermStatistic:
    """One statistic for one (subset, lag) pair.

    ``kind`` is ``"cvm"`` for the rank-based Cramer-von Mises statistic,
    ``"corr"`` for the cross-correlation of the errors, or a score
    family name (``"spearman"``, ``"vdw"``, ``"savage"``, ...).
    """

    subset: tuple[int, ...]
    lags: tuple[int, ...]
    kind: str
    value: float
    p_value: float

    def to_dict(self) -> dict:
        return {
            "subset": [j + 1 for j in self.subset],
            "lags": list(self.lags),
            "kind": self.kind,
            "value": self.value,
            "p_value": self.p_value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PerTermStatistic":
        return cls(tuple(j - 1 for j in d["subset"]), tuple(d["lags"]),
                   d["kind"], float(d["value"]), float(d["p_value"]))


@dataclass
class CombinedStatistic:
    value: float
    p_value: float
    df: float | None = None
    description: str = ""

    def to_dict(self) -> dict:
        out = {"value": self.value, "p_value": self.p_value,
               "description": self.description}
        if self.df is not None:
            out["df"] = self.df
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "CombinedStatistic":
        return cls(float(d["value"]), float(d["p_value"]),
                   d.get("df"), d.get("description", ""))


@dataclass
class StatisticReport:
    """Full test output: per-(A, lag) statistics plus combined ones.

    Serialises to JSON and back without loss so the CLI report file can
    be consumed programmatically.
    """

    per_term: list[PerTermStatistic]
    combined: dict[str, CombinedStatistic]
    metadata: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def rejected(self, alpha: float, statistics=None) -> bool:
        names = statistics or list(self.combined)
        return any(self.combined[s].p_value < alpha for s in names
                   if s in self.combined)

    def to_json(self, indent: int | None = 2) -> str:
        payload = {
            "per_term": [t.to_dict() for t in self.per_term],
            "combined": {k: v.to_dict() for k, v in self.combined.items()},
            "metadata": self.metadata,
            "warnings": self.warnings,
        }
        return json.dumps(payload, indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "StatisticReport":
        payload = json.loads(text)
        return cls(
            per_term=[PerTermStatistic.from_dict(t) for t in payload["per_term"]],
            combined={k: CombinedStatistic.from_dict(v)
                      for k, v in payload["combined"].items()},
            metadata=payload.get("metadata", {}),
            warnings=payload.get("warnings", []),
        )
