"""Randomized PIT, the smoothed indicator J and the atom correction."""
import numpy as np
import pytest

from geitest.core import (ConditionalDistributionTrace, DataError, SeriesPanel,
                          SeriesTrace)
from geitest.distributions import (ConstantTrace, LocScaleMixture,
                                   TableDistribution, UniformDistribution)
from geitest.pit import RandomizationPlan, chi0, j_transform, randomized_pit


class BinaryChainTrace(SeriesTrace):
    """Conditional laws of the two-state Markov chain with transition
    matrix [[p, 1-p], [1-p, p]]: P(X_t = 0 | X_{t-1}) is p after a 0 and
    1-p after a 1."""

    def __init__(self, x, p):
        self.x = np.asarray(x)
        self.p = p
        self.n = len(x)
        self.start = 1
        self._after0 = TableDistribution([0.0, 1.0], [p, 1.0 - p])
        self._after1 = TableDistribution([0.0, 1.0], [1.0 - p, p])

    def at(self, t):
        return self._after0 if self.x[t - 1] == 0 else self._after1


def simulate_chain(n, p, rng):
    # symmetric chain: stay probability is p in both states
    x = np.empty(n)
    x[0] = 1.0
    flips = rng.random(n)
    for t in range(1, n):
        x[t] = x[t - 1] if flips[t] < p else 1.0 - x[t - 1]
    return x


def test_randomized_pit_matches_hand_formula_on_chain():
    # the chain's generalized error has an explicit four-branch form:
    # after a 0: U = pV on {X=0} and p + (1-p)V on {X=1};
    # after a 1: symmetric with 1-p
    p = 0.6
    rng = np.random.default_rng(5)
    x = simulate_chain(400, p, rng)
    plan = RandomizationPlan(m=1, seed=9)
    panel = SeriesPanel(np.column_stack([x, rng.random(400)]))
    trace = ConditionalDistributionTrace(
        [BinaryChainTrace(x, p), ConstantTrace(UniformDistribution(), 400)])
    errors = randomized_pit(panel, trace, plan)
    assert errors.replicates.shape == (1, 399, 2)

    v = plan.uniforms(0, 0, 399)
    prev, cur = x[:-1], x[1:]
    expected = np.where(
        prev == 0,
        np.where(cur == 0, p * v, p + (1 - p) * v),
        np.where(cur == 0, (1 - p) * v, (1 - p) + p * v))
    assert np.allclose(errors.errors[:, 0], expected, atol=1e-15)


def test_pit_value_at_known_point():
    # Bernoulli law with P(X=0) = 0.4: observing x = 1 with v = 0.75
    # gives u = 0.4 + 0.75 * 0.6 = 0.85; observing x = 0 gives 0.3
    dist = TableDistribution([0.0, 1.0], [0.4, 0.6])
    assert dist.cdf_left(1.0) == pytest.approx(0.4)
    assert dist.atom(1.0) == pytest.approx(0.6)
    assert 0.4 + 0.75 * dist.atom(1.0) == pytest.approx(0.85)
    assert 0.0 + 0.75 * dist.atom(0.0) == pytest.approx(0.3)


def test_generalized_errors_are_uniform_on_chain():
    p = 0.3
    rng = np.random.default_rng(17)
    n = 20000
    x = simulate_chain(n, p, rng)
    panel = SeriesPanel(np.column_stack([x, rng.random(n)]))
    trace = ConditionalDistributionTrace(
        [BinaryChainTrace(x, p), ConstantTrace(UniformDistribution(), n)])
    u = randomized_pit(panel, trace, RandomizationPlan(seed=3)).errors[:, 0]
    grid = np.linspace(0.05, 0.95, 19)
    ecdf = np.searchsorted(np.sort(u), grid, side="right") / len(u)
    assert np.max(np.abs(ecdf - grid)) < 0.015


def test_continuous_trace_replicates_coincide():
    rng = np.random.default_rng(2)
    panel = SeriesPanel(rng.random((50, 2)))
    trace = ConditionalDistributionTrace(
        [ConstantTrace(UniformDistribution(), 50) for _ in range(2)])
    errors = randomized_pit(panel, trace, RandomizationPlan(m=4, seed=1))
    assert errors.m == 4
    for k in range(1, 4):
        assert np.array_equal(errors.replicates[0], errors.replicates[k])
    # and the transform is the identity for U(0,1) data
    assert np.allclose(errors.errors, panel.values)


def test_randomization_plan_is_order_independent():
    plan = RandomizationPlan(m=3, seed=42)
    a = plan.uniforms(2, 1, 100)
    _ = plan.uniforms(0, 0, 50)
    b = plan.uniforms(2, 1, 100)
    assert np.array_equal(a, b)
    assert not np.array_equal(plan.uniforms(1, 1, 100), a)
    assert not np.array_equal(plan.uniforms(2, 0, 100), a)
    assert not np.array_equal(RandomizationPlan(3, 43).uniforms(2, 1, 100), a)


def test_pit_validates_trace_alignment():
    panel = SeriesPanel(np.random.default_rng(0).random((30, 2)))
    bad = ConditionalDistributionTrace(
        [ConstantTrace(UniformDistribution(), 30),
         ConstantTrace(UniformDistribution(), 29)])
    with pytest.raises(DataError):
        randomized_pit(panel, bad)


def test_j_transform_mean_recovers_u():
    # E[J(X, u)] = u for X ~ G, any G; checked on a mixed law by
    # simulating X through the quantile transform
    dist = LocScaleMixture(weights=[0.5, 0.3], locs=[0.0, 2.0],
                           scales=[1.0, 0.5], zero_mass=0.2)
    rng = np.random.default_rng(11)
    x = dist.quantile(rng.random(200000))
    for u in (0.1, 0.37, 0.5, 0.82):
        j = j_transform(dist, x, u)
        se = j.std() / np.sqrt(len(x))
        assert abs(j.mean() - u) < 4 * se + 1e-12


def test_j_transform_branches():
    dist = TableDistribution([0.0, 1.0], [0.4, 0.6])
    # inside the atom of 0 (span [0, 0.4]): linear ramp u / 0.4
    assert j_transform(dist, 0.0, 0.2) == pytest.approx(0.5)
    # below/above the span: clipped to 0/1
    assert j_transform(dist, 1.0, 0.2) == pytest.approx(0.0)
    assert j_transform(dist, 0.0, 0.9) == pytest.approx(1.0)
    # continuous law: indicator 1{G(x) <= u}
    uni = UniformDistribution()
    assert j_transform(uni, 0.3, 0.5) == 1.0
    assert j_transform(uni, 0.7, 0.5) == 0.0


def test_chi0_hand_value():
    # Bernoulli(1/2): u = 0.2 and v = 0.4 sit inside the atom at 0
    # spanning [0, 0.5]: chi0 = (0.2 - 0) * (0.5 - 0.4) / 0.5 = 0.04
    dist = TableDistribution([0.0, 1.0], [0.5, 0.5])
    assert chi0(dist, 0.2, 0.4) == pytest.approx(0.04)
    assert chi0(dist, 0.4, 0.2) == pytest.approx(0.04)
    # u, v on opposite sides of the atom boundary: no correction
    assert chi0(dist, 0.2, 0.7) == 0.0
    # continuous law: never a correction
    assert chi0(UniformDistribution(), 0.2, 0.4) == 0.0
    with pytest.raises(DataError):
        chi0(dist, -0.1, 0.5)


def test_chi0_covariance_identity():
    # cov{J(X,u), J(X,v)} = min(u,v) - uv - chi0(u,v) under X ~ G
    dist = TableDistribution([0.0, 1.0, 2.0], [0.3, 0.5, 0.2])
    rng = np.random.default_rng(23)
    x = dist.quantile(rng.random(400000))
    for u, v in ((0.1, 0.25), (0.1, 0.5), (0.35, 0.7), (0.85, 0.9)):
        ju, jv = j_transform(dist, x, u), j_transform(dist, x, v)
        sample_cov = np.mean((ju - ju.mean()) * (jv - jv.mean()))
        expected = min(u, v) - u * v - chi0(dist, u, v)
        assert sample_cov == pytest.approx(expected, abs=3e-3)


def test_pit_trimming_respects_start():
    rng = np.random.default_rng(8)
    panel = SeriesPanel(rng.random((40, 2)))
    trace = ConditionalDistributionTrace(
        [ConstantTrace(UniformDistribution(), 40, start=3),
         ConstantTrace(UniformDistribution(), 40)])
    out = randomized_pit(panel, trace)
    assert out.n == 37
    assert np.allclose(out.errors, panel.values[3:])
