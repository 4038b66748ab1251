import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import expected_values as ev
from hetadhoc import perf
from hetadhoc.errors import QualityWarning
from hetadhoc.model import DistributionSpec, NetworkConfig, TypeClassConfig, table1_network
from hetadhoc.simulator import (
    BLOCK_SIZE,
    SimScenario,
    auto_window_radius,
    biased_nearest_distance_test,
    block_rng,
    estimate,
    far_field_mean,
    sample_network,
    simulate,
    sir_sample,
)


def single_class(lam, fading=None):
    return NetworkConfig((TypeClassConfig(lam, fading=fading or DistributionSpec.exponential()),))


class TestSampling:
    def test_tiny_window_is_empty(self):
        scenario = SimScenario(single_class(1e-4), window_radius=1e-9)
        real = sample_network(scenario, block_rng(0, 0))
        assert real.count == 0
        assert sir_sample(scenario, block_rng(0, 0), real) == math.inf

    def test_poisson_counts_and_uniform_radius(self):
        scenario = SimScenario(single_class(1e-4), window_radius=100.0)
        rng = np.random.default_rng(1)
        counts, sq = [], []
        for _ in range(10_000):
            real = sample_network(scenario, rng)
            counts.append(real.count)
            xy = real.positions[0]
            sq.extend((xy**2).sum(axis=1))
        mean = 1e-4 * math.pi * 100.0**2
        assert abs(np.mean(counts) - mean) < 3 * math.sqrt(mean / len(counts))
        sq = np.asarray(sq)
        assert abs(sq.mean() - 100.0**2 / 2) < 3 * sq.std() / math.sqrt(sq.size)

    def test_cancel_all_interferers_gives_sentinel(self):
        scenario = SimScenario(single_class(1e-4), window_radius=30.0, cancel_count=50)
        assert sir_sample(scenario, block_rng(3, 0)) == math.inf

    def test_single_draw_success_matches_formula(self):
        scenario = SimScenario(single_class(1e-4), seed=17)
        rng = np.random.default_rng(17)
        hits = np.array([sir_sample(scenario, rng) > 1.0 for _ in range(20_000)], dtype=float)
        exact = perf.success_prob(single_class(1e-4), 1.0)
        assert abs(hits.mean() - exact) < 3 * math.sqrt(exact * (1 - exact) / hits.size)

    def test_window_formula(self):
        net = table1_network()
        r = auto_window_radius(net, 0, 1e-3)
        assert r == pytest.approx(10.0 * math.sqrt(1001.0))
        far = far_field_mean(net, r)
        annulus = far_field_mean(net, 10.0) - far
        assert far == pytest.approx(1e-3 * annulus, rel=1e-12)


class TestEstimators:
    def test_vanishing_threshold(self):
        draws = simulate(SimScenario(table1_network(), replications=3000, seed=2))
        est = draws.success_prob(1e-300)
        assert est.mean == 1.0 and est.stderr == 0.0

    def test_laplace_at_zero(self):
        draws = simulate(SimScenario(table1_network(), replications=3000, seed=2))
        assert draws.laplace_interference(0.0).mean == 1.0

    def test_estimate_dispatch(self):
        scenario = SimScenario(table1_network(), replications=4000, seed=5)
        est = estimate(scenario, "success_prob", theta=1.0)
        assert est.mean == simulate(scenario).success_prob(1.0).mean
        with pytest.raises(ValueError):
            estimate(scenario, "median")

    def test_table1_success(self):
        est = simulate(SimScenario(single_class(1e-4 * 6.0011760 / math.gamma(1.5)), replications=100_000, seed=0)).success_prob(1.0)
        assert est.agrees(ev.DERIVED_P1_TABLE1, 3.0)

    def test_capacity_low_intensity(self):
        net = table1_network(1e-5)
        est = simulate(SimScenario(net, replications=50_000, seed=4)).ergodic_capacity(0)
        assert est.agrees(perf.ergodic_capacity(net, 0), 3.0)

    def test_sentinel_warning(self):
        draws = simulate(SimScenario(single_class(1e-6), replications=2000, seed=1, window_radius=50.0))
        with pytest.warns(QualityWarning):
            draws.ergodic_capacity(0)


class TestDeterminism:
    def test_bit_identical_across_workers(self):
        scenario = SimScenario(table1_network(), replications=3 * BLOCK_SIZE + 17, seed=99, cancel_count=1)
        one, four = simulate(scenario, workers=1), simulate(scenario, workers=4)
        assert np.array_equal(one.interference, four.interference)
        assert np.array_equal(one.signals, four.signals)

    def test_seed_changes_output(self):
        a = simulate(SimScenario(table1_network(), replications=500, seed=1))
        b = simulate(SimScenario(table1_network(), replications=500, seed=2))
        assert not np.array_equal(a.interference, b.interference)

    def test_window_sufficiency(self):
        net = table1_network(1e-4)
        base = SimScenario(net, replications=50_000, seed=31)
        wide = SimScenario(net, replications=50_000, seed=31, window_radius=2 * base.radius)
        for k in range(3):
            a, b = simulate(base).success_prob(1.0, k), simulate(wide).success_prob(1.0, k)
            assert abs(a.mean - b.mean) < 2 * math.hypot(a.stderr, b.stderr)

    @given(st.integers(0, 2**32 - 1), st.integers(0, 3))
    def test_cancellation_pathwise(self, seed, L):
        net = table1_network(3e-4)
        low = simulate(SimScenario(net, replications=200, seed=seed, cancel_count=L)).sir(0)
        high = simulate(SimScenario(net, replications=200, seed=seed, cancel_count=L + 1)).sir(0)
        assert np.all(high >= low)


class TestNearestDistance:
    def test_plain_ppp(self):
        net = single_class(1e-4, fading=DistributionSpec.constant(1.0))
        _, pvalue = biased_nearest_distance_test(SimScenario(net, seed=4), 100_000)
        assert pvalue > 0.01

    def test_table1_marks(self):
        _, pvalue = biased_nearest_distance_test(SimScenario(table1_network(), seed=5), 100_000)
        assert pvalue > 0.01

    def test_wrong_intensity_rejected(self):
        _, pvalue = biased_nearest_distance_test(SimScenario(table1_network(), seed=5), 100_000, intensity_factor=1.5)
        assert pvalue < 0.01


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_strongest_mask_matches_sorting(seed, L):
    from hetadhoc.simulator import _strongest_mask

    rng = np.random.default_rng(seed)
    size = 40
    owners = rng.integers(0, size, 600)
    radii = 300.0 * np.sqrt(rng.random(owners.size))
    terms = rng.exponential(size=owners.size) * radii**-4.0
    mask = _strongest_mask(terms, owners, radii, L, size, table1_network(1e-4))
    for o in range(size):
        mine = terms[owners == o]
        expected = np.sort(mine)[::-1][:L]
        assert np.array_equal(np.sort(terms[mask & (owners == o)])[::-1], expected)
