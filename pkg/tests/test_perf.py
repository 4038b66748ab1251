import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

import expected_values as ev
import oracles
from hetadhoc import perf
from hetadhoc import sirdist as sd
from hetadhoc.errors import CapabilityError, ConvergenceError, DivergenceError, DivergenceWarning
from hetadhoc.model import (
    DistributionSpec,
    NetworkConfig,
    PowerControlSpec,
    TypeClassConfig,
    derive_intensities,
    table1_network,
)
from hetadhoc.simulator import SimScenario, simulate

TABLE1_GRID = np.geomspace(1e-5, 1e-3, 9)


def single_class(lam, fading=None, alpha=4.0, distance=10.0):
    t = TypeClassConfig(
        lam, fading=fading or DistributionSpec.exponential(), distance=DistributionSpec.constant(distance)
    )
    return NetworkConfig((t,), alpha=alpha)


@st.composite
def configs(draw):
    k = draw(st.integers(1, 3))
    types = tuple(
        TypeClassConfig(
            draw(st.floats(1e-6, 5e-4)),
            power=DistributionSpec.constant(draw(st.floats(0.05, 2.0))),
            fading=draw(st.sampled_from([DistributionSpec.exponential(), DistributionSpec.gamma(2.0)])),
            distance=DistributionSpec.constant(draw(st.floats(2.0, 30.0))),
        )
        for _ in range(k)
    )
    return NetworkConfig(types, alpha=draw(st.sampled_from([4.0, 4.5, 5.0])))


@pytest.fixture(scope="module")
def table1_draws():
    return simulate(SimScenario(table1_network(1e-4), replications=100_000, seed=101))


class TestShannonTransform:
    def test_zero_rho(self):
        assert perf.shannon_transform(DistributionSpec.exponential(), 0.0) == 0.0

    def test_constant(self):
        assert perf.shannon_transform(DistributionSpec.constant(1.0), 1.0) == pytest.approx(ev.TRIVIAL_LN2, rel=1e-9)

    def test_exponential(self):
        val = perf.shannon_transform(DistributionSpec.exponential(), 1.0)
        assert val == pytest.approx(ev.DERIVED_SHANNON_EXP_1, rel=1e-9)
        assert val == pytest.approx(oracles.expon_log1p_expectation(1.0), rel=1e-9)

    @given(
        st.sampled_from(["constant", "exponential", "gamma", "erlang"]),
        st.floats(0.3, 3.0),
        st.floats(0.5, 4.0),
        st.floats(0.01, 100.0),
    )
    def test_identity_vs_direct(self, kind, mean, shape, rho):
        spec = {
            "constant": DistributionSpec.constant(mean),
            "exponential": DistributionSpec.exponential(mean),
            "gamma": DistributionSpec.gamma(shape, mean),
            "erlang": DistributionSpec.erlang(max(1, int(shape)), mean),
        }[kind]
        assert perf.shannon_transform(spec, rho) == pytest.approx(perf.shannon_transform_direct(spec, rho), rel=1e-6)


class TestSuccessProbability:
    def test_small_theta(self):
        assert perf.success_prob(table1_network(), 1e-12) == pytest.approx(1.0, abs=1e-5)

    def test_table1_value(self):
        lt = derive_intensities(table1_network(1e-4)).lambda_tilde
        oracle = math.exp(-(math.pi**1.5) * lt * math.sqrt(1e4))
        val = perf.success_prob(table1_network(1e-4), 1.0, 0)
        assert val == pytest.approx(oracle, rel=1e-13)
        assert val == pytest.approx(ev.DERIVED_P1_TABLE1, abs=1e-4)

    def test_table1_vs_simulation(self, table1_draws):
        for k in range(3):
            assert table1_draws.success_prob(1.0, k).agrees(perf.success_prob(table1_network(1e-4), 1.0, k), 3.0)

    def test_dense_limit(self):
        assert perf.success_prob(table1_network(1.0), 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_bounds_at_small_theta(self):
        lo, hi = perf.success_prob_bounds(table1_network(), 1e-14)
        assert lo == pytest.approx(1.0, abs=1e-6) and hi == pytest.approx(1.0, abs=1e-6)

    def test_alpha4_lower_bound_is_jensen_erfc(self):
        net = table1_network(2e-4)
        lt = derive_intensities(net).lambda_tilde
        inv_sqrt = math.gamma(0.5) / math.sqrt(net.signal_mean(1))
        expected = special.erfc(math.pi**1.5 * lt * inv_sqrt / 2.0)
        assert perf.success_prob_bounds(net, 1.0, 1)[0] == pytest.approx(expected, rel=1e-12)

    @given(configs(), st.floats(0.05, 20.0))
    def test_bounds_bracket(self, net, theta):
        for k in range(net.K):
            lo, hi = perf.success_prob_bounds(net, theta, k)
            p = perf.success_prob(net, theta, k)
            assert lo - 1e-9 <= p <= hi + 1e-9


class TestCancellation:
    def test_uncompensated_equals_plain(self):
        net = table1_network()
        assert perf.success_prob_cancel(net, sd.CancellationSpec(2), 1.0, 1, compensation=False) == pytest.approx(
            perf.success_prob(net, 1.0, 1), rel=1e-12
        )

    @pytest.mark.parametrize("lam", [1e-5, 1e-4, 1e-3])
    def test_monotone_in_L(self, lam):
        net = table1_network(lam)
        for k in range(3):
            values = [perf.success_prob(net, 1.0, k)] + [
                perf.success_prob_cancel(net, sd.CancellationSpec(L), 1.0, k) for L in (1, 2, 3)
            ]
            assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("L", [1, 2, 3])
    def test_helps_weak_type_most(self, L):
        # Relative improvement p_L / p; the absolute gain is the same curve
        # shifted in intensity and loses this ordering at high intensity.
        for lam in TABLE1_GRID:
            net = table1_network(lam)
            ratios = [
                perf.success_prob_cancel(net, sd.CancellationSpec(L), 1.0, k) / perf.success_prob(net, 1.0, k)
                for k in range(3)
            ]
            assert ratios[2] > ratios[1] > ratios[0]

    def test_upper_bound_capped_and_dominating(self):
        net = table1_network(3e-4)
        for L in (1, 2, 3):
            cancel = sd.CancellationSpec(L)
            bound = perf.success_prob_cancel_upper(net, cancel, 1.0, 2)
            assert bound.value <= 1.0
            assert bound.value >= perf.success_prob_cancel(net, cancel, 1.0, 2) - 1e-12

    def test_upper_bound_requires_exponential_signal(self):
        net = table1_network(rx_antennas=2)
        with pytest.raises(CapabilityError):
            perf.success_prob_cancel_upper(net, sd.CancellationSpec(2), 1.0, 0)

    def test_type3_vs_simulation(self):
        net = table1_network(1e-4)
        for L in (1, 2, 3):
            draws = simulate(SimScenario(net, replications=50_000, seed=40 + L, typical_type=2, cancel_count=L))
            exact = perf.success_prob_cancel(net, sd.CancellationSpec(L), 1.0, 2)
            assert draws.success_prob(1.0, 2).agrees(exact, 3.0)


class TestFadingRegion:
    def test_boundary_unit_threshold(self):
        region = perf.fading_region(4.0, 1.0)
        assert region.boundary == pytest.approx(ev.DERIVED_CROSSOVER_EXACT, rel=1e-6)
        assert region.boundary == pytest.approx(ev.REFERENCE_CROSSOVER_NORMALIZED, rel=0.01)

    def test_boundary_scales_with_sqrt_threshold(self):
        assert perf.fading_region(4.0, 4.0).boundary == pytest.approx(perf.fading_region(4.0, 1.0).boundary / 2, rel=1e-6)

    def test_point_inside(self):
        assert math.exp(-math.sqrt(math.pi) * 0.5) < special.erfc(0.5)
        assert perf.fading_region(4.0, 1.0).contains(0.5)
        assert not perf.fading_region(4.0, 1.0).contains(1.2)

    def test_sufficient_set_root(self):
        region = perf.fading_region(4.0, 1.0)
        assert region.sufficient_intervals[0][1] == pytest.approx(ev.DERIVED_SUFFICIENT_ROOT, rel=1e-6)

    def test_sign_flip_at_boundary(self):
        boundary = perf.fading_region(4.0, 1.0).boundary
        faded = lambda u: math.exp(-math.sqrt(math.pi) * u)
        flat = lambda u: special.erfc(u)
        assert faded(boundary - 1e-4) < flat(boundary - 1e-4)
        assert faded(boundary + 1e-4) > flat(boundary + 1e-4)

    def test_table1_crossover_intensity(self):
        boundary = perf.fading_region(4.0, 1.0).boundary
        ratio = derive_intensities(table1_network(1.0)).Lambda_tilde_k[1]
        assert boundary / ratio == pytest.approx(ev.REFERENCE_CROSSOVER_LAMBDA1, rel=0.01)
        # The two success curves really cross there.
        lam_star = boundary / ratio
        for lam, sign in ((lam_star * 0.98, -1), (lam_star * 1.02, 1)):
            gap = perf.success_prob(table1_network(lam), 1.0, 1) - perf.success_prob(
                table1_network(lam, fading=DistributionSpec.constant(1.0)), 1.0, 1
            )
            assert math.copysign(1, gap) == sign


class TestPowerControl:
    def test_gamma_zero_degenerates(self):
        net = table1_network(1e-4)
        pc = PowerControlSpec.uniform(net, 0.0)
        for k in range(3):
            assert perf.success_prob_pc(net, pc, 1.0, k).value == pytest.approx(perf.success_prob(net, 1.0, k), abs=1e-10)
            assert perf.ergodic_capacity_pc(net, pc, k) == pytest.approx(perf.ergodic_capacity(net, k), abs=1e-10)
        assert perf.pc_benefit_check(net, pc) == (False, 0.0)

    def test_controlled_intensity_smaller(self):
        net = table1_network(1e-4)
        d = derive_intensities(PowerControlSpec.uniform(net, 0.5).apply(net))
        assert d.lambda_tilde_pc < d.lambda_tilde

    def test_bounds_bracket_value(self):
        net = table1_network(3e-4)
        res = perf.success_prob_pc(net, PowerControlSpec.uniform(net, 0.5), 1.0, 0)
        assert res.lower <= res.value
        assert not res.upper_valid  # the concave-CCDF hypothesis fails for Rayleigh

    def test_upper_bound_flagged_where_it_fails(self):
        net = single_class(3e-4, fading=DistributionSpec.gamma(4.0))
        res = perf.success_prob_pc(net, PowerControlSpec.uniform(net, 2.0), 1.0, 0)
        assert not res.upper_valid
        assert res.value > res.upper  # the unverified bound is indeed violated here

    def test_divergent_moment(self):
        net = single_class(1e-4)
        with pytest.raises(DivergenceError):
            perf.success_prob_pc(net, PowerControlSpec.uniform(net, 1.0), 1.0, 0)

    def test_vs_simulation(self):
        net = table1_network(3e-4)
        pc = PowerControlSpec.uniform(net, 0.5)
        draws = simulate(SimScenario(pc.apply(net), replications=100_000, seed=7))
        for k in range(3):
            assert draws.success_prob(1.0, k).agrees(perf.success_prob_pc(net, pc, 1.0, k).value, 3.0)

    def test_benefit_high_intensity(self):
        net = table1_network(3e-4)
        ok, margin = perf.pc_benefit_check(net, PowerControlSpec.uniform(net, 0.5))
        assert ok and margin > 0

    def test_benefit_low_intensity_negative_exponent(self):
        net = table1_network(3e-5)
        ok, margin = perf.pc_benefit_check(net, PowerControlSpec.uniform(net, -0.5))
        assert ok and margin > 0

    def test_capacity_benefit_at_moderate_intensity(self):
        net = table1_network(1e-4)
        pc = PowerControlSpec.uniform(net, 0.5)
        for k in range(3):
            assert perf.ergodic_capacity_pc(net, pc, k) >= perf.ergodic_capacity(net, k)

    def test_capacity_loss_at_low_intensity(self):
        # Power control lowers capacity in the noise-free high-SIR regime; see the ledger.
        net = table1_network(1e-5)
        pc = PowerControlSpec.uniform(net, 0.5)
        assert perf.ergodic_capacity_pc(net, pc, 0) < perf.ergodic_capacity(net, 0)

    def test_capacity_two_routes(self):
        net = table1_network(1e-5)
        pc = PowerControlSpec.uniform(net, 0.5)
        controlled, law, lt = perf._pc_capacity_terms(net, pc, 0)
        direct = perf.ergodic_capacity_pc(net, pc, 0)
        assert perf.ergodic_capacity_via_success(controlled, 0, law=law, lambda_tilde=lt) == pytest.approx(direct, rel=1e-6)

    def test_capacity_vs_simulation(self):
        net = table1_network(1e-4)
        pc = PowerControlSpec.uniform(net, 0.5)
        draws = simulate(SimScenario(pc.apply(net), replications=100_000, seed=8))
        assert draws.ergodic_capacity(0).agrees(perf.ergodic_capacity_pc(net, pc, 0), 3.0)

    def test_capacity_bounds_bracket_for_rayleigh(self):
        net = table1_network(1e-4)
        pc = PowerControlSpec.uniform(net, 0.0)
        lo, hi = perf.ergodic_capacity_pc_bounds(net, pc, 0)
        assert lo <= perf.ergodic_capacity(net, 0) <= hi

    def test_channel_inversion(self):
        net = single_class(1e-4)
        with pytest.warns(DivergenceWarning):
            assert perf.ergodic_capacity_pc(net, PowerControlSpec.uniform(net, -1.0)) == 0.0

    def test_capacity_conditions_report(self):
        net = table1_network(1e-4)
        report = perf.capacity_pc_benefit_conditions(net, PowerControlSpec.uniform(net, 0.5))
        assert set(report) >= {"intensity_condition", "transform_condition", "both"}


class TestMultiAntenna:
    def test_single_antenna(self):
        net = table1_network(1e-4)
        assert perf.success_prob_simo(net, 0, 1, 1.0) == pytest.approx(perf.success_prob(net, 1.0, 0), rel=1e-12)
        assert perf.ergodic_capacity_simo(net, 0, 1) == pytest.approx(perf.ergodic_capacity(net, 0), rel=1e-8)

    def test_matches_erlang_closed_form(self):
        net = table1_network(1e-4)
        assert perf.success_prob_simo(net, 0, 4, 1.0) == pytest.approx(
            perf.success_prob(table1_network(1e-4, rx_antennas=4), 1.0, 0), rel=1e-10
        )

    def test_diversity_ordering(self):
        for lam in TABLE1_GRID:
            net = table1_network(lam)
            assert perf.success_prob_simo(net, 0, 4, 1.0) > perf.success_prob_simo(net, 0, 1, 1.0)

    def test_capacity_nondecreasing(self):
        net = table1_network(1e-4)
        values = [perf.ergodic_capacity_simo(net, 0, m) for m in (1, 2, 4, 8)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_vs_simulation(self):
        net = table1_network(1e-4)
        simo = perf._simo_net(net, 0, 4)
        draws = simulate(SimScenario(simo, replications=100_000, seed=9))
        assert draws.success_prob(1.0, 0).agrees(perf.success_prob_simo(net, 0, 4, 1.0), 3.0)
        assert draws.ergodic_capacity(0).agrees(perf.ergodic_capacity_simo(net, 0, 4), 3.0)


class TestErgodicCapacity:
    def test_dense_limit(self):
        assert perf.ergodic_capacity(table1_network(10.0), 0) < 1e-4

    @given(configs())
    def test_two_routes_agree(self, net):
        for k in range(net.K):
            assert perf.ergodic_capacity(net, k) == pytest.approx(perf.ergodic_capacity_via_success(net, k), rel=1e-4)

    def test_exponential_kernel(self):
        net = table1_network(1e-4)
        law = perf.signal_law(net, 0)
        lt = derive_intensities(net).lambda_tilde
        a = sd.interference_coefficient(net)
        ref = oracles.quad_inf(
            lambda v: oracles.mp.exp(-a * (v / law.mean) ** 0.5) / (1 + v), (0, 1, 100, 1e4)
        ) / math.log(2)
        assert perf.ergodic_capacity(net, 0, lambda_tilde=lt) == pytest.approx(ref, rel=1e-8)

    def test_vs_simulation_low_intensity(self):
        net = table1_network(1e-5)
        draws = simulate(SimScenario(net, replications=100_000, seed=12))
        assert draws.ergodic_capacity(0).agrees(perf.ergodic_capacity(net, 0), 3.0)

    def test_cancel_uncompensated(self):
        net = table1_network(1e-4)
        val = perf.ergodic_capacity_cancel(net, sd.CancellationSpec(1), 1, compensation=False)
        assert val == pytest.approx(perf.ergodic_capacity(net, 1), rel=1e-7)

    def test_cancel_diminishing_returns(self):
        for lam in (1e-5, 1e-4, 1e-3):
            net = table1_network(lam)
            c = [perf.ergodic_capacity(net, 1)] + [perf.ergodic_capacity_cancel(net, sd.CancellationSpec(L), 1) for L in (1, 2, 3)]
            diffs = np.diff(c)
            assert np.all(diffs >= 0)
            assert np.all(np.diff(diffs) <= 0)

    def test_cancel_vs_simulation(self):
        net = table1_network(1e-4)
        draws = simulate(SimScenario(net, replications=100_000, seed=14, typical_type=1, cancel_count=2))
        assert draws.ergodic_capacity(1).agrees(perf.ergodic_capacity_cancel(net, sd.CancellationSpec(2), 1), 3.0)

    def test_cancel_upper_is_infinite(self):
        bound = perf.ergodic_capacity_cancel_upper(table1_network(1e-4), sd.CancellationSpec(2), 0)
        assert math.isinf(bound.value) and bound.sensitive


class TestThroughput:
    def test_sparse_and_dense_limits(self):
        sparse = [perf.throughput_capacity(table1_network(l)).C for l in (1e-10, 1e-12, 1e-14)]
        # C ~ lambda log(1/lambda): decays to zero slightly slower than linearly
        assert sparse[0] > sparse[1] > sparse[2]
        assert sparse[2] / sparse[0] < 1e-3
        assert perf.throughput_capacity(table1_network(1.0)).C < 1e-10

    def test_composition_exact(self):
        net = table1_network(2e-4)
        res = perf.throughput_capacity(net)
        parts = [net.types[k].intensity * p * c for k, (p, c, _) in enumerate(res.per_type)]
        assert res.C == math.fsum(parts)

    def test_interior_maximum_single_class(self):
        res = perf.optimize_throughput(single_class(1e-4))
        lam = res.optimal_lambda[0]
        assert 1e-7 < lam < 1e-1

    def test_optimum_matches_sweep(self):
        grid = np.geomspace(1e-6, 1e-3, 31)
        values = [perf.throughput_capacity(table1_network(l)).C for l in grid]
        best = int(np.argmax(values))
        res = perf.optimize_throughput(table1_network())
        assert grid[best - 1] <= res.optimal_lambda[0] <= grid[best + 1]
        assert res.C >= max(values) * (1 - 1e-9)

    def test_edge_maximum_raises(self):
        with pytest.raises(ConvergenceError):
            perf.optimize_throughput(table1_network(), lambda1_range=(1e-9, 1e-6), scan_points=5)

    def test_combined_variants_rejected(self):
        net = table1_network()
        with pytest.raises(CapabilityError):
            perf.throughput_capacity(net, cancel=sd.CancellationSpec(1), pc=PowerControlSpec.uniform(net, 0.5))

    def test_xi_reference(self):
        ref = perf.throughput_reference(table1_network())
        assert ref.xi == pytest.approx(oracles.xi_reference(4.0, 1.0), rel=1e-9)
        assert ref.xi == pytest.approx(math.pi / 2, rel=1e-9)
        assert all(l > 0 for l in ref.lambda_star) and ref.C_star > 0

    def test_throughput_vs_simulation(self, table1_draws):
        assert table1_draws.throughput(1.0).agrees(perf.throughput_capacity(table1_network(1e-4)).C, 3.0)
