import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from paretocfar.detectors import DetectorKind, DetectorSpec, case_a_pd, case_b_pd, clairvoyant_pd
from paretocfar.errors import InvalidParametersError, InvalidPfaError, SpecMismatchError
from paretocfar.montecarlo import (
    BLOCK_SIZE,
    CurveSource,
    SweepResult,
    TrialEstimate,
    allowed_misses,
    block_generator,
    cfar_sweep,
    child_seed,
    compare_to_clairvoyant,
    count_hits,
    estimate_pd,
    estimate_pfa,
    roc_agreement,
    roc_allowed_exceedances,
    roc_curve,
    two_proportion_z,
    wilson_interval,
)
from paretocfar.pareto_model import ParetoParams

CLUTTER = ParetoParams(5.0, 0.7)


def case_a(pfa=1e-2, n=4, h=0.7):
    return DetectorSpec("case-a", pfa, n, known_scale=h)


def case_b(pfa=1e-2, n=4):
    return DetectorSpec("case-b", pfa, n)


def _sweep(hits, trials=10_000, nominal=0.01):
    ests = tuple(TrialEstimate.from_counts(k, trials) for k in hits)
    axis = tuple((("alpha", float(i + 1)), ("h", 1.0)) for i in range(len(hits)))
    return SweepResult(axis, ests, nominal, DetectorKind.CASE_B, 4)


class TestWilson:
    def test_contains_point_estimate(self):
        for hits, trials in ((0, 10), (10, 10), (3, 1000), (500, 1000)):
            lo, hi = wilson_interval(hits, trials)
            assert 0.0 <= lo <= hits / trials <= hi <= 1.0

    def test_matches_reference_formula(self):
        # 99% Wilson interval for 1/10, worked by hand from z = 2.5758
        lo, hi = wilson_interval(1, 10)
        assert lo == pytest.approx(0.01185, abs=5e-5) and hi == pytest.approx(0.5072, abs=5e-4)

    @given(hits=st.integers(0, 1000), extra=st.integers(0, 1000))
    def test_narrower_at_lower_level(self, hits, extra):
        trials = hits + extra + 1
        lo99, hi99 = wilson_interval(hits, trials, 0.99)
        lo90, hi90 = wilson_interval(hits, trials, 0.90)
        assert lo99 <= lo90 + 1e-15 and hi90 <= hi99 + 1e-15

    def test_rejects_zero_trials(self):
        with pytest.raises(ValueError):
            wilson_interval(0, 0)

    def test_two_proportion_z(self):
        a = TrialEstimate.from_counts(120, 10_000)
        b = TrialEstimate.from_counts(80, 10_000)
        pooled = 0.01
        se = math.sqrt(pooled * (1 - pooled) * 2 / 10_000)
        assert two_proportion_z(a, b) == pytest.approx(0.004 / se)
        assert two_proportion_z(TrialEstimate.from_counts(0, 5), TrialEstimate.from_counts(0, 5)) == 0.0


class TestAllowances:
    def test_allowed_misses_values(self):
        assert allowed_misses(1, 0.01) == 0
        assert allowed_misses(17, 0.01) == int(stats.binom.ppf(0.99, 17, 0.01))
        assert allowed_misses(32, 0.01) == 2
        assert allowed_misses(100, 0.0) == 0

    def test_roc_allowance_uses_two_sided_tail(self):
        assert roc_allowed_exceedances(8) == int(stats.binom.ppf(0.99, 8, 2 * stats.norm.sf(3.0)))

    def test_false_flag_rate_below_level(self):
        for points in (1, 8, 17, 32, 64):
            k = allowed_misses(points, 0.01)
            assert stats.binom.sf(k, points, 0.01) <= 0.01


class TestEngine:
    def test_worker_count_does_not_change_hits(self):
        trials = 3 * BLOCK_SIZE + 17
        one = count_hits(case_b(), CLUTTER, CLUTTER, trials, 42, workers=1)
        four = count_hits(case_b(), CLUTTER, CLUTTER, trials, 42, workers=4)
        assert one == four

    def test_seed_changes_hits(self):
        a = count_hits(case_b(0.1), CLUTTER, CLUTTER, 20_000, 1)
        b = count_hits(case_b(0.1), CLUTTER, CLUTTER, 20_000, 2)
        assert a != b

    def test_block_generators_independent_of_order(self):
        x = block_generator(5, 3).random(4)
        block_generator(5, 0).random(100)
        assert np.array_equal(x, block_generator(5, 3).random(4))

    def test_child_seed(self):
        assert child_seed(7, 2) == (7, 2)
        assert child_seed((7, 2), 0) == (7, 2, 0)

    def test_single_trial(self):
        est = estimate_pfa(case_a(0.5), CLUTTER, 1, seed=3)
        assert est.probability in (0.0, 1.0)

    def test_trial_validation(self):
        with pytest.raises(InvalidParametersError):
            estimate_pfa(case_b(), CLUTTER, 0, seed=0)
        with pytest.raises(InvalidParametersError):
            estimate_pfa(case_b(), CLUTTER, 10**7 + 1, seed=0)

    def test_spec_mismatch(self):
        with pytest.raises(SpecMismatchError):
            estimate_pfa(case_a(h=0.5), CLUTTER, 100, seed=0)

    def test_target_validation(self):
        with pytest.raises(InvalidParametersError):
            estimate_pd(case_b(), CLUTTER, ParetoParams(6.0, 0.7), 100, seed=0)
        with pytest.raises(InvalidParametersError):
            estimate_pd(case_b(), CLUTTER, ParetoParams(2.0, 0.8), 100, seed=0)


class TestEstimates:
    def test_case_a_high_pfa_inside_interval(self):
        est = estimate_pfa(case_a(0.1), CLUTTER, 200_000, seed=11)
        assert est.contains(0.1)

    def test_target_equal_to_clutter_gives_pfa(self):
        est = estimate_pd(case_b(0.05), CLUTTER, CLUTTER, 200_000, seed=12)
        assert est.contains(0.05)

    def test_pd_against_closed_form(self):
        target = ParetoParams(2.5, 0.7)
        est = estimate_pd(case_a(1e-2), CLUTTER, target, 200_000, seed=13)
        assert est.contains(case_a_pd(1e-2, 4, 5.0, 2.5))
        est = estimate_pd(case_b(1e-2), CLUTTER, target, 200_000, seed=14)
        assert est.contains(case_b_pd(1e-2, 4, 5.0, 2.5))

    @pytest.mark.parametrize("pfa", [1e-2, 1e-3])
    def test_interval_coverage(self, pfa):
        covered = sum(estimate_pfa(case_b(pfa), CLUTTER, 100_000, seed=(15, rep)).contains(pfa) for rep in range(20))
        assert covered >= 19


class TestSweep:
    def test_single_point_reduces_to_estimate(self):
        spec = case_b(1e-2)
        sweep = cfar_sweep(spec, [5.0], [0.7], 50_000, seed=21)
        direct = estimate_pfa(spec, CLUTTER, 50_000, child_seed(21, 0))
        assert sweep.estimates[0] == direct
        assert sweep.metadata == {"seed": 21, "trials": 50_000}

    def test_case_b_hits_identical_under_common_seed(self):
        spec = case_b(1e-2)
        counts = {count_hits(spec, ParetoParams(a, h), ParetoParams(a, h), 100_000, 22) for a, h in ((5.0, 0.5), (12.0, 2.0), (30.0, 1e3))}
        assert len(counts) == 1

    def test_small_sweep_is_flat(self):
        # independent child seeds per point; checked at 0.1% to keep the false-failure rate small
        sweep = cfar_sweep(case_b(1e-2), [5.0, 12.0], [0.5, 2.0], 100_000, seed=22)
        assert sweep.is_flat(level=1e-3)
        assert abs(sweep.flatness_z()) < stats.norm.ppf(1 - 1e-3 / (2 * 6))
        assert sweep.ci_violations() <= sweep.allowed_ci_violations(level=1e-3)

    def test_case_a_sweep_uses_known_scale(self):
        sweep = cfar_sweep(case_a(1e-2, h=1.0), [5.0, 12.0], [1.0], 100_000, seed=23)
        assert [sweep.value(i, "alpha") for i in range(2)] == [5.0, 12.0]
        assert sweep.is_flat()

    def test_case_a_rejects_scale_grid(self):
        with pytest.raises(InvalidParametersError):
            cfar_sweep(case_a(1e-2), [5.0], [0.5, 1.0], 1000, seed=0)

    def test_minimum_pfa_for_trials(self):
        with pytest.raises(InvalidPfaError):
            cfar_sweep(case_b(1e-4), [5.0], [1.0], 100_000, seed=0)

    def test_empty_grid(self):
        with pytest.raises(InvalidParametersError):
            cfar_sweep(case_b(), [], [1.0], 1000, seed=0)

    def test_homogeneity_detects_a_trend(self):
        assert not _sweep([60, 80, 100, 120, 140]).is_flat()
        assert _sweep([100, 95, 104, 99]).is_flat()

    def test_homogeneity_degenerate(self):
        assert _sweep([0, 0]).flatness_pvalue() == 1.0
        assert _sweep([5]).flatness_pvalue() == 1.0

    def test_max_relative_deviation(self):
        assert _sweep([90, 110]).max_relative_deviation() == pytest.approx(0.1)

    def test_homogeneity_false_rejection_rate(self):
        """Under a flat truth the homogeneity test rejects at about its level."""
        rng = np.random.default_rng(24)
        hits = rng.binomial(10_000, 0.01, size=(2000, 17))
        table = [_sweep(row).flatness_pvalue() <= 0.01 for row in hits]
        rate = np.mean(table)
        assert rate <= 0.01 + 3 * math.sqrt(0.01 * 0.99 / 2000)


class TestRoc:
    def test_theory_square_root_law(self):
        spec = DetectorSpec("clairvoyant", 1e-4, 4, 5.0, 0.7)
        curve = roc_curve(spec, CLUTTER, ParetoParams(2.5, 0.7), [1e-4, 1e-2, 0.25])
        assert curve.pd == pytest.approx([1e-2, 0.1, 0.5], rel=1e-12)
        assert curve.source is CurveSource.THEORY and curve.estimates is None

    def test_grid_must_increase(self):
        with pytest.raises(InvalidParametersError):
            roc_curve(case_b(), CLUTTER, CLUTTER, [1e-2, 1e-3])
        with pytest.raises(InvalidParametersError):
            roc_curve(case_b(), CLUTTER, CLUTTER, [])

    def test_simulation_agrees_with_theory(self):
        target = ParetoParams(2.5, 0.7)
        grid = [1e-2, 3e-2, 0.1]
        theory = roc_curve(case_b(), CLUTTER, target, grid)
        sim = roc_curve(case_b(), CLUTTER, target, grid, "simulation", trials=100_000, seed=31)
        exceed = sum(z > 3 for z in roc_agreement(theory, sim))
        assert exceed <= roc_allowed_exceedances(len(grid))
        assert sim.metadata == {"seed": 31, "trials": 100_000}

    def test_simulation_respects_minimum_pfa(self):
        with pytest.raises(InvalidPfaError):
            roc_curve(case_b(), CLUTTER, CLUTTER, [1e-4], "simulation", trials=10_000)

    def test_pfa_must_increase_in_curve(self):
        from paretocfar.montecarlo import RocCurve

        with pytest.raises(ValueError):
            RocCurve(((0.1, 0.2), (0.1, 0.3)), CurveSource.THEORY, DetectorKind.CASE_B, 4, 5.0, 2.5, 1.0)


class TestCompare:
    grid = list(np.logspace(-5, -1, 9))

    def test_equal_shapes_collapse(self):
        curves = compare_to_clairvoyant(4, CLUTTER, CLUTTER, self.grid)
        for c in curves:
            assert c.pd == pytest.approx(self.grid, rel=1e-10)
        for c in curves[1:]:
            assert max(abs(g) for g in c.metadata["gap_to_clairvoyant"]) < 1e-12

    def test_gaps_nonnegative_and_shrink_with_window(self):
        target = ParetoParams(2.5, 0.7)
        small = compare_to_clairvoyant(4, CLUTTER, target, self.grid)
        large = compare_to_clairvoyant(8, CLUTTER, target, self.grid)
        for c4, c8 in zip(small[1:], large[1:]):
            g4, g8 = c4.metadata["gap_to_clairvoyant"], c8.metadata["gap_to_clairvoyant"]
            assert min(g4) >= -1e-12 and min(g8) >= -1e-12
            assert all(b <= a + 1e-12 for a, b in zip(g4, g8))

    def test_bound_is_clairvoyant(self):
        target = ParetoParams(2.5, 0.7)
        curves = compare_to_clairvoyant(4, CLUTTER, target, self.grid)
        assert curves[0].detector_kind is DetectorKind.CLAIRVOYANT
        assert curves[0].pd == pytest.approx([clairvoyant_pd(p, 5.0, 2.5) for p in self.grid])

    def test_simulated_compare_records_seed(self):
        curves = compare_to_clairvoyant(4, CLUTTER, ParetoParams(2.5, 0.7), [1e-2, 0.1], trials=20_000, seed=9)
        assert curves[1].metadata["seed"] == [9, 0] and curves[2].metadata["seed"] == [9, 1]
        assert curves[1].source is CurveSource.SIMULATION
