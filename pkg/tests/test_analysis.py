import numpy as np
import pytest

from segcomp import (AdmissibilityError, FieldSet, Grid, ModelParams,
                     ScalarField, SolveSettings, check_linf_bounds,
                     complementarity_check, cosine_test_functions, decay_fit,
                     default_threshold, faber_krahn_check, holder_seminorm,
                     segregation_report, support_and_nodal, survivor_count,
                     weighted_sum_holder, zero_isolation_probe)
from segcomp.solver import ContinuationTrace, SolveReport


def _fake_trace(grid, betas, w_pairs, u_val=0.2):
    """Continuation trace with prescribed component values (no solving)."""
    reports = []
    for w_vals in w_pairs:
        state = FieldSet.from_arrays(grid, np.full(grid.node_count, u_val),
                                     list(w_vals))
        reports.append(SolveReport(state, 0.0, 0, True, 0.0))
    return ContinuationTrace(list(betas), reports)


class TestLinfBounds:
    def test_scenario_a_values(self, state_a, params_a):
        report = check_linf_bounds(state_a, params_a)
        assert report.u_max == pytest.approx(0.2)
        assert report.u_cap == 1.0
        assert report.s_max == pytest.approx(1.0)   # D*u + d*w = 0.2 + 0.8
        assert report.s_cap == pytest.approx(3125.0)
        assert report.all_pass

    def test_violation_detected(self, grid_a, params_a):
        state = FieldSet.constant(grid_a, 1.5, [0.8])  # u > lambda/mu
        report = check_linf_bounds(state, params_a)
        assert not report.u_pass
        assert not report.all_pass

    def test_tolerance_allowance(self, grid_a, params_a):
        state = FieldSet.constant(grid_a, 1.0 + 5e-7, [0.8])
        assert check_linf_bounds(state, params_a).u_pass


class TestHolderSeminorm:
    def test_constant_is_zero(self, grid_a):
        f = ScalarField.constant(grid_a, 2.0)
        assert holder_seminorm(f, 0.5) == 0.0

    def test_linear_exact_value(self):
        # |x - y| / |x - y|^0.5 = |x - y|^0.5 is largest for the farthest pair
        g = Grid((1.0,), (101,))
        f = ScalarField.from_function(g, lambda x: x)
        assert holder_seminorm(f, 0.5) == pytest.approx(1.0)

    def test_scaling_in_amplitude(self, grid_a, rng):
        f = ScalarField(grid_a, rng.random(201))
        s1 = holder_seminorm(f, 0.5)
        s3 = holder_seminorm(ScalarField(grid_a, 3.0 * f.values), 0.5)
        assert s3 == pytest.approx(3.0 * s1)

    def test_alpha_range_enforced(self, grid_a):
        f = ScalarField.constant(grid_a, 1.0)
        with pytest.raises(ValueError):
            holder_seminorm(f, 1.0)
        with pytest.raises(ValueError):
            holder_seminorm(f, 0.0)

    def test_subsampled_large_grid_close_to_exact(self):
        g = Grid((1.0, 1.0), (41, 41))  # 1681 nodes -> 2.8M pairs
        f = ScalarField.from_function(g, lambda x, y: np.sin(3 * x) * y)
        exact = holder_seminorm(f, 0.5, max_pairs=4_000_000)
        sampled = holder_seminorm(f, 0.5, max_pairs=100_000)
        assert sampled <= exact * (1 + 1e-12)
        assert sampled >= 0.5 * exact

    def test_weighted_sum_rejects_out_of_box_weights(self, grid_a):
        state = FieldSet.constant(grid_a, 0.2, [0.8])
        with pytest.raises(AdmissibilityError):
            weighted_sum_holder(state, [0.01], 0.5, delta=0.2)

    def test_weighted_sum_matches_manual(self, grid_a, rng):
        state = FieldSet.from_arrays(grid_a, np.zeros(201),
                                     [rng.random(201), rng.random(201)])
        combo = ScalarField(grid_a, 2.0 * state.w[0].values + 0.5 * state.w[1].values)
        assert weighted_sum_holder(state, [2.0, 0.5], 0.5, delta=0.2) == \
            pytest.approx(holder_seminorm(combo, 0.5))


class TestSegregation:
    def test_disjoint_supports_zero_overlap(self, params_two):
        g = Grid((1.0,), (101,))
        x = g.axis_coords(0)
        state = FieldSet.from_arrays(g, np.full(101, 0.2),
                                     [np.where(x < 0.4, 1.0, 0.0),
                                      np.where(x > 0.6, 1.0, 0.0)])
        rep = segregation_report(state, params_two)
        assert rep.overlap[0, 1] == 0.0
        assert rep.max_offdiag_overlap() == 0.0

    def test_constant_overlap_value(self, params_two):
        g = Grid((1.0,), (101,))
        state = FieldSet.constant(g, 0.2, [0.5, 0.4])
        rep = segregation_report(state, params_two)
        assert rep.overlap[0, 1] == pytest.approx(0.2)          # int 0.5*0.4
        assert rep.scaled_overlap[0, 1] == pytest.approx(2.0)   # beta = 10
        # interaction mass: beta * int w_1 * a_12 w_2
        assert rep.interaction_mass[0] == pytest.approx(2.0)

    def test_single_component_trivial(self, state_a, params_a):
        rep = segregation_report(state_a, params_a)
        assert rep.max_offdiag_overlap() == 0.0


class TestSupports:
    def test_constant_state_full_support(self, state_a):
        rep = support_and_nodal(state_a, threshold=0.01)
        assert rep.supports[0].count() == 201
        assert rep.measures[0] == pytest.approx(1.0)
        assert rep.nodal.count() == 0

    def test_nodal_band(self, params_two):
        g = Grid((1.0,), (101,))
        x = g.axis_coords(0)
        state = FieldSet.from_arrays(g, np.full(101, 0.2),
                                     [np.where(x < 0.4, 1.0, 0.0),
                                      np.where(x > 0.6, 1.0, 0.0)])
        rep = support_and_nodal(state, threshold=0.01)
        assert rep.measures[0] + rep.measures[1] <= 1.0
        band = rep.nodal.count()
        assert 0 < band < 30  # thin strip between the territories

    def test_default_threshold_relative(self, grid_a):
        state = FieldSet.constant(grid_a, 0.0, [0.5])
        assert default_threshold(state) == pytest.approx(0.005)

    def test_bad_threshold_rejected(self, state_a):
        with pytest.raises(ValueError):
            support_and_nodal(state_a, threshold=0.0)


class TestFaberKrahn:
    def test_constant_state_passes(self, state_a, params_a):
        records = faber_krahn_check(state_a, params_a, threshold=0.01)
        assert len(records) == 1
        rec = records[0]
        # full-domain Neumann support: lambda_1 = 0 <= 0.8
        assert rec.lambda1 == pytest.approx(0.0, abs=1e-6)
        assert rec.cap == pytest.approx(0.8)
        assert rec.passed

    def test_too_small_support_fails(self, params_a):
        g = Grid((1.0,), (201,))
        x = g.axis_coords(0)
        vals = np.where(np.abs(x - 0.5) < 0.05, 1.0, 0.0)
        state = FieldSet.from_arrays(g, np.full(201, 0.2), [vals])
        records = faber_krahn_check(state, params_a, threshold=0.01)
        # interval of length ~0.1: lambda_1 ~ (pi/0.1)^2 >> 0.8
        assert not records[0].passed

    def test_empty_support_skipped(self, params_two):
        g = Grid((1.0,), (101,))
        state = FieldSet.from_arrays(g, np.full(101, 0.2),
                                     [np.full(101, 0.5), np.zeros(101)])
        records = faber_krahn_check(state, params_two, threshold=0.01)
        assert [r.component for r in records] == [0]


class TestDecayFit:
    def test_prescribed_exponential_recovered(self):
        g = Grid((1.0,), (101,))
        x = g.axis_coords(0)
        betas = [1e2, 1e3, 1e4]
        pairs = []
        for b in betas:
            w1 = np.full(101, 0.8)
            w2 = 0.8 * np.exp(-0.1 * np.sqrt(b)) * np.ones(101)
            pairs.append((w1, w2))
        fit = decay_fit(_fake_trace(g, betas, pairs), 0, (0.5,), 0.4)
        assert fit.slope == pytest.approx(-0.1, rel=1e-6)
        assert fit.r_squared == pytest.approx(1.0)

    def test_needs_three_entries(self):
        g = Grid((1.0,), (101,))
        trace = _fake_trace(g, [1e2, 1e3],
                            [(np.full(101, 0.8), np.zeros(101))] * 2)
        with pytest.raises(ValueError):
            decay_fit(trace, 0, (0.5,), 0.4)

    def test_center_floor_enforced(self):
        g = Grid((1.0,), (101,))
        trace = _fake_trace(g, [1e2, 1e3, 1e4],
                            [(np.zeros(101), np.full(101, 0.5))] * 3)
        with pytest.raises(ValueError, match="fell below"):
            decay_fit(trace, 0, (0.5,), 0.4)

    def test_fully_segregated_flag(self):
        g = Grid((1.0,), (101,))
        pairs = [(np.full(101, 0.8), np.zeros(101))] * 3
        fit = decay_fit(_fake_trace(g, [1e2, 1e3, 1e4], pairs), 0, (0.5,), 0.4)
        assert fit.fully_segregated
        assert fit.slope == -np.inf

    def test_diffusivity_weighting(self):
        g = Grid((1.0,), (101,))
        pairs = [(np.full(101, 0.8), np.full(101, 0.1))] * 3
        fit = decay_fit(_fake_trace(g, [1e2, 1e3, 1e4], pairs), 0, (0.5,), 0.4,
                        diffusivities=[1.0, 3.0])
        assert fit.sup_h[0] == pytest.approx(0.3)


class TestComplementarity:
    def test_cosine_bumps_nonnegative_and_neumann(self, grid_a):
        etas = cosine_test_functions(grid_a, 8)
        assert len(etas) == 8
        for eta in etas:
            assert np.min(eta.values) >= 0.0
        # mode 0 is the constant function
        assert np.all(etas[0].values == 1.0)

    def test_2d_test_functions(self):
        g = Grid((1.0, 1.0), (11, 11))
        etas = cosine_test_functions(g, 5)
        assert len(etas) == 5
        for eta in etas:
            assert np.min(eta.values) >= -1e-15

    def test_equilibrium_satisfies_both_inequalities(self, state_a, params_a):
        etas = cosine_test_functions(state_a.grid, 10)
        report = complementarity_check(state_a, params_a, etas)
        assert report.all_pass
        assert len(report.records) == 20  # 2 inequalities x 1 component x 10

    def test_negative_test_function_rejected(self, state_a, params_a):
        bad = ScalarField.from_function(state_a.grid, lambda x: x - 0.5)
        with pytest.raises(ValueError):
            complementarity_check(state_a, params_a, [bad])

    def test_violation_detected(self, params_a):
        # a state far from any equilibrium with a large hump violates the
        # subsolution inequality for some localized test function
        g = Grid((1.0,), (201,))
        x = g.axis_coords(0)
        w = 5.0 * np.exp(-((x - 0.5) / 0.05) ** 2)
        state = FieldSet.from_arrays(g, np.full(201, 0.01), [w])
        etas = cosine_test_functions(g, 10)
        report = complementarity_check(state, params_a, etas)
        assert not report.all_pass
        assert report.worst_margin < 0


class TestSurvivorCount:
    def test_scenario_a_counts_one(self, state_a, params_a):
        rep = survivor_count(state_a, params_a, threshold=0.01)
        assert rep.count == 1
        assert rep.survivors == [0]
        assert rep.u_distance_from_cap is None

    def test_zero_survivors_reports_u_distance(self, grid_a, params_a):
        state = FieldSet.constant(grid_a, 1.0, [0.0])
        rep = survivor_count(state, params_a, threshold=0.01)
        assert rep.count == 0
        assert rep.u_distance_from_cap == pytest.approx(0.0)

    def test_weyl_bound_positive(self, state_a, params_a):
        rep = survivor_count(state_a, params_a, threshold=0.01)
        assert rep.weyl_bound > 0
        assert rep.within_soft_bound


class TestZeroIsolationProbe:
    def test_subthreshold_constant_escapes(self, params_a, grid_a):
        # u = eta/2 has positive growth (lambda - mu u - k w > 0), so the
        # resource climbs past eta and the trial classifies as escaped
        report = zero_isolation_probe(params_a, grid_a, trials=3, seed=5)
        assert report.eta == pytest.approx(0.04)
        assert all(c == "escaped" for c in report.classifications)
        assert report.violations == 0

    def test_deterministic_across_calls(self, params_a, grid_a):
        r1 = zero_isolation_probe(params_a, grid_a, trials=4, seed=9)
        r2 = zero_isolation_probe(params_a, grid_a, trials=4, seed=9)
        assert r1.classifications == r2.classifications
