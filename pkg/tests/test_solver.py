import numpy as np
import pytest

from segcomp import (BlowUpError, FieldSet, Grid, ModelParams, SolveSettings,
                     continue_in_beta, imex_step, march_to_steady,
                     newton_refine, residual_fields, residual_norm)


class TestResidual:
    def test_zero_at_constant_equilibrium(self, state_a, params_a):
        assert residual_norm(state_a, params_a) <= 1e-14

    def test_perturbed_u_residual_hand_value(self, grid_a, params_a):
        # u = 0.21, w = 0.8: the u-equation residual is
        # (1 - 0.21 - 0.8) * 0.21 = -0.0021 at every node
        state = FieldSet.constant(grid_a, 0.21, [0.8])
        fields = residual_fields(state, params_a)
        np.testing.assert_allclose(fields[-1], -0.0021, rtol=1e-12)

    def test_perturbed_w_residual_hand_value(self, grid_a, params_a):
        # the w-equation picks up (-0.2 + 0.21) * 0.8 = 0.008
        state = FieldSet.constant(grid_a, 0.21, [0.8])
        fields = residual_fields(state, params_a)
        np.testing.assert_allclose(fields[0], 0.008, rtol=1e-12)
        assert residual_norm(state, params_a) == pytest.approx(0.008)

    def test_components_ordered_w_then_u(self, grid_a, params_two):
        state = FieldSet.constant(grid_a, 0.3, [0.1, 0.2])
        fields = residual_fields(state, params_two)
        assert len(fields) == 3


class TestImexStep:
    def test_fixed_point_at_equilibrium(self, state_a, params_a):
        new = imex_step(state_a, params_a, 0.5)
        assert new.sup_diff(state_a) <= 1e-10

    def test_positivity_under_large_beta(self, grid_a, params_two, rng):
        params_two.beta = 1e6
        state = FieldSet.from_arrays(
            grid_a, rng.random(201),
            [rng.random(201), rng.random(201)])
        for _ in range(5):
            state = imex_step(state, params_two, 0.5)
            assert state.min_value() >= 0.0

    def test_zero_state_is_invariant(self, grid_a, params_a):
        state = FieldSet.constant(grid_a, 0.0, [0.0])
        new = imex_step(state, params_a, 0.5)
        assert new.sup() == 0.0

    def test_step_consistency_with_dynamics(self, grid_a, params_a):
        # one step from a smooth non-steady state approximates tau * residual
        state = FieldSet.constant(grid_a, 0.4, [0.4])
        res = residual_fields(state, params_a)
        for tau in (1e-2, 1e-3):
            new = imex_step(state, params_a, tau)
            rate_u = (new.u.values - state.u.values) / tau
            err = np.max(np.abs(rate_u - res[-1]))
            assert err < 5.0 * tau  # first-order consistency


class TestMarchToSteady:
    def test_scenario_a_recovery(self, grid_a, params_a):
        initial = FieldSet.constant(grid_a, 1.0, [0.1])
        report = march_to_steady(initial, params_a, SolveSettings(tau=0.5))
        assert report.converged
        assert report.residual_sup <= 1e-8
        target = FieldSet.constant(grid_a, 0.2, [0.8])
        assert report.state.sup_diff(target) <= 1e-6

    def test_stays_at_equilibrium(self, state_a, params_a):
        report = march_to_steady(state_a, params_a, SolveSettings())
        assert report.converged
        assert report.steps_taken == 0

    def test_dynamics_stay_spatially_constant(self, grid_a, params_a):
        initial = FieldSet.constant(grid_a, 1.0, [0.1])
        report = march_to_steady(initial, params_a,
                                 SolveSettings(tau=0.5, max_steps=50))
        u = report.state.u.values
        assert np.max(u) - np.min(u) <= 1e-10

    def test_unconverged_flagged(self, grid_a, params_a):
        initial = FieldSet.constant(grid_a, 1.0, [0.1])
        report = march_to_steady(initial, params_a,
                                 SolveSettings(tau=0.5, max_steps=3))
        assert not report.converged
        assert report.steps_taken == 3

    def test_observer_sees_steps_and_can_stop(self, grid_a, params_a):
        initial = FieldSet.constant(grid_a, 1.0, [0.1])
        seen = []

        def watch(step, state):
            seen.append(step)
            if step >= 4:
                raise StopIteration

        report = march_to_steady(initial, params_a,
                                 SolveSettings(tau=0.5), observer=watch)
        assert seen == [1, 2, 3, 4]
        assert report.steps_taken == 4

    def test_blow_up_guard(self, grid_a):
        # negative growth margin params are fine; force blow-up via huge lambda
        p = ModelParams(N=1, D=1.0, lam=1.0, mu=1.0, d=[1.0], omega=[0.2],
                        k=[1.0], a=[[0.0]], delta=0.2)
        initial = FieldSet.constant(grid_a, 1e7, [0.1])
        with pytest.raises(BlowUpError):
            march_to_steady(initial, p, SolveSettings(tau=0.5, max_steps=10))


class TestNewtonRefine:
    def test_quadratic_convergence_near_equilibrium(self, grid_a, params_a):
        state = FieldSet.constant(grid_a, 0.2 + 1e-3, [0.8])
        report = newton_refine(state, params_a,
                               SolveSettings(tol_residual=1e-12))
        assert report.converged
        assert report.residual_sup <= 1e-12
        assert report.steps_taken <= 5

    def test_matches_marched_solution(self, grid_a, params_a):
        state = FieldSet.constant(grid_a, 0.25, [0.75])
        report = newton_refine(state, params_a,
                               SolveSettings(tol_residual=1e-12))
        target = FieldSet.constant(grid_a, 0.2, [0.8])
        assert report.state.sup_diff(target) <= 1e-10

    def test_iterates_stay_nonnegative(self, grid_a, params_two, rng):
        state = FieldSet.from_arrays(grid_a, 0.3 + 0.1 * rng.random(201),
                                     [0.2 * rng.random(201),
                                      0.2 * rng.random(201)])
        report = newton_refine(state, params_two,
                               SolveSettings(tol_residual=1e-10))
        assert report.state.min_value() >= 0.0


class TestContinueInBeta:
    def test_schedule_must_increase(self, grid_a, params_two):
        initial = FieldSet.constant(grid_a, 0.2, [0.1, 0.1])
        with pytest.raises(ValueError):
            continue_in_beta(initial, params_two, [10.0, 10.0], SolveSettings())
        with pytest.raises(ValueError):
            continue_in_beta(initial, params_two, [], SolveSettings())

    def test_trace_structure(self, grid_a, params_a):
        initial = FieldSet.constant(grid_a, 1.0, [0.1])
        trace = continue_in_beta(initial, params_a, [1.0, 2.0],
                                 SolveSettings(tau=0.5))
        assert trace.betas == [1.0, 2.0]
        assert len(trace.reports) == 2
        assert all(r.converged for r in trace.reports)

    def test_single_species_unaffected_by_beta(self, grid_a, params_a):
        # with N = 1 the beta term is inactive; every entry lands on (0.2, 0.8)
        initial = FieldSet.constant(grid_a, 1.0, [0.1])
        trace = continue_in_beta(initial, params_a, [1.0, 100.0],
                                 SolveSettings(tau=0.5))
        target = FieldSet.constant(grid_a, 0.2, [0.8])
        for rep in trace.reports:
            assert rep.state.sup_diff(target) <= 1e-6


class TestSolveSettings:
    def test_rejects_nonpositive_tolerances(self):
        with pytest.raises(ValueError):
            SolveSettings(tau=0.0)
        with pytest.raises(ValueError):
            SolveSettings(tol_residual=-1.0)
        with pytest.raises(ValueError):
            SolveSettings(max_steps=0)


class TestFieldSet:
    def test_permuted(self, grid_a):
        state = FieldSet.constant(grid_a, 0.1, [0.2, 0.3])
        swapped = state.permuted([1, 0])
        assert swapped.w[0].values[0] == pytest.approx(0.3)
        assert swapped.w[1].values[0] == pytest.approx(0.2)

    def test_sup_diff_symmetric(self, grid_a):
        a = FieldSet.constant(grid_a, 0.1, [0.2])
        b = FieldSet.constant(grid_a, 0.4, [0.1])
        assert a.sup_diff(b) == b.sup_diff(a) == pytest.approx(0.3)

    def test_copy_is_deep(self, grid_a):
        a = FieldSet.constant(grid_a, 0.1, [0.2])
        b = a.copy()
        b.u.values[:] = 9.0
        assert a.u.values[0] == pytest.approx(0.1)
