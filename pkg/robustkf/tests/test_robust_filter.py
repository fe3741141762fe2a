import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from ..divergence import gamma
from ..exceptions import BracketInvalid, DimensionMismatch, Diverged, NoConvergence
from ..numerics import is_psd, min_eig_sym
from ..robust_filter import (
    converges_at,
    estimate_c_max,
    filter_observations,
    forward_step,
    initial_step,
    run_forward,
    steady_state,
)
from ..statespace import StateSpaceModel, kalman_gain_schedule, kalman_steady
from .factories import EXAMPLE_C_MAX, scalar_model, two_state_model


class ForwardStepTests(SimpleTestCase):
    def test_scalar_step_by_hand(self):
        model = scalar_model()
        step = forward_step(initial_step(model), model, 0.05)
        # P1 = a² v r/(v + r) + b² with v = r = 1
        self.assertAlmostEqual(step.P[0, 0], 0.25 * 0.5 + 1.0, places=14)
        self.assertGreater(step.V[0, 0], step.P[0, 0])
        self.assertAlmostEqual(gamma(step.P, step.theta), 0.05, delta=1e-10)
        self.assertAlmostEqual(step.V[0, 0], step.P[0, 0] / (1.0 - step.theta * step.P[0, 0]), places=12)
        self.assertAlmostEqual(step.G[0, 0], 0.5 * step.V[0, 0] / (step.V[0, 0] + 1.0), places=12)

    def test_degenerate_tolerance_is_kalman(self):
        model = two_state_model()
        run = run_forward(model, None, 1e-13, 50)
        schedule = kalman_gain_schedule(model, 50)
        assert_array_equal(run.thetas, np.zeros(51))
        assert_allclose(np.stack([step.P for step in run.steps]), schedule.covariances, rtol=0, atol=1e-14)
        assert_allclose(run.gains, schedule.gains, rtol=0, atol=1e-12)

    def test_zero_noise_stays_zero(self):
        model = StateSpaceModel(A=[[0.5]], B=[[0.0, 0.0]], C=[[1.0]], D=[[0.0, 1.0]], P0=[[0.0]])
        run = run_forward(model, None, 0.1, 10)
        assert_array_equal(np.stack([step.P for step in run.steps]), np.zeros((11, 1, 1)))
        assert_array_equal(run.thetas, np.zeros(11))


class RunForwardTests(SimpleTestCase):
    def test_step_invariants(self):
        model = two_state_model()
        run = run_forward(model, None, 0.1, 1000)
        self.assertTrue(run.converged)
        self.assertEqual(run.T, 1000)
        for step in run.steps[1:]:
            sigma = np.max(np.linalg.eigvalsh(step.P))
            self.assertLess(step.theta * sigma, 1.0)
            self.assertGreater(step.theta, 0.0)
            self.assertTrue(is_psd(step.V - step.P))
            self.assertAlmostEqual(gamma(step.P, step.theta), 0.1, delta=1e-10 * 1.1)

    def test_divergence_bound(self):
        with self.assertRaises(Diverged) as ctx:
            run_forward(two_state_model(), None, 0.1, 5, divergence_bound=1e-12)
        self.assertEqual(ctx.exception.t, 1)

    def test_stop_on_convergence(self):
        run = run_forward(scalar_model(), None, 0.1, 5000, stop_on_convergence=True)
        self.assertTrue(run.converged)
        self.assertEqual(run.T, run.converged_at)


class SteadyStateTests(SimpleTestCase):
    def test_two_state_model(self):
        model = two_state_model()
        ss = steady_state(model, 0.1)
        self.assertLess(ss.closed_loop_radius, 1.0)
        self.assertLessEqual(ss.residual, 1e-10 * (1.0 + np.linalg.norm(ss.P)))
        self.assertGreater(ss.theta, 0.0)
        self.assertTrue(is_psd(ss.P - model.process_gram))
        self.assertGreater(min_eig_sym(ss.Bbar @ ss.Bbar.T), 0.0)
        self.assertTrue(is_psd(ss.Bbar @ ss.Bbar.T - model.process_gram))

    def test_independent_of_initial_covariance(self):
        model = two_state_model()
        one = steady_state(model, 0.1)
        ten = steady_state(model, 0.1, P0=10.0 * np.eye(2))
        assert_allclose(ten.P, one.P, rtol=1e-8, atol=1e-14)
        self.assertAlmostEqual(ten.theta, one.theta, delta=1e-8 * one.theta)

    def test_theta_increases_with_tolerance(self):
        model = two_state_model()
        thetas = [steady_state(model, c).theta for c in (0.05, 0.1, 0.1879)]
        self.assertLess(thetas[0], thetas[1])
        self.assertLess(thetas[1], thetas[2])

    def test_small_tolerance_matches_kalman(self):
        model = two_state_model()
        G0, P0 = kalman_steady(model)
        # θ ≈ 2√c/|P| still moves the gain by about 2e-5 at c = 1e-12
        ss = steady_state(model, 1e-12)
        self.assertGreater(ss.theta, 0.0)
        assert_allclose(ss.P, P0, atol=5e-6)
        assert_allclose(ss.G, G0, atol=1e-4)
        exact = steady_state(model, 1e-14)
        self.assertEqual(exact.theta, 0.0)
        assert_allclose(exact.P, P0, atol=1e-9)
        assert_allclose(exact.G, G0, atol=1e-9)

    def test_no_convergence(self):
        with self.assertRaises(NoConvergence) as ctx:
            steady_state(two_state_model(), 0.1, max_iterations=5)
        self.assertEqual(ctx.exception.iterations, 5)
        self.assertEqual(ctx.exception.last_iterate.shape, (2, 2))


class CMaxTests(SimpleTestCase):
    def test_bracket_validation(self):
        with self.assertRaises(BracketInvalid):
            estimate_c_max(scalar_model(), (1.0, 0.5), 3)
        with self.assertRaises(BracketInvalid):
            estimate_c_max(scalar_model(), (0.0, 0.5), 3)

    def test_scalar_convergence_check(self):
        self.assertTrue(converges_at(scalar_model(), 0.1, criterion='forward'))

    def test_bisection_invariant(self):
        model = two_state_model()
        estimate = estimate_c_max(model, (0.01, 10.0), 4, criterion='certified', horizon=3000)
        self.assertEqual(estimate.criterion, 'certified')
        self.assertTrue(converges_at(model, estimate.c_max, criterion='certified', horizon=3000))
        if not estimate.saturated:
            self.assertGreater(estimate.upper, estimate.c_max)
            self.assertFalse(converges_at(model, estimate.upper, criterion='certified', horizon=3000))

    def test_certified_ceiling_on_two_state_model(self):
        # 5.005 and 2.5075 fail, 1.25875 holds, 1.883125 fails
        estimate = estimate_c_max(two_state_model(), (0.01, 10.0), 4, criterion='certified')
        self.assertFalse(estimate.saturated)
        self.assertAlmostEqual(estimate.c_max, 1.25875, places=12)
        self.assertAlmostEqual(estimate.upper, 1.883125, places=12)

    def test_forward_criterion_saturates_on_two_state_model(self):
        estimate = estimate_c_max(two_state_model(), (0.01, 10.0), 4, criterion='forward')
        self.assertTrue(estimate.saturated)
        self.assertEqual(estimate.c_max, 10.0)
        self.assertEqual(estimate.probes, 0)

    def test_default_bracket_survives_singular_rho_edge(self):
        estimate = estimate_c_max(two_state_model(), probes=4, criterion='certified')
        self.assertFalse(estimate.saturated)
        self.assertGreaterEqual(estimate.c_max, 1.25)
        self.assertLess(estimate.c_max, estimate.upper)
        self.assertLessEqual(estimate.upper, 2.6)

    def test_certified_at_rho_edge_tolerance(self):
        self.assertTrue(converges_at(two_state_model(), 1.0, criterion='certified'))

    def test_certified_at_example_tolerance(self):
        self.assertTrue(converges_at(two_state_model(), EXAMPLE_C_MAX, criterion='certified'))

    def test_tenfold_example_tolerance_still_converges(self):
        model = two_state_model()
        self.assertTrue(converges_at(model, 10.0 * EXAMPLE_C_MAX, criterion='certified'))
        ss = steady_state(model, 10.0 * EXAMPLE_C_MAX)
        self.assertGreater(ss.theta, 0.0)
        self.assertLess(np.max(np.abs(np.linalg.eigvals(ss.Abar))), 1.0)

    def test_unknown_criterion(self):
        with self.assertRaises(ValueError):
            converges_at(scalar_model(), 0.1, criterion='other')


class FilterObservationsTests(SimpleTestCase):
    def test_zero_observations(self):
        model = two_state_model()
        estimates = filter_observations(np.ones((2, 1)), model, np.zeros((10, 1)))
        assert_array_equal(estimates, np.zeros((11, 2)))

    def test_hand_computed(self):
        estimates = filter_observations([[0.5]], scalar_model(), [[1.0], [0.0]])
        assert_allclose(estimates, [[0.0], [0.5], [0.0]], atol=1e-15)

    def test_impulse_response(self):
        model = two_state_model()
        G = steady_state(model, 0.1).G
        y = np.zeros((6, 1))
        y[0, 0] = 1.0
        estimates = filter_observations(G, model, y)
        Abar = model.A - G @ model.C
        for t in range(1, 7):
            expected = np.linalg.matrix_power(Abar, t - 1) @ G[:, 0]
            assert_allclose(estimates[t], expected, atol=1e-12)

    def test_time_varying_gains(self):
        model = two_state_model()
        run = run_forward(model, None, 0.1, 20)
        y = np.random.default_rng(0).standard_normal((20, 1))
        estimates = filter_observations(run.gains, model, y)
        self.assertEqual(estimates.shape, (21, 2))

    def test_short_schedule_rejected(self):
        with self.assertRaises(DimensionMismatch):
            filter_observations(np.zeros((3, 2, 1)), two_state_model(), np.zeros((5, 1)))
