"""End-to-end checks on the two-state example shipped in ``scenarios/two_state_example.json``."""
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from ..divergence import gamma
from ..least_favorable import (
    assemble,
    backward_recursion,
    certificate_margin,
    certify,
    mid_interval,
    sigma_rho,
    stabilizing_check,
    steady_backward,
)
from ..performance import compare, error_system, lyapunov_recursion, simulate_errors
from ..robust_filter import run_forward, steady_state
from ..service import Scenario
from ..statespace import kalman_gain_schedule, kalman_steady
from .factories import EXAMPLE_C_MAX, two_state_model


SCENARIO = Path(__file__).resolve().parent.parent / 'scenarios' / 'two_state_example.json'


class TwoStateExampleTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.model = two_state_model()
        cls.ss = steady_state(cls.model, EXAMPLE_C_MAX)
        cls.certificate = certify(cls.ss)
        cls.limit = steady_backward(cls.ss, certificate=cls.certificate)
        cls.lf = assemble(cls.model, cls.ss, cls.limit.X)

    def test_scenario_file_loads(self):
        scenario = Scenario.load(SCENARIO)
        self.assertEqual(scenario.c, EXAMPLE_C_MAX)
        assert_array_equal(scenario.model.A, self.model.A)
        self.assertEqual(scenario.mc.N, 10000)

    def test_tolerance_carries_half_factor(self):
        # 0.1879 is the same tolerance measured without the ½ factor
        self.assertAlmostEqual(gamma(self.ss.P, self.ss.theta), EXAMPLE_C_MAX, delta=1e-8)
        self.assertAlmostEqual(2.0 * gamma(self.ss.P, self.ss.theta), 0.1879, delta=1e-7)

    def test_certificate_holds(self):
        self.assertTrue(self.certificate.holds)
        self.assertAlmostEqual(certificate_margin(self.ss.Abar, self.ss.Bbar, self.ss.theta, 1.382),
                               4.02e-5, delta=1e-5)

    def test_sigma_rho(self):
        expected = 1e2 * np.array([[5.89, -5.03], [-5.03, 4.31]])
        assert_allclose(sigma_rho(self.ss.Abar, self.ss.theta, 1.382), expected, rtol=1e-2)

    def test_backward_limit(self):
        expected = 1e2 * np.array([[4.56, -3.90], [-3.90, 3.34]])
        assert_allclose(self.limit.OmegaInv, expected, rtol=1e-2)

        run = run_forward(self.model, None, EXAMPLE_C_MAX, 2000)
        window = mid_interval(backward_recursion(self.model, run.steps))
        middle = window[len(window) // 2].OmegaInv
        assert_allclose(middle, self.limit.OmegaInv, rtol=1e-8, atol=1e-8 * np.linalg.norm(self.limit.OmegaInv))

    def test_stabilizing_eigenvalues(self):
        check = stabilizing_check(self.limit.X, self.ss.Abar, self.ss.Bbar)
        self.assertTrue(check.stable)
        assert_allclose(np.sort(np.abs(check.eigenvalues))[::-1], [0.8373, 0.0892], atol=1e-3)

    def test_db_gap(self):
        report = compare(self.model, EXAMPLE_C_MAX, T=200)
        assert_allclose(report.gap_db, [1.5, 1.5], atol=0.3)
        self.assertTrue(np.all(report.gap_db > 0))

    def test_monte_carlo_agreement(self):
        for gain in (kalman_steady(self.model)[0], self.lf.G):
            es = error_system(self.lf, gain)
            estimate = simulate_errors(es, 10000, 500, seed=20240601)
            exact = np.diag(lyapunov_recursion(es, 500)[-1])[:2]
            assert_array_equal(np.abs(estimate.final_variances - exact) < 3.0 * estimate.final_stderr, [True, True])
            assert_array_equal(np.abs(estimate.means[-1]) < 3.0 * estimate.mean_stderr[-1], [True, True])

    def test_degenerate_tolerance_is_nominal(self):
        run = run_forward(self.model, None, 1e-13, 200)
        schedule = kalman_gain_schedule(self.model, 200)
        assert_allclose(run.gains, schedule.gains, atol=1e-10)
        for item in backward_recursion(self.model, run.steps):
            assert_allclose(item.OmegaInv, np.zeros((2, 2)), atol=1e-10)
        ss = steady_state(self.model, 1e-13)
        lf = assemble(self.model, ss, steady_backward(ss).X)
        assert_allclose(lf.Atil[:2, :2], self.model.A, atol=1e-10)
        assert_allclose(lf.Atil[:2, 2:], np.zeros((2, 2)), atol=1e-10)
        assert_allclose(lf.Btil[:2], self.model.B, atol=1e-10)
        assert_allclose(lf.Ctil[:, :2], self.model.C, atol=1e-10)
        assert_allclose(lf.Dtil, self.model.D, atol=1e-10)
