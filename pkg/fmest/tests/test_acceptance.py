"""End-to-end checks of the full-size estimators at epsilon = 0.01."""

import unittest

import numpy as np
from fmest import isit
from fmest.analysis import (
    decomposition_error, default_theta_grid, endpoint_orbit_risk,
    exact_risk, point_diagnostics, stationary_plan
)
from fmest.construction import (
    build_estimator, high_boundary_risk_bound, state_budget
)
from fmest.montecarlo import SimConfig, simulate

EPSILON = 0.01


class EstimatorAcceptanceMixin:
    K = None

    @classmethod
    def setUpClass(cls):
        cls.machine, cls.layout = build_estimator(cls.K, EPSILON)
        cls.plan                = stationary_plan(cls.machine)
        cls.grid                = default_theta_grid(cls.K)
        cls.diagnostics         = [
            point_diagnostics(cls.machine, cls.layout, theta, cls.plan)
            for theta in cls.grid
        ]
        cls.risk                = np.array([d.risk for d in cls.diagnostics])

    def test_worst_case_constant(self):
        self.assertLessEqual(self.risk.max() * self.layout.sum_Nk, 600.)

    def test_boundary_constant(self):
        low = self.grid < 1. / (self.K + 2)

        self.assertTrue(np.any(low))
        self.assertLessEqual(self.risk[low].max() * self.layout.sum_Nk, 300.)

    def test_high_boundary_constant(self):
        high  = self.grid > (self.K + 1.) / (self.K + 2)
        bound = high_boundary_risk_bound(self.K, EPSILON)

        self.assertTrue(np.any(high))
        self.assertLessEqual(self.risk[high].max(), bound)

    def test_tester_errors(self):
        for chain in self.layout.mini_chains:
            errors = isit.worst_error_over_hypothesis(chain)

            self.assertLess(errors.p01, EPSILON)
            self.assertLess(errors.p10, EPSILON)

    def test_closed_form_exit(self):
        for chain in self.layout.mini_chains:
            for theta in np.linspace(0.02, 0.98, 25):
                a           = isit.exit_analysis(chain, theta)
                left, right = isit._log_closed_form(chain.N, chain.s, theta)

                np.testing.assert_allclose(
                    [a.log_prob_exit_left, a.log_prob_exit_right],
                    [left, right],
                    rtol=0., atol=1e-10
                )

    def test_decomposition(self):
        for d in self.diagnostics:
            self.assertLessEqual(d.decomposition_error, 1e-8)

    def test_drift_and_holding_times(self):
        for d in self.diagnostics:
            self.assertIsNot(d.drift_ok, False, msg=f'theta={d.theta}')
            self.assertTrue(d.holding_ok, msg=f'theta={d.theta}')

    def test_state_budget(self):
        budget = state_budget(self.K, EPSILON)

        self.assertEqual(budget.sum_Nk, self.layout.sum_Nk)
        self.assertEqual(budget.physical_S, self.machine.num_states)
        self.assertLessEqual(budget.sum_Nk, budget.closed_form_bound)

    def test_monotone_construction(self):
        s   = np.array([c.s for c in self.layout.mini_chains])
        N_s = np.array([c.N - c.s for c in self.layout.mini_chains])

        self.assertTrue(np.all(np.diff(s) <= 0))
        self.assertTrue(np.all(np.diff(N_s) >= 0))

    def test_endpoints(self):
        K = self.K

        self.assertLessEqual(
            endpoint_orbit_risk(self.machine, 0), (2. / (K + 2)) ** 2
        )
        self.assertLessEqual(
            endpoint_orbit_risk(self.machine, 1), (3. / (K + 2)) ** 2
        )


class FourClassesTest(EstimatorAcceptanceMixin, unittest.TestCase):
    K = 4


class SixClassesTest(EstimatorAcceptanceMixin, unittest.TestCase):
    K = 6


class EightClassesTest(EstimatorAcceptanceMixin, unittest.TestCase):
    K = 8


class TenClassesTest(EstimatorAcceptanceMixin, unittest.TestCase):
    K = 10


class ThreeClassesTest(unittest.TestCase):
    def test_decomposition(self):
        machine, layout = build_estimator(3, EPSILON)
        plan            = stationary_plan(machine)

        for theta in default_theta_grid(3):
            self.assertLessEqual(
                decomposition_error(machine, layout, theta, plan=plan), 1e-8
            )


class SimulationConsistencyTest(unittest.TestCase):
    def setUp(self):
        self.machine, self.layout = build_estimator(6, n_states=8)

    def test_empirical_risk(self):
        for i, theta in enumerate([0.1, 0.37, 0.5, 0.9]):
            result = simulate(
                SimConfig(self.machine, theta, 2000000, seed=2024 + i)
            )
            exact  = exact_risk(self.machine, self.layout, theta)

            self.assertLess(
                abs(result.empirical_risk - exact),
                4. * result.standard_error,
                msg=f'theta={theta}'
            )

    def test_reproducible(self):
        cfg    = SimConfig(self.machine, 0.37, 100000, seed=99)
        first  = simulate(cfg)
        second = simulate(cfg)

        self.assertEqual(first.empirical_risk, second.empirical_risk)
        self.assertEqual(first.standard_error, second.standard_error)
        np.testing.assert_array_equal(
            first.holding_time_means, second.holding_time_means
        )
