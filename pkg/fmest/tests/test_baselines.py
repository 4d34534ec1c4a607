import doctest
import unittest

import numpy as np
from fmest import baselines
from fmest.analysis import stationary_distribution
from fmest.exceptions import DomainError
from scipy import stats


def load_tests(loader, tests, ignore):
    tests.addTests(doctest.DocTestSuite(baselines))

    return tests


class RandomizedMachineTest(unittest.TestCase):
    def test_two_levels(self):
        rm = baselines.build_samaniego(2)

        self.assertEqual(rm.initial, 0)
        self.assertEqual(rm.up.tolist(), [1., 0.])
        self.assertEqual(rm.down.tolist(), [0., 1.])

    def test_three_levels(self):
        rm = baselines.RandomizedMachine(3)

        self.assertEqual(rm.initial, 1)
        self.assertEqual(rm.num_states, 3)
        self.assertEqual(rm.estimate.tolist(), [0., .5, 1.])

    def test_transition_matrix(self):
        tm = baselines.RandomizedMachine(5).transition_matrix(0.3)

        np.testing.assert_allclose(tm.row_sums(), 1.)
        self.assertAlmostEqual(tm.toarray()[0, 1], 0.3)
        self.assertAlmostEqual(tm.toarray()[4, 3], 0.7)
        self.assertAlmostEqual(tm.toarray()[2, 2], 0.5)

    def test_stationary_law_is_binomial(self):
        for S in [2, 5, 16, 64]:
            rm = baselines.RandomizedMachine(S)

            for theta in [0.1, 0.5, 0.73]:
                pi = stationary_distribution(
                    rm.transition_matrix(theta), method='dense'
                )

                np.testing.assert_allclose(
                    pi, stats.binom.pmf(np.arange(S), S - 1, theta),
                    atol=1e-10
                )
                np.testing.assert_allclose(
                    pi, rm.stationary_pmf(theta), atol=1e-10
                )

    def test_invalid(self):
        self.assertRaises(DomainError, baselines.RandomizedMachine, 1)
        self.assertRaises(DomainError, baselines.RandomizedMachine, 2.5)
        self.assertRaises(DomainError, baselines.RandomizedMachine, 4, 4)
        self.assertRaises(DomainError, baselines.RandomizedMachine, 4, -1)


class ExactRiskTest(unittest.TestCase):
    def test_closed_form(self):
        self.assertAlmostEqual(baselines.samaniego_exact_risk(11, 0.5), .025)
        self.assertAlmostEqual(
            baselines.samaniego_exact_risk(5, 0.2), 0.2 * 0.8 / 4
        )

    def test_methods_agree(self):
        for S in [2, 7, 33]:
            for theta in [0., 0.15, 0.5, 1.]:
                self.assertAlmostEqual(
                    baselines.samaniego_exact_risk(S, theta),
                    baselines.samaniego_exact_risk(S, theta, method='pmf'),
                    places=12
                )

    def test_invalid(self):
        self.assertRaises(DomainError, baselines.samaniego_exact_risk, 5, 1.5)
        self.assertRaises(
            ValueError, baselines.samaniego_exact_risk, 5, .5, method='mc'
        )

    def test_worst_case(self):
        report = baselines.samaniego_worst_case_risk(11)

        self.assertAlmostEqual(report.worst, .025)
        self.assertEqual(report.worst_theta, .5)
        self.assertEqual(report.S_physical, 11)
        self.assertEqual(report.sum_Nk, 11)
        self.assertAlmostEqual(report.normalized, .275)

    def test_worst_case_on_grid(self):
        report = baselines.samaniego_worst_case_risk(5, grid=[.1, .4, .9])

        self.assertEqual(report.worst_theta, .4)
        self.assertAlmostEqual(report.worst, .4 * .6 / 4)
        self.assertEqual(report.risk.shape, (3,))


class SimulateRandomizedTest(unittest.TestCase):
    def test_constant_error(self):
        result = baselines.simulate_randomized(
            baselines.RandomizedMachine(2), 0.5, 1000, seed=3
        )

        self.assertEqual(result.empirical_risk, .25)
        self.assertEqual(result.standard_error, 0.)
        self.assertEqual(result.steps_used, 1000)
        self.assertAlmostEqual(result.occupancy.sum(), 1.)

    def test_matches_exact_risk(self):
        rm     = baselines.RandomizedMachine(5)
        result = baselines.simulate_randomized(rm, 0.05, 200000, seed=7)
        exact  = baselines.samaniego_exact_risk(5, 0.05)

        self.assertLess(
            abs(result.empirical_risk - exact), 4. * result.standard_error
        )
        np.testing.assert_allclose(
            result.occupancy, rm.stationary_pmf(0.05), atol=0.02
        )

    def test_deterministic(self):
        rm     = baselines.RandomizedMachine(9)
        first  = baselines.simulate_randomized(rm, 0.3, 5000, seed=11)
        second = baselines.simulate_randomized(rm, 0.3, 5000, seed=11)
        other  = baselines.simulate_randomized(rm, 0.3, 5000, seed=12)

        self.assertEqual(first.empirical_risk, second.empirical_risk)
        np.testing.assert_array_equal(first.occupancy, second.occupancy)
        self.assertNotEqual(first.empirical_risk, other.empirical_risk)

    def test_invalid(self):
        rm = baselines.RandomizedMachine(4)

        self.assertRaises(
            DomainError, baselines.simulate_randomized, rm, 0.5, 99
        )
        self.assertRaises(
            DomainError, baselines.simulate_randomized, rm, 0., 1000
        )
