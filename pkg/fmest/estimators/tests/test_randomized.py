import doctest
import unittest

from fmest.estimators import randomized
from fmest.exceptions import DomainError
from fmest.tests.common_tests import StateEstimatorTestMixin


def load_tests(loader, tests, ignore):
    tests.addTests(doctest.DocTestSuite(randomized))

    return tests


class SamaniegoTest(unittest.TestCase, StateEstimatorTestMixin):
    def setUp(self):
        self.X   = self.prepare_data()

        self.sut = randomized.Samaniego(n_states=5, random_state=0)

    def test_risk_formula(self):
        self.sut.fit()

        self.assertAlmostEqual(self.sut.risk(0.3), 0.3 * 0.7 / 4.)

    def test_worst_case_risk_formula(self):
        report = self.sut.fit().worst_case_risk()

        self.assertAlmostEqual(report.worst, 1. / 16.)
        self.assertEqual(report.worst_theta, 0.5)

    def test_levels_stay_in_range(self):
        self.sut.fit([1] * 50)

        self.assertEqual(self.sut.state_, 4)
        self.assertEqual(self.sut.estimate_, 1.)

        self.sut.partial_fit([0] * 50)

        self.assertEqual(self.sut.state_, 0)

    def test_invalid_params(self):
        self.assertRaises(DomainError, randomized.Samaniego(n_states=1).fit)
