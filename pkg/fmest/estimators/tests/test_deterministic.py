import doctest
import unittest

from fmest.construction import state_budget
from fmest.estimators import deterministic
from fmest.exceptions import DomainError
from fmest.tests.common_tests import StateEstimatorTestMixin


def load_tests(loader, tests, ignore):
    tests.addTests(doctest.DocTestSuite(deterministic))

    return tests


class NestedISITTest(unittest.TestCase, StateEstimatorTestMixin):
    def setUp(self):
        self.X   = self.prepare_data()

        self.sut = deterministic.NestedISIT(K=3, n_states=6)

    def test_class(self):
        self.sut.fit([1, 1])

        self.assertEqual(self.sut.class_, 3)

        self.sut.partial_fit([0, 0])

        self.assertEqual(self.sut.class_, 2)

    def test_layout(self):
        self.sut.fit()

        self.assertEqual(self.sut.layout_.K, 3)
        self.assertEqual(self.sut.num_states_, 12)

    def test_endpoint_risk(self):
        self.sut.fit()

        self.assertLessEqual(self.sut.risk(0.), (2. / 5.) ** 2)
        self.assertLessEqual(self.sut.risk(1.), (3. / 5.) ** 2)

    def test_state_cap(self):
        cap = state_budget(3).sum_Nk
        est = deterministic.NestedISIT(state_cap=cap).fit()

        self.assertEqual(est.layout_.K, 3)
        self.assertLessEqual(est.layout_.sum_Nk, cap)

    def test_invalid_params(self):
        self.assertRaises(
            DomainError, deterministic.NestedISIT().fit
        )
        self.assertRaises(
            DomainError, deterministic.NestedISIT(K=3, state_cap=1000).fit
        )
        self.assertRaises(
            DomainError, deterministic.NestedISIT(K=3, epsilon=0.7).fit
        )
        self.assertRaises(DomainError, deterministic.NestedISIT(K=1).fit)
