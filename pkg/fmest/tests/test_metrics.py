import doctest
import unittest

import numpy as np
from fmest import metrics
from fmest.exceptions import DomainError


def load_tests(loader, tests, ignore):
    tests.addTests(doctest.DocTestSuite(metrics))

    return tests


class QuadraticRiskTest(unittest.TestCase):
    def test_quadratic_risk(self):
        self.assertAlmostEqual(metrics.quadratic_risk([.2, .4], .3), .01)
        self.assertEqual(metrics.quadratic_risk(np.ones(7), 1.), 0.)

    def test_invalid(self):
        self.assertRaises(DomainError, metrics.quadratic_risk, [], .5)
        self.assertRaises(DomainError, metrics.quadratic_risk, [.5], 1.1)


class BatchMeansTest(unittest.TestCase):
    def test_two_batches(self):
        mean, se = metrics.batch_means([0.] * 50 + [1.] * 50, n_batches=2)

        self.assertEqual(mean, .5)
        self.assertAlmostEqual(se, .5)

    def test_remainder_in_last_batch(self):
        mean, se = metrics.batch_means([0., 0., 1., 1., 1.], n_batches=2)

        self.assertAlmostEqual(mean, .6)
        self.assertAlmostEqual(se, .5)

    def test_iid_standard_error(self):
        rng      = np.random.RandomState(0)
        samples  = rng.normal(size=100000)
        _, se    = metrics.batch_means(samples)

        self.assertAlmostEqual(se, 1. / np.sqrt(samples.size), delta=1e-3)

    def test_invalid(self):
        self.assertRaises(DomainError, metrics.batch_means, [1., 2.], 1)
        self.assertRaises(DomainError, metrics.batch_means, [1., 2.], 3)
        self.assertRaises(DomainError, metrics.batch_standard_error, [1.])
