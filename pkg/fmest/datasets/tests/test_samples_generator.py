import doctest
import unittest

import numpy as np
from fmest.datasets import make_bernoulli_stream, samples_generator
from fmest.exceptions import DomainError


def load_tests(loader, tests, ignore):
    tests.addTests(doctest.DocTestSuite(samples_generator))

    return tests


class MakeBernoulliStreamTest(unittest.TestCase):
    def test_make_bernoulli_stream(self):
        X = make_bernoulli_stream(n_samples=100, theta=0.3, random_state=0)

        self.assertEqual(X.shape, (100,))
        self.assertTrue(np.all((X == 0) | (X == 1)))

    def test_reproducible(self):
        X1 = make_bernoulli_stream(n_samples=50, random_state=1)
        X2 = make_bernoulli_stream(n_samples=50, random_state=1)

        np.testing.assert_array_equal(X1, X2)

    def test_frequency(self):
        X = make_bernoulli_stream(n_samples=20000, theta=0.2, random_state=0)

        self.assertAlmostEqual(X.mean(), 0.2, delta=0.02)

    def test_endpoints(self):
        self.assertEqual(make_bernoulli_stream(5, theta=0.).sum(), 0)
        self.assertEqual(make_bernoulli_stream(5, theta=1.).sum(), 5)

    def test_invalid_theta(self):
        self.assertRaises(DomainError, make_bernoulli_stream, 10, 1.5)
