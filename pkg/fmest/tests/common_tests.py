import os
import tempfile

import numpy as np
from fmest.datasets import make_bernoulli_stream
from fmest.exceptions import DomainError
from joblib import load
from sklearn.base import BaseEstimator, clone
from sklearn.exceptions import NotFittedError


class StateEstimatorTestMixin:
    def prepare_data(self):
        return make_bernoulli_stream(
            n_samples=200, theta=0.3, random_state=0
        )

    def test_fit(self):
        self.assertIsInstance(self.sut.fit(self.X), BaseEstimator)

    def test_fit_without_stream(self):
        self.sut.fit()

        self.assertEqual(self.sut.n_samples_seen_, 0)
        self.assertEqual(self.sut.state_, self.sut.machine_.initial)

    def test_estimate(self):
        estimate = self.sut.fit(self.X).estimate_

        self.assertGreaterEqual(estimate, 0.)
        self.assertLessEqual(estimate, 1.)

    def test_n_samples_seen(self):
        self.sut.fit(self.X[:50]).partial_fit(self.X[50:])

        self.assertEqual(self.sut.n_samples_seen_, self.X.shape[0])

    def test_partial_fit(self):
        state = self.sut.fit(self.X).state_

        self.sut.fit(self.X[:100]).partial_fit(self.X[100:])

        self.assertEqual(self.sut.state_, state)

    def test_fit_resets_state(self):
        estimate = self.sut.fit(self.X).estimate_

        self.sut.partial_fit(self.X)

        self.assertEqual(self.sut.fit(self.X).estimate_, estimate)

    def test_risk(self):
        risk = self.sut.fit().risk(0.3)

        self.assertGreater(risk, 0.)
        self.assertLess(risk, 0.25)

    def test_worst_case_risk(self):
        self.sut.fit()

        report = self.sut.worst_case_risk()

        self.assertEqual(report.worst, np.max(report.risk))
        self.assertGreaterEqual(report.worst, self.sut.risk(0.5) - 1e-15)

    def test_to_pickle(self):
        self.sut.fit(self.X)

        with tempfile.TemporaryDirectory() as tmpdir:
            filename = os.path.join(tmpdir, 'estimator.joblib')

            self.sut.to_pickle(filename)

            est      = load(filename)

        self.assertEqual(est.estimate_, self.sut.estimate_)
        self.assertEqual(est.state_, self.sut.state_)

    def test_clone(self):
        self.assertEqual(clone(self.sut).get_params(), self.sut.get_params())

    def test_invalid_stream(self):
        self.assertRaises(DomainError, self.sut.fit, [0, 1, 2])

    def test_estimate_notfitted(self):
        self.assertRaises(NotFittedError, getattr, self.sut, 'estimate_')

    def test_partial_fit_notfitted(self):
        self.assertRaises(NotFittedError, self.sut.partial_fit, self.X)

    def test_risk_notfitted(self):
        self.assertRaises(NotFittedError, self.sut.risk, 0.5)

    def test_worst_case_risk_notfitted(self):
        self.assertRaises(NotFittedError, self.sut.worst_case_risk)
