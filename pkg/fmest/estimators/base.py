from abc import abstractmethod, ABC

import numpy as np
from joblib import dump
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..exceptions import DomainError

__all__ = ['BaseStateEstimator']


class BaseStateEstimator(BaseEstimator, ABC):
    """Base class for all finite-memory estimators in fmest.

    An estimator holds a single machine state. ``fit`` builds the machine
    and feeds a bit stream from its initial state; ``partial_fit`` keeps
    reading from wherever the previous call stopped.
    """

    _estimator_type = 'state_estimator'

    def _check_params(self):
        """Raise DomainError if parameters are not valid."""

    def _check_stream(self, X):
        """Return ``X`` as a flat array of bits."""

        if X is None:
            return np.empty(0, dtype=np.int64)

        X = np.asarray(X).ravel()

        if X.size and not np.all((X == 0) | (X == 1)):
            raise DomainError('X must only contain 0 and 1')

        return X.astype(np.int64)

    def _check_is_fitted(self):
        """Raise NotFittedError if the estimator is not fitted."""

        check_is_fitted(self, ['machine_', 'state_', 'n_samples_seen_'])

    @abstractmethod
    def _build(self):
        pass

    @abstractmethod
    def _consume(self, X):
        pass

    @abstractmethod
    def _estimate(self):
        pass

    @abstractmethod
    def _risk(self, theta):
        pass

    @abstractmethod
    def _worst_case_risk(self, grid):
        pass

    @property
    def estimate_(self):
        """float: Estimate attached to the current state.
        """

        self._check_is_fitted()

        return self._estimate()

    @property
    def num_states_(self):
        """int: Number of states of the machine.
        """

        self._check_is_fitted()

        return self.machine_.num_states

    def fit(self, X=None, y=None):
        """Build the machine and feed it a bit stream.

        Parameters
        ----------
        X : array-like of shape (n_samples,), default None
            Bit stream. If None, only build the machine.

        y : ignored

        Returns
        -------
        self : object
            Return self.
        """

        self._check_params()

        X                    = self._check_stream(X)

        self.machine_        = self._build()
        self.state_          = self.machine_.initial
        self.n_samples_seen_ = 0

        self._consume(X)

        self.n_samples_seen_ = X.shape[0]

        return self

    def partial_fit(self, X, y=None):
        """Continue reading a bit stream from the current state.

        Parameters
        ----------
        X : array-like of shape (n_samples,)
            Bit stream.

        y : ignored

        Returns
        -------
        self : object
            Return self.
        """

        self._check_is_fitted()

        X                     = self._check_stream(X)

        self._consume(X)

        self.n_samples_seen_ += X.shape[0]

        return self

    def risk(self, theta):
        """Asymptotic risk of the machine at ``theta``.

        Parameters
        ----------
        theta : float
            Bernoulli parameter.

        Returns
        -------
        risk : float
            Long-run average of the squared error.
        """

        self._check_is_fitted()

        return self._risk(theta)

    def worst_case_risk(self, grid=None):
        """Asymptotic risk over a theta grid and its maximum.

        Parameters
        ----------
        grid : array-like, default None
            Theta values. If None, use the default grid of the estimator.

        Returns
        -------
        report : Bunch
            Risk report, see :func:`fmest.analysis.worst_case_risk`.
        """

        self._check_is_fitted()

        return self._worst_case_risk(grid)

    def to_pickle(self, filename, **kwargs):
        """Persist an estimator object.

        Parameters
        ----------
        filename : str or pathlib.Path
            Path of the file in which it is to be stored.

        kwargs : dict
            Other keywords passed to ``joblib.dump``.

        Returns
        -------
        filenames : list
            List of file names in which the data is stored.
        """

        return dump(self, filename, **kwargs)
