import logging

from ..analysis import (
    endpoint_orbit_risk, exact_risk, stationary_plan, worst_case_risk
)
from ..construction import build_estimator, choose_K, DEFAULT_EPSILON
from ..exceptions import DomainError
from ..utils import check_epsilon, check_n_classes, check_theta
from .base import BaseStateEstimator

__all__ = ['NestedISIT']

logger = logging.getLogger(__name__)


class NestedISIT(BaseStateEstimator):
    """Deterministic estimator composed of run-counting testers.

    Class ``k`` of ``K`` classes is a tester deciding between
    ``theta > (k+1)/(K+2)`` and ``theta < k/(K+2)``; its decisions move the
    machine to a neighbouring class, and every state of class ``k``
    estimates ``k/(K+2)``. The worst-case asymptotic risk is ``O(1/S)``.

    Parameters
    ----------
    K : int, default None
        Number of classes. Exactly one of ``K`` and ``state_cap`` must be
        given.

    epsilon : float, default 0.01
        Error probability every tester is sized for.

    n_states : int or list of int, default None
        Tester sizes overriding those derived from ``epsilon``.

    state_cap : int, default None
        Largest nominal state count; the number of classes is the largest
        that fits.

    n_jobs : int, default None
        Number of jobs of the risk sweeps. If None, read ``FMEST_THREADS``.

    Attributes
    ----------
    machine_ : Machine
        Composed machine.

    layout_ : ComposedLayout
        Its class structure.

    state_ : int
        Current state (1-based).

    n_samples_seen_ : int
        Number of bits read since ``fit``.

    Examples
    --------
    >>> from fmest.estimators import NestedISIT
    >>> est = NestedISIT(K=3, n_states=6).fit([1, 1, 1])
    >>> est.estimate_
    0.6
    >>> est.class_
    3
    """

    def __init__(
        self, K=None, epsilon=DEFAULT_EPSILON, n_states=None, state_cap=None,
        n_jobs=None
    ):
        self.K         = K
        self.epsilon   = epsilon
        self.n_states  = n_states
        self.state_cap = state_cap
        self.n_jobs    = n_jobs

    def _check_params(self):
        check_epsilon(self.epsilon)

        if (self.K is None) == (self.state_cap is None):
            raise DomainError('exactly one of K and state_cap must be given')

        if self.K is not None:
            check_n_classes(self.K)

    def _build(self):
        K                  = self.K

        if K is None:
            K              = choose_K(self.state_cap, self.epsilon)

        machine, self.layout_ = build_estimator(K, self.epsilon, self.n_states)
        self._plan         = stationary_plan(machine)

        logger.info('fitted %r with %d states', self, machine.num_states)

        return machine

    def _consume(self, X):
        if X.size:
            self.state_ = int(self.machine_.run(X, start=self.state_)[-1])

    def _estimate(self):
        return float(self.machine_.estimate[self.state_ - 1])

    def _risk(self, theta):
        check_theta(theta, closed=True)

        if theta in (0, 1):
            return endpoint_orbit_risk(self.machine_, theta)

        return exact_risk(self.machine_, self.layout_, theta, plan=self._plan)

    def _worst_case_risk(self, grid):
        return worst_case_risk(
            self.machine_, self.layout_, grid=grid, n_jobs=self.n_jobs
        )

    @property
    def class_(self):
        """int: Class of the current state.
        """

        self._check_is_fitted()

        return int(self.layout_.class_map[self.state_ - 1])
