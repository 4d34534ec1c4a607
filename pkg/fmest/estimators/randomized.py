import numbers

from sklearn.utils import check_random_state

from ..baselines import (
    build_samaniego, samaniego_exact_risk, samaniego_worst_case_risk
)
from ..exceptions import DomainError
from .base import BaseStateEstimator

__all__ = ['Samaniego']


class Samaniego(BaseStateEstimator):
    """Randomized counter estimator with a binomial stationary law.

    Parameters
    ----------
    n_states : int, default 16
        Number of counter levels, at least 2.

    random_state : int or RandomState instance, default None
        Seed of the pseudo random number generator driving the internal
        coin.

    Attributes
    ----------
    machine_ : RandomizedMachine
        Counter.

    state_ : int
        Current level in ``[0, n_states - 1]``.

    n_samples_seen_ : int
        Number of bits read since ``fit``.

    References
    ----------
    .. [#samaniego73] Samaniego, F. J.,
        "Estimating a binomial parameter with finite memory,"
        IEEE Transactions on Information Theory, 19(5), pp. 636-643, 1973.

    Examples
    --------
    >>> from fmest.estimators import Samaniego
    >>> est = Samaniego(n_states=2).fit([1])
    >>> est.estimate_
    1.0
    >>> est.risk(0.5)
    0.25
    """

    def __init__(self, n_states=16, random_state=None):
        self.n_states     = n_states
        self.random_state = random_state

    def _check_params(self):
        if isinstance(self.n_states, bool) \
                or not isinstance(self.n_states, numbers.Integral) \
                or self.n_states < 2:
            raise DomainError(
                f'n_states must be an integer >= 2 but was {self.n_states}'
            )

    def _build(self):
        self.random_state_ = check_random_state(self.random_state)

        return build_samaniego(self.n_states)

    def _consume(self, X):
        up    = self.machine_.up
        down  = self.machine_.down
        level = self.state_
        coins = self.random_state_.uniform(size=X.shape[0])

        for bit, u in zip(X.tolist(), coins.tolist()):
            if bit:
                if u < up[level]:
                    level += 1
            elif u < down[level]:
                level -= 1

        self.state_ = level

    def _estimate(self):
        return float(self.machine_.estimate[self.state_])

    def _risk(self, theta):
        return samaniego_exact_risk(self.n_states, theta)

    def _worst_case_risk(self, grid):
        return samaniego_worst_case_risk(self.n_states, grid)
