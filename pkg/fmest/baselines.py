"""Randomized counter estimator with a binomial stationary law.

The counter sits on levels ``0..S-1`` and estimates ``i / (S - 1)`` on
level ``i``. A one moves it up with probability ``(S - 1 - i) / (S - 1)``
and a zero moves it down with probability ``i / (S - 1)``; otherwise it
stays. Detailed balance then gives the Binomial(S - 1, theta) stationary
law, so the asymptotic risk is ``theta (1 - theta) / (S - 1)``.

References
----------
.. [#samaniego73] Samaniego, F. J.,
    "Estimating a binomial parameter with finite memory,"
    IEEE Transactions on Information Theory, 19(5), pp. 636-643, 1973.
"""

import logging
import numbers

import numpy as np
from scipy import sparse, stats
from sklearn.utils import Bunch

from .exceptions import DomainError
from .machine import TransitionMatrix
from .metrics import batch_standard_error, N_BATCHES
from .utils import check_theta

__all__ = [
    'RandomizedMachine', 'build_samaniego', 'samaniego_exact_risk',
    'samaniego_worst_case_risk', 'simulate_randomized'
]

CHUNK_SIZE = 1 << 16

logger     = logging.getLogger(__name__)


def _check_n_states(S):
    if isinstance(S, bool) or not isinstance(S, numbers.Integral) or S < 2:
        raise DomainError(f'S must be an integer >= 2 but was {S}')


class RandomizedMachine:
    """Randomized S-state counter.

    Parameters
    ----------
    S : int
        Number of levels, at least 2.

    initial : int, default None
        Starting level in ``[0, S - 1]``. If None, start in the middle.

    Examples
    --------
    >>> from fmest.baselines import RandomizedMachine
    >>> rm = RandomizedMachine(3)
    >>> rm.up.tolist(), rm.down.tolist()
    ([1.0, 0.5, 0.0], [0.0, 0.5, 1.0])
    """

    def __init__(self, S, initial=None):
        _check_n_states(S)

        if initial is None:
            initial = (S - 1) // 2

        if not 0 <= initial <= S - 1:
            raise DomainError(
                f'initial must be in [0, {S - 1}] but was {initial}'
            )

        levels       = np.arange(S)

        self.S       = int(S)
        self.initial = int(initial)
        self.up      = (S - 1. - levels) / (S - 1.)
        self.down    = levels / (S - 1.)

    def __repr__(self):
        return f'RandomizedMachine(S={self.S}, initial={self.initial})'

    @property
    def num_states(self):
        """int: Number of levels.
        """

        return self.S

    @property
    def estimate(self):
        """array-like of shape (S,): Estimate of every level.
        """

        return np.arange(self.S) / (self.S - 1.)

    def transition_matrix(self, theta):
        """Build the transition matrix of the counter driven by Bern(theta).

        Row ``i`` belongs to level ``i``.
        """

        check_theta(theta)

        S      = self.S
        up     = theta * self.up
        down   = (1. - theta) * self.down
        stay   = theta * self.down + (1. - theta) * self.up
        levels = np.arange(S)
        matrix = sparse.coo_matrix(
            (
                np.concatenate([up[:-1], down[1:], stay]),
                (
                    np.concatenate([levels[:-1], levels[1:], levels]),
                    np.concatenate([levels[1:], levels[:-1], levels])
                )
            ),
            shape=(S, S)
        )

        return TransitionMatrix(matrix, theta)

    def stationary_pmf(self, theta):
        """Binomial(S - 1, theta) law the counter settles in."""

        check_theta(theta, closed=True)

        return stats.binom.pmf(np.arange(self.S), self.S - 1, theta)


def build_samaniego(S, initial=None):
    """Build the randomized S-state counter.

    Examples
    --------
    >>> from fmest.baselines import build_samaniego
    >>> build_samaniego(2).estimate.tolist()
    [0.0, 1.0]
    """

    rm = RandomizedMachine(S, initial)

    logger.debug('built %r', rm)

    return rm


def samaniego_exact_risk(S, theta, method='closed'):
    """Asymptotic risk of the randomized counter.

    Parameters
    ----------
    S : int
        Number of levels.

    theta : float
        Bernoulli parameter in [0, 1].

    method : str, default 'closed'
        ``'closed'`` returns ``theta (1 - theta) / (S - 1)``; ``'pmf'`` sums
        the squared error against the binomial pmf.

    Examples
    --------
    >>> from fmest.baselines import samaniego_exact_risk
    >>> samaniego_exact_risk(2, 0.5)
    0.25
    >>> round(samaniego_exact_risk(11, 0.5, method='pmf'), 12)
    0.025
    """

    _check_n_states(S)
    check_theta(theta, closed=True)

    if method == 'closed':
        return theta * (1. - theta) / (S - 1.)

    if method == 'pmf':
        levels = np.arange(S)
        pmf    = stats.binom.pmf(levels, S - 1, theta)

        return float(np.dot(pmf, (levels / (S - 1.) - theta) ** 2))

    raise ValueError(f'invalid method {method!r}')


def samaniego_worst_case_risk(S, grid=None):
    """Risk of the randomized counter over a theta grid.

    Parameters
    ----------
    S : int
        Number of levels.

    grid : array-like, default None
        Theta values. If None, the exact maximizer ``theta = 1/2`` is used.

    Returns
    -------
    report : Bunch
        ``theta_grid``, ``risk``, ``worst``, ``worst_theta``,
        ``S_physical``, ``sum_Nk`` (both equal to ``S``) and ``normalized``
        (``worst * S``).
    """

    _check_n_states(S)

    grid = np.array([.5]) if grid is None \
        else np.asarray(grid, dtype=float).ravel()
    risk = np.array([samaniego_exact_risk(S, theta) for theta in grid])
    i    = int(np.argmax(risk))

    return Bunch(
        theta_grid  = grid,
        risk        = risk,
        worst       = float(risk[i]),
        worst_theta = float(grid[i]),
        S_physical  = S,
        sum_Nk      = S,
        normalized  = float(risk[i] * S)
    )


def simulate_randomized(rm, theta, n, seed=0, n_batches=N_BATCHES):
    """Time-averaged squared error of the counter on a random stream.

    Both the input bits and the internal coin are drawn from a Philox
    generator keyed by ``seed``, so reruns are bit-identical.

    Parameters
    ----------
    rm : RandomizedMachine
        Counter, started at its initial level.

    theta : float
        Bernoulli parameter in (0, 1).

    n : int
        Number of steps, at least ``n_batches``.

    seed : int, default 0
        Seed of the generator.

    n_batches : int, default 100
        Number of batches of the standard error.

    Returns
    -------
    result : Bunch
        ``empirical_risk``, ``standard_error``, ``steps_used`` and
        ``occupancy`` (fraction of steps spent on every level).
    """

    check_theta(theta)

    if n < n_batches:
        raise DomainError(f'n must be at least {n_batches} but was {n}')

    rng       = np.random.Generator(np.random.Philox(seed))
    up        = rm.up.tolist()
    down      = rm.down.tolist()
    errors    = (rm.estimate - theta) ** 2
    size      = n // n_batches
    sums      = np.zeros(n_batches)
    counts    = np.zeros(n_batches)
    visits    = np.zeros(rm.S)
    level     = rm.initial

    for start in range(0, n, CHUNK_SIZE):
        m     = min(CHUNK_SIZE, n - start)
        bits  = (rng.random(m) < theta).tolist()
        coins = rng.random(m).tolist()
        path  = []

        for bit, u in zip(bits, coins):
            if bit:
                if u < up[level]:
                    level += 1
            elif u < down[level]:
                level -= 1

            path.append(level)

        path    = np.asarray(path, dtype=np.int64)
        index   = np.minimum(
            np.arange(start, start + m) // size, n_batches - 1
        )
        sums   += np.bincount(index, weights=errors[path], minlength=n_batches)
        counts += np.bincount(index, minlength=n_batches)
        visits += np.bincount(path, minlength=rm.S)

    risk      = float(sums.sum() / n)

    logger.debug(
        'simulated %r for %d steps at theta=%.6g: risk %.6g',
        rm, n, theta, risk
    )

    return Bunch(
        empirical_risk = risk,
        standard_error = batch_standard_error(sums / counts),
        steps_used     = n,
        occupancy      = visits / n
    )
