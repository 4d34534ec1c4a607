"""Run-counting hypothesis testers.

``ISIT(N, p, q)`` decides between ``theta > p`` and ``theta < q`` by
counting runs. Started at state ``s``, it moves up on ones and down on
zeros and leaves through the right after ``N - s`` consecutive ones or
through the left after ``s - 1`` consecutive zeros. States ``1`` and ``N``
are virtual: the transition that completes a run goes straight to whatever
the chain is glued to, so a chain occupies ``N - 2`` physical states.

Local numbering follows the picture of the chain drawn left to right:
``s`` is neutral, ``s + j`` counts a run of ``j`` ones and ``s - j`` a run
of ``j`` zeros.
"""

import logging
import numbers

import numpy as np
from sklearn.utils import Bunch

from .exceptions import DomainError, NumericalError
from .machine import Machine
from .reduction import absorption_log, elimination_order
from .utils import check_epsilon, check_theta, check_thresholds

__all__ = [
    'MiniChain', 'build_isit', 'closed_form_exit', 'exit_analysis',
    'expected_run_time', 'initial_state', 'log_expected_run_time',
    'pe_upper_bound', 'required_states', 'run_exponent',
    'worst_error_over_hypothesis'
]

logger = logging.getLogger(__name__)


def _check_size(N):
    if isinstance(N, bool) or not isinstance(N, numbers.Integral) or N < 4:
        raise DomainError(f'N must be an integer >= 4 but was {N}')


def _check_band(p, K):
    if isinstance(K, bool) or not isinstance(K, numbers.Integral) or K < 3:
        raise DomainError(f'K must be an integer >= 3 but was {K}')

    # (k + 1) / K and 1 - 1 / K may differ in the last bit
    if not 2. / K - 1e-12 <= p <= 1. - 1. / K + 1e-12:
        raise DomainError(
            f'p must be in [2/K, 1 - 1/K] = [{2. / K}, {1. - 1. / K}] '
            f'but was {p}'
        )


def initial_state(N, p, q):
    """Initial state of ``ISIT(N, p, q)``.

    Parameters
    ----------
    N : int
        Nominal number of states, virtual exits included.

    p : float
        Right threshold.

    q : float
        Left threshold, ``q < p``.

    Returns
    -------
    s : int
        ``2`` plus the nearest integer (halves rounded up) to
        ``(N - 3) log(pq) / (log p(1-p) + log q(1-q))``, clamped to
        ``[2, N - 1]``.

    Examples
    --------
    >>> from fmest.isit import initial_state
    >>> initial_state(11, 0.7, 0.3)
    6
    >>> initial_state(9, 2 / 3, 1 / 3)
    5
    """

    _check_size(N)
    check_thresholds(p, q)

    ratio = np.log2(p * q) / (np.log2(p * (1. - p)) + np.log2(q * (1. - q)))
    s     = 2 + int(np.floor((N - 3) * ratio + 0.5))

    return min(max(s, 2), N - 1)


def required_states(epsilon, p, K):
    """Size of a tester whose error probability stays below ``epsilon``.

    Parameters
    ----------
    epsilon : float
        Target error probability in (0, 0.5).

    p : float
        Right threshold in ``[2/K, 1 - 1/K]``; the left threshold is
        ``p - 1/K``.

    K : int
        Inverse gap between the thresholds.

    Returns
    -------
    N : int
        ``3 + ceil(6 K log2(2 / (epsilon (p - 1/K) (1 - p))))``.

    Examples
    --------
    >>> from fmest.isit import required_states
    >>> required_states(0.01, 0.5, 10)
    601
    >>> required_states(0.1, 0.5, 10)
    402
    """

    check_epsilon(epsilon)
    _check_band(p, K)

    return 3 + int(np.ceil(
        6. * K * np.log2(2. / (epsilon * (p - 1. / K) * (1. - p)))
    ))


def run_exponent(p, q):
    """Exponent ``r(p, q)`` of the error probability bound.

    ``(log p log(1-q) - log q log(1-p)) / (log p(1-p) + log q(1-q))``, with
    base 2 logarithms.
    """

    check_thresholds(p, q)

    lp, lq   = np.log2(p), np.log2(q)
    l1p, l1q = np.log2(1. - p), np.log2(1. - q)

    return float((lp * l1q - lq * l1p) / (lp + l1p + lq + l1q))


def pe_upper_bound(N, p, q, K):
    """Analytic upper bound on the error probability of ``ISIT(N, p, q)``.

    Returns ``(2 / p_min) 2 ** (-r(p, q) (N - 3))`` with
    ``p_min = min(p(1-p), q(1-q))``.
    """

    _check_size(N)
    _check_band(p, K)

    if abs(q - (p - 1. / K)) > 1e-12:
        raise DomainError(f'q must equal p - 1/K but was {q}')

    p_min = min(p * (1. - p), q * (1. - q))
    N_min = 3 + int(np.ceil(6. * K * np.log2(2. / p_min)))

    if N < N_min:
        raise DomainError(f'N must be at least {N_min} but was {N}')

    return float(2. / p_min * 2. ** (-run_exponent(p, q) * (N - 3)))


def log_expected_run_time(length, theta, bit=1):
    """Log of the expected waiting time for ``length`` equal bits in a row.

    For ones this is ``log((theta ** -length - 1) / (1 - theta))``; zeros
    swap ``theta`` and ``1 - theta``.
    """

    check_theta(theta)

    if bit not in (0, 1):
        raise DomainError(f'bit must be 0 or 1 but was {bit}')

    if length < 1:
        raise DomainError(f'length must be positive but was {length}')

    stay, leave = (theta, 1. - theta) if bit == 1 else (1. - theta, theta)
    x           = -length * np.log(stay)

    # log(expm1(x)) without overflow
    return float(x + np.log(-np.expm1(-x)) - np.log(leave))


def expected_run_time(length, theta, bit=1):
    """Expected waiting time for ``length`` equal bits in a row."""

    return float(np.exp(log_expected_run_time(length, theta, bit)))


class MiniChain:
    """The tester ``ISIT(N, p, q)`` started at state ``s``.

    Parameters
    ----------
    N : int
        Nominal number of states, virtual exits included.

    s : int
        Initial state in ``[2, N - 1]``.

    p : float
        Right threshold.

    q : float
        Left threshold.

    Examples
    --------
    >>> from fmest.isit import MiniChain
    >>> c = MiniChain(4, 2, 0.8, 0.2)
    >>> c.next0.tolist(), c.next1.tolist()
    ([1, 1], [3, 4])
    """

    def __init__(self, N, s, p, q):
        _check_size(N)
        check_thresholds(p, q)

        if isinstance(s, bool) or not isinstance(s, numbers.Integral) \
                or not 2 <= s <= N - 1:
            raise DomainError(f's must be in [2, {N - 1}] but was {s}')

        self.N      = int(N)
        self.s      = int(s)
        self.p      = p
        self.q      = q

        t           = np.arange(2, self.N)
        self._next0 = np.where(t > self.s, self.s - 1, t - 1)
        self._next1 = np.where(t < self.s, self.s + 1, t + 1)
        self._plan  = elimination_order(
            self.log_rows(0.5), keep=[self.s - 2]
        )

    def __repr__(self):
        return f'MiniChain(N={self.N}, s={self.s}, p={self.p}, q={self.q})'

    @property
    def n_interior(self):
        """int: Number of physical states.
        """

        return self.N - 2

    @property
    def interior_states(self):
        """array-like of shape (N - 2,): Local indices of physical states.
        """

        return np.arange(2, self.N)

    @property
    def exit_left(self):
        """int: Local index of the virtual left exit.
        """

        return 1

    @property
    def exit_right(self):
        """int: Local index of the virtual right exit.
        """

        return self.N

    @property
    def next0(self):
        """array-like of shape (N - 2,): Local successors on bit 0.
        """

        return self._next0.copy()

    @property
    def next1(self):
        """array-like of shape (N - 2,): Local successors on bit 1.
        """

        return self._next1.copy()

    def successor(self, state, bit):
        """Local successor of the physical ``state`` on ``bit``."""

        if not 2 <= state <= self.N - 1:
            raise DomainError(
                f'state must be in [2, {self.N - 1}] but was {state}'
            )

        table = self._next1 if bit == 1 else self._next0

        return int(table[state - 2])

    def log_rows(self, theta):
        """Log transition rows of the physical states.

        Row ``t - 2`` belongs to local state ``t``; target ``N - 2`` is the
        left exit and ``N - 1`` the right exit.
        """

        n       = self.n_interior
        log1    = float(np.log(theta))
        log0    = float(np.log1p(-theta))

        def index(target):
            if target == 1:
                return n

            if target == self.N:
                return n + 1

            return target - 2

        return [
            {index(t0): log0, index(t1): log1}
            for t0, t1 in zip(self._next0.tolist(), self._next1.tolist())
        ]

    def to_machine(self):
        """Return the tester as a standalone machine.

        The exits become absorbing states ``1`` and ``N`` with estimates
        ``q`` and ``p``; physical states carry ``(p + q) / 2``.
        """

        estimate       = np.full(self.N, .5 * (self.p + self.q))
        estimate[0]    = self.q
        estimate[-1]   = self.p

        return Machine(
            next0    = np.concatenate([[1], self._next0, [self.N]]),
            next1    = np.concatenate([[1], self._next1, [self.N]]),
            estimate = estimate,
            initial  = self.s,
            metadata = {'N': self.N, 's': self.s, 'p': self.p, 'q': self.q}
        )


def build_isit(N, p, q, s=None):
    """Build ``ISIT(N, p, q)``.

    Parameters
    ----------
    N : int
        Nominal number of states, virtual exits included.

    p : float
        Right threshold.

    q : float
        Left threshold.

    s : int, default None
        Initial state. If None, use :func:`initial_state`.

    Returns
    -------
    chain : MiniChain
    """

    if s is None:
        s = initial_state(N, p, q)

    return MiniChain(N, s, p, q)


def _dense_exit(chain, theta, tol=1e-10):
    """Exit quantities from a dense solve of ``(I - Q) x = b``."""

    n             = chain.n_interior
    A             = np.eye(n)
    b             = np.zeros((n, 3))
    b[:, 2]       = 1.

    for i, row in enumerate(chain.log_rows(theta)):
        for j, lp in row.items():
            if j < n:
                A[i, j] -= np.exp(lp)
            else:
                b[i, j - n] += np.exp(lp)

    x             = np.linalg.solve(A, b)
    residual      = np.max(np.abs(A @ x - b) / (1. + np.abs(x)))

    if residual > tol:
        raise NumericalError('absorbing solve is inaccurate', residual)

    start         = chain.s - 2

    with np.errstate(divide='ignore'):
        return np.log(x[start, 1]), np.log(x[start, 0]), np.log(x[start, 2])


def exit_analysis(chain, theta, method='reduction'):
    """Exit probabilities and expected decision time of a tester.

    Parameters
    ----------
    chain : MiniChain
        Tester, started at its initial state.

    theta : float
        Bernoulli parameter in (0, 1).

    method : str, default 'reduction'
        ``'reduction'`` eliminates the physical states in the log domain and
        stays accurate for any chain size; ``'dense'`` solves the absorbing
        system with ``numpy.linalg.solve`` and is only reliable for short
        chains.

    Returns
    -------
    analysis : Bunch
        ``theta``, ``prob_exit_right``, ``prob_exit_left``,
        ``expected_decision_time`` and the logarithms of these three
        quantities (``log_prob_exit_right``, ``log_prob_exit_left``,
        ``log_expected_decision_time``).

    Examples
    --------
    >>> from fmest.isit import MiniChain, exit_analysis
    >>> a = exit_analysis(MiniChain(4, 2, 0.8, 0.2), 0.5)
    >>> round(a.prob_exit_right, 12), round(a.expected_decision_time, 12)
    (0.25, 1.5)
    """

    check_theta(theta)

    if method == 'reduction':
        n                = chain.n_interior
        log_prob, log_time = absorption_log(
            chain.log_rows(theta), chain.s - 2, plan=chain._plan
        )
        log_right        = log_prob.get(n + 1, -np.inf)
        log_left         = log_prob.get(n, -np.inf)

    elif method == 'dense':
        log_right, log_left, log_time = _dense_exit(chain, theta)

    else:
        raise ValueError(f'invalid method {method!r}')

    right    = float(np.exp(log_right))
    left     = float(np.exp(log_left))
    residual = abs(right + left - 1.)

    if residual > 1e-10:
        raise NumericalError(
            f'exit probabilities of {chain} do not sum to one', residual
        )

    logger.debug(
        '%s at theta=%.6g: right=%.6g, log E[T]=%.6g',
        chain, theta, right, log_time
    )

    return Bunch(
        theta                      = theta,
        prob_exit_right            = right,
        prob_exit_left             = left,
        expected_decision_time     = float(np.exp(log_time)),
        log_prob_exit_right        = float(log_right),
        log_prob_exit_left         = float(log_left),
        log_expected_decision_time = float(log_time)
    )


def _log_closed_form(N, s, theta):
    a, b = N - s, s - 1

    with np.errstate(divide='ignore'):
        log_u   = (a - 1) * np.log(theta)
        log_v   = (b - 1) * np.log1p(-theta)
        u, v    = np.exp(log_u), np.exp(log_v)
        # u + v - uv, the probability that a ones run or a zeros run started
        # at length one completes
        log_den = np.logaddexp(log_u, log_v + np.log1p(-u))
        left    = log_v + np.log1p(-theta * u) - log_den
        right   = log_u + np.log1p(-(1. - theta) * v) - log_den

    return float(left), float(right)


def closed_form_exit(N, s, theta, side):
    """Closed-form exit probability of ``ISIT(N, .)`` started at ``s``.

    Parameters
    ----------
    N : int
        Nominal number of states.

    s : int
        Initial state in ``[2, N - 1]``.

    theta : float
        Bernoulli parameter in (0, 1).

    side : str
        ``'left'`` for
        ``(1 - t^(N-s)) / (1 + t^(N-s-1) / (1-t)^(s-2) - t^(N-s-1))``,
        ``'right'`` for
        ``(1 - (1-t)^(s-1)) / (1 + (1-t)^(s-2) / t^(N-s-1) - (1-t)^(s-2))``.
        Both are evaluated through logarithms.

    Examples
    --------
    >>> from fmest.isit import closed_form_exit
    >>> round(closed_form_exit(4, 2, 0.5, 'left'), 12)
    0.75
    """

    _check_size(N)
    check_theta(theta)

    if not 2 <= s <= N - 1:
        raise DomainError(f's must be in [2, {N - 1}] but was {s}')

    left, right = _log_closed_form(N, s, theta)

    if side == 'left':
        return float(np.exp(left))

    if side == 'right':
        return float(np.exp(right))

    raise DomainError(f"side must be 'left' or 'right' but was {side!r}")


def worst_error_over_hypothesis(chain):
    """Error probabilities of a tester at its thresholds.

    Returns
    -------
    errors : Bunch
        ``p01``, the probability of exiting right at ``theta = q``, and
        ``p10``, the probability of exiting left at ``theta = p``. By
        monotonicity of the exit probabilities these are the worst errors
        over the two composite hypotheses.
    """

    return Bunch(
        p01 = exit_analysis(chain, chain.q).prob_exit_right,
        p10 = exit_analysis(chain, chain.p).prob_exit_left
    )
