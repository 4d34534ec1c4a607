"""Composition of run-counting testers into a minimax estimator.

Class ``k`` (``1 <= k <= K``) of the estimator is the tester
``ISIT(N_k, (k+1)/(K+2), k/(K+2))``; all of its states estimate
``k/(K+2)``. A left decision moves to the entry state of class ``k - 1``
and a right decision to the entry state of class ``k + 1``, so the class
sequence seen at decision times is a birth-death chain that drifts towards
the class whose estimate brackets ``theta``. The two boundary classes send
both decisions to their only neighbour.
"""

import logging
import numbers

import numpy as np
from sklearn.utils import Bunch

from .exceptions import DomainError, StructuralError
from .isit import build_isit, MiniChain, required_states
from .machine import Machine
from .utils import check_epsilon, check_n_classes

__all__ = [
    'ComposedLayout', 'build_estimator', 'check_nested_structure', 'choose_K',
    'high_boundary_risk_bound', 'risk_bound_constant', 'risk_upper_bound',
    'state_budget'
]

DEFAULT_EPSILON = 0.01

logger          = logging.getLogger(__name__)


class ComposedLayout:
    """Class structure of a composed estimator.

    Parameters
    ----------
    K : int
        Number of classes.

    epsilon : float
        Drift parameter the testers were sized for.

    mini_chains : list of MiniChain
        Tester of every class, in class order.

    compact : bool, default False
        True if the testers were sized by hand rather than from
        ``epsilon``.

    Attributes
    ----------
    class_ranges : array-like of shape (K, 2)
        First and last state of every class (1-based, inclusive).

    entry : array-like of shape (K,)
        Entry state of every class.

    class_map : array-like of shape (S,)
        Class label of every state.

    estimates : array-like of shape (K,)
        Estimate ``k / (K + 2)`` of every class.
    """

    def __init__(self, K, epsilon, mini_chains, compact=False):
        check_n_classes(K)

        if len(mini_chains) != K:
            raise StructuralError(
                f'expected {K} mini-chains but got {len(mini_chains)}'
            )

        self.K            = K
        self.epsilon      = epsilon
        self.mini_chains  = list(mini_chains)
        self.compact      = compact

        sizes             = np.array([c.n_interior for c in self.mini_chains])
        self.offsets      = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        self.class_ranges = np.column_stack(
            [self.offsets + 1, self.offsets + sizes]
        )
        self.entry        = self.offsets + np.array(
            [c.s for c in self.mini_chains]
        ) - 1
        self.class_map    = np.repeat(np.arange(1, K + 1), sizes)
        self.estimates    = np.arange(1, K + 1) / (K + 2.)

    @property
    def n_states(self):
        """int: Number of physical states.
        """

        return int(self.class_map.shape[0])

    @property
    def sum_Nk(self):
        """int: Sum of the nominal tester sizes, virtual exits included.
        """

        return int(sum(c.N for c in self.mini_chains))

    @property
    def mini_params(self):
        """list of Bunch: ``N``, ``s``, ``p`` and ``q`` of every class.
        """

        return [
            Bunch(N=c.N, s=c.s, p=c.p, q=c.q) for c in self.mini_chains
        ]

    def metadata(self):
        """Return the metadata block stored in machine files."""

        return {
            'K':           self.K,
            'epsilon':     self.epsilon,
            'compact':     self.compact,
            'mini_params': [dict(params) for params in self.mini_params]
        }

    @classmethod
    def from_machine(cls, machine):
        """Rebuild the layout of a composed machine from its metadata.

        Raises
        ------
        StructuralError
            If the machine carries no layout or its class map disagrees
            with the metadata.
        """

        metadata = machine.metadata

        try:
            chains = [
                MiniChain(params['N'], params['s'], params['p'], params['q'])
                for params in metadata['mini_params']
            ]
            layout = cls(
                metadata['K'], metadata['epsilon'], chains,
                compact=metadata.get('compact', False)
            )
        except (KeyError, TypeError, DomainError) as e:
            raise StructuralError(f'machine carries no valid layout ({e})')

        if machine.class_map is None \
                or not np.array_equal(machine.class_map, layout.class_map):
            raise StructuralError('class map does not match the layout')

        return layout


def _resolve(chain, table, offset, left, right):
    """Map local successors to global states."""

    return np.where(
        table == chain.exit_left, left,
        np.where(table == chain.exit_right, right, offset + table - 1)
    )


def build_estimator(K, epsilon=DEFAULT_EPSILON, n_states=None):
    """Build the composed estimator with ``K`` classes.

    Parameters
    ----------
    K : int
        Number of classes, at least 2.

    epsilon : float, default 0.01
        Error probability every tester is sized for.

    n_states : int or list of int, default None
        Nominal tester sizes. If given, overrides the sizes derived from
        ``epsilon`` and yields a compact machine with the same structure
        but no error guarantee.

    Returns
    -------
    machine : Machine

    layout : ComposedLayout

    Examples
    --------
    >>> from fmest.construction import build_estimator
    >>> machine, layout = build_estimator(3, n_states=6)
    >>> layout.estimates.tolist()
    [0.2, 0.4, 0.6]
    >>> machine.num_states
    12
    """

    check_n_classes(K)
    check_epsilon(epsilon)

    Kp           = K + 2

    if n_states is None:
        sizes    = [required_states(epsilon, (k + 1) / Kp, Kp)
                    for k in range(1, K + 1)]
    else:
        sizes    = np.broadcast_to(n_states, (K,)).tolist()

        for N in sizes:
            if not isinstance(N, numbers.Integral) or N < 4:
                raise DomainError(
                    f'n_states must be integers >= 4 but was {n_states}'
                )

    chains       = [
        build_isit(N, (k + 1) / Kp, k / Kp)
        for k, N in enumerate(sizes, start=1)
    ]
    layout       = ComposedLayout(
        K, epsilon, chains, compact=n_states is not None
    )
    S            = layout.n_states
    next0        = np.empty(S, dtype=np.int64)
    next1        = np.empty(S, dtype=np.int64)

    for k, chain in enumerate(chains, start=1):
        left     = layout.entry[k - 2] if k > 1 else layout.entry[1]
        right    = layout.entry[k] if k < K else layout.entry[K - 2]
        offset   = layout.offsets[k - 1]
        states   = slice(offset, offset + chain.n_interior)

        next0[states] = _resolve(chain, chain.next0, offset, left, right)
        next1[states] = _resolve(chain, chain.next1, offset, left, right)

    machine      = Machine(
        next0     = next0,
        next1     = next1,
        estimate  = layout.estimates[layout.class_map - 1],
        initial   = int(layout.entry[(K + 1) // 2 - 1]),
        class_map = layout.class_map,
        metadata  = layout.metadata()
    )

    logger.info(
        'built estimator with K=%d, epsilon=%g: %d physical states, '
        'sum of N_k = %d', K, epsilon, S, layout.sum_Nk
    )

    return machine, layout


def state_budget(K, epsilon=DEFAULT_EPSILON):
    """State counts of the estimator with ``K`` classes.

    Two upper bounds on ``sum_Nk`` are reported. ``sum_bound`` drops only
    the rounding of every class size, ``4K + 6(K+2) sum_k log2(2 /
    (epsilon q_k (1 - p_k)))``, and always holds. ``closed_form_bound``
    is the closed form ``6 (K+2)^2 log2(2e/epsilon)``; it holds for small
    ``K`` only (up to ``K = 12`` at ``epsilon = 0.01``) and is kept as a
    diagnostic.

    Returns
    -------
    budget : Bunch
        ``sum_Nk`` (nominal sizes summed), ``physical_S``
        (``sum_Nk - 2K``), ``sum_bound``, ``within_sum_bound``,
        ``closed_form_bound`` and ``within_bound``.

    Examples
    --------
    >>> from fmest.construction import state_budget
    >>> round(state_budget(10, 0.01).closed_form_bound)
    7851
    >>> state_budget(30, 0.01).within_sum_bound
    True
    """

    check_n_classes(K)
    check_epsilon(epsilon)

    Kp                = K + 2
    p                 = np.arange(2, K + 2) / Kp
    q                 = p - 1. / Kp
    sum_Nk            = sum(
        required_states(epsilon, pk, Kp) for pk in p.tolist()
    )
    sum_bound         = 4. * K + 6. * Kp * np.sum(
        np.log2(2. / (epsilon * q * (1. - p)))
    )
    closed_form_bound = 6. * Kp ** 2 * np.log2(2. * np.e / epsilon)
    budget            = Bunch(
        sum_Nk            = sum_Nk,
        physical_S        = sum_Nk - 2 * K,
        sum_bound         = float(sum_bound),
        within_sum_bound  = bool(sum_Nk <= sum_bound),
        closed_form_bound = float(closed_form_bound),
        within_bound      = bool(sum_Nk <= closed_form_bound)
    )

    if not budget.within_bound:
        logger.info(
            'K=%d, epsilon=%g: sum of N_k = %d exceeds the closed form %.1f',
            K, epsilon, sum_Nk, closed_form_bound
        )

    return budget


def choose_K(state_cap, epsilon=DEFAULT_EPSILON):
    """Largest number of classes whose nominal size fits ``state_cap``.

    Raises
    ------
    DomainError
        If even two classes do not fit.
    """

    check_epsilon(epsilon)

    min_cap = state_budget(2, epsilon).sum_Nk

    if state_cap < min_cap:
        raise DomainError(
            f'state_cap must be at least {min_cap} but was {state_cap}'
        )

    K       = 2

    while state_budget(K + 1, epsilon).sum_Nk <= state_cap:
        K  += 1

    return K


def risk_bound_constant(epsilon=DEFAULT_EPSILON, boundary=False):
    """Constant ``C`` of the analytic bound ``R <= C / S``.

    Parameters
    ----------
    epsilon : float, default 0.01
        Drift parameter.

    boundary : bool, default False
        If True, the constant for ``theta`` below the first or above the
        last class estimate.

    Examples
    --------
    >>> from fmest.construction import risk_bound_constant
    >>> risk_bound_constant(0.01) < 600, risk_bound_constant(0.01, True) < 300
    (True, True)
    """

    check_epsilon(epsilon)

    e = epsilon
    w = 1. if boundary else 2.

    return float(
        6. * np.log2(2. * np.e / e) * (
            w * e / (1. - 2. * e) ** 3
            + 4. * w * (1. - e) / (1. - 2. * e) ** 2
            + 1. / (1. - e)
        )
    )


def risk_upper_bound(K, epsilon=DEFAULT_EPSILON, S=None, boundary=False):
    """Analytic upper bound on the asymptotic risk of the estimator.

    ``S`` defaults to ``6 (K+2)^2 log2(2e/epsilon)``, the bound on the
    nominal state count.
    """

    check_n_classes(K)

    if S is None:
        S = 6. * (K + 2) ** 2 * np.log2(2. * np.e / epsilon)

    return risk_bound_constant(epsilon, boundary) / S


def high_boundary_risk_bound(K, epsilon=DEFAULT_EPSILON):
    """Bound on the risk for ``theta`` above the last class estimate.

    The top class estimates ``K/(K+2)``, so its error is up to
    ``2/(K+2)`` and class ``K - i`` errs by up to ``(i+2)/(K+2)``. With
    ``x = epsilon / (1 - epsilon)`` the class mass decays like ``x^i``
    away from the top, which gives
    ``(4 + sum_j x^j (j+3)^2 / (1 - epsilon)) / (K+2)^2``.

    Examples
    --------
    >>> from fmest.construction import high_boundary_risk_bound
    >>> round(high_boundary_risk_bound(10, 0.01) * 144, 2)
    13.26
    """

    check_n_classes(K)
    check_epsilon(epsilon)

    x    = epsilon / (1. - epsilon)
    tail = (
        x * (1. + x) / (1. - x) ** 3
        + 6. * x / (1. - x) ** 2
        + 9. / (1. - x)
    )

    return float((4. + tail / (1. - epsilon)) / (K + 2) ** 2)


def check_nested_structure(machine, layout):
    """Check the entry-state discipline of a composed machine.

    Returns
    -------
    checks : Bunch
        ``entry_ok`` (every edge entering a class from outside lands on its
        entry state), ``locality_ok`` (such edges only join neighbouring
        classes), ``estimates_ok`` (every state carries the estimate of its
        class) and ``ok``.
    """

    class_map    = layout.class_map

    if class_map.shape != (machine.num_states,):
        raise StructuralError('layout does not cover the machine')

    src          = np.tile(np.arange(machine.num_states), 2)
    dst          = np.concatenate([machine.next0, machine.next1]) - 1
    cross        = class_map[src] != class_map[dst]
    target_class = class_map[dst[cross]]

    entry_ok     = bool(
        np.all(dst[cross] + 1 == layout.entry[target_class - 1])
    )
    locality_ok  = bool(
        np.all(np.abs(target_class - class_map[src[cross]]) == 1)
    )
    estimates_ok = bool(
        np.array_equal(machine.estimate, layout.estimates[class_map - 1])
    )

    return Bunch(
        entry_ok     = entry_ok,
        locality_ok  = locality_ok,
        estimates_ok = estimates_ok,
        ok           = entry_ok and locality_ok and estimates_ok
    )
