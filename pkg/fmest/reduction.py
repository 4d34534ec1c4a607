"""State reduction for finite Markov chains in the log domain.

States are eliminated one at a time; the chain censored on the remaining
states is updated with

    P[i, j] += P[i, k] P[k, j] / (1 - P[k, k])

where ``1 - P[k, k]`` is formed as the sum of the off-diagonal entries of
row ``k``. Nothing is ever subtracted, so tiny probabilities keep their
relative accuracy, and working with logarithms removes the underflow of
probabilities such as ``theta ** 600``. This is the Grassmann-Taksar-Heyman
scheme applied to sparse rows with a Markowitz elimination order.

Rows are lists of dicts mapping a 0-based target to a log probability.
Targets ``>= len(rows)`` are absorbing.

References
----------
.. [#grassmann85] Grassmann, W. K., Taksar, M. I., and Heyman, D. P.,
    "Regenerative analysis and steady state distributions for Markov
    chains,"
    Operations Research, 33(5), pp. 1107-1116, 1985.
"""

import heapq
import logging

import numpy as np
from scipy.special import logsumexp

from .exceptions import StructuralError

__all__ = ['absorption_log', 'elimination_order', 'stationary_log']

NEG_INF = -np.inf

logger  = logging.getLogger(__name__)


def _logsumexp(values):
    if not values:
        return NEG_INF

    return float(logsumexp(values))


def elimination_order(rows, keep=()):
    """Plan the elimination of every transient state not in ``keep``.

    The next state eliminated is the one with the fewest
    predecessor-successor pairs, which keeps fill-in low on the run-counting
    chains handled here. The plan only depends on which transitions are
    nonzero, so it can be reused for every theta.

    Parameters
    ----------
    rows : list of dict
        Transition rows; only the keys are used.

    keep : collection of int, default ()
        States that are never eliminated.

    Returns
    -------
    plan : list of (int, list of int)
        Eliminated state and its remaining predecessors at that time.
    """

    n          = len(rows)
    keep       = set(keep)
    succ       = [set(j for j in row if j != i) for i, row in enumerate(rows)]
    pred       = [set() for _ in range(n)]

    for i in range(n):
        for j in succ[i]:
            if j < n:
                pred[j].add(i)

    def cost(k):
        return len(pred[k]) * len(succ[k])

    heap       = [(cost(k), k) for k in range(n) if k not in keep]
    eliminated = [False] * n
    plan       = []

    heapq.heapify(heap)

    while heap:
        c, k = heapq.heappop(heap)

        if eliminated[k]:
            continue

        if c != cost(k):
            heapq.heappush(heap, (cost(k), k))

            continue

        eliminated[k] = True
        preds         = sorted(pred[k])
        outs          = succ[k]

        for i in preds:
            succ[i].discard(k)

            for j in outs:
                if j != i:
                    succ[i].add(j)

                    if j < n:
                        pred[j].add(i)

        for j in outs:
            if j < n:
                pred[j].discard(k)

        plan.append((k, preds))

        for t in set(preds).union(j for j in outs if j < n):
            if not eliminated[t] and t not in keep:
                heapq.heappush(heap, (cost(t), t))

    return plan


def _eliminate(rows, plan, log_time=None):
    """Carry out ``plan`` on ``rows`` in place.

    Returns, for every eliminated state, the log inflow from the states
    remaining at that time and the log probability of leaving it.
    """

    records = []

    for k, preds in plan:
        out      = [(j, lp) for j, lp in rows[k].items() if j != k]
        log_exit = _logsumexp([lp for _, lp in out])

        if log_exit == NEG_INF:
            raise StructuralError(
                f'state {k + 1} cannot be left; the chain is not irreducible'
            )

        inflow   = []

        for i in preds:
            row_i = rows[i]
            lik   = row_i.pop(k)
            scale = lik - log_exit

            inflow.append((i, lik))

            for j, lkj in out:
                old      = row_i.get(j)
                row_i[j] = scale + lkj if old is None \
                    else np.logaddexp(old, scale + lkj)

            if log_time is not None:
                log_time[i] = np.logaddexp(log_time[i], scale + log_time[k])

        records.append((k, inflow, log_exit))

    return records


def stationary_log(log_rows, root=0, plan=None):
    """Log stationary distribution of an irreducible chain.

    Parameters
    ----------
    log_rows : list of dict
        Log transition rows (not modified).

    root : int, default 0
        State kept until the end of the elimination.

    plan : list, default None
        Output of :func:`elimination_order` with ``keep=[root]``.

    Returns
    -------
    log_pi : ndarray of shape (n_states,)
        Normalized log stationary probabilities.
    """

    n            = len(log_rows)
    rows         = [dict(row) for row in log_rows]

    if plan is None:
        plan     = elimination_order(rows, keep=[root])

    records      = _eliminate(rows, plan)
    log_pi       = np.full(n, NEG_INF)
    log_pi[root] = 0.

    for k, inflow, log_exit in reversed(records):
        log_pi[k] = _logsumexp(
            [log_pi[i] + lik for i, lik in inflow]
        ) - log_exit

    logger.debug('eliminated %d of %d states', len(records), n)

    return log_pi - logsumexp(log_pi)


def absorption_log(log_rows, start, plan=None):
    """Log absorption probabilities and expected absorption time.

    Parameters
    ----------
    log_rows : list of dict
        Log transition rows of the transient states (not modified).

    start : int
        Transient state the chain starts from.

    plan : list, default None
        Output of :func:`elimination_order` with ``keep=[start]``.

    Returns
    -------
    log_prob : dict
        Log probability of ending in every absorbing target.

    log_time : float
        Log of the expected number of steps until absorption.
    """

    rows     = [dict(row) for row in log_rows]
    log_time = [0.] * len(rows)

    if plan is None:
        plan = elimination_order(rows, keep=[start])

    _eliminate(rows, plan, log_time)

    out      = {j: lp for j, lp in rows[start].items() if j != start}
    log_exit = _logsumexp(list(out.values()))

    if log_exit == NEG_INF:
        raise StructuralError(f'state {start + 1} never reaches an exit')

    return (
        {j: lp - log_exit for j, lp in out.items()},
        log_time[start] - log_exit
    )
