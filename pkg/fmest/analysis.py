"""Exact steady-state analysis of estimation machines.

The asymptotic risk of a machine driven by Bern(theta) input is the
stationary average of ``(estimate - theta) ** 2``. For composed machines the
stationary law also factors through the birth-death chain of classes seen
at decision times: class ``k`` gets mass proportional to
``E[T_k] mu_k``, the expected decision time of its tester times the
stationary probability of the birth-death chain. Both routes are computed
here so that each checks the other.
"""

import json
import logging

import numpy as np
from joblib import delayed, Parallel
from scipy import linalg
from scipy.special import logsumexp
from sklearn.utils import Bunch

from .construction import (
    check_nested_structure, high_boundary_risk_bound, risk_upper_bound
)
from .exceptions import DomainError, NumericalError
from .isit import exit_analysis
from .reduction import elimination_order, stationary_log
from .utils import check_epsilon, check_theta, get_n_jobs

__all__ = [
    'birth_death_stationary', 'check_drift_decay', 'check_holding_times',
    'class_distribution', 'cut_flow_check', 'decomposition_error',
    'default_theta_grid', 'detailed_balance_residual',
    'endpoint_orbit_risk', 'exact_risk', 'export_risk_report',
    'point_diagnostics', 'quantized_stationary', 'sampled_analysis',
    'stationary_distribution', 'stationary_plan', 'worst_case_risk'
]

MAX_DENSE_STATES = 2000

# Scalar fields of a risk report written to its JSON summary
SUMMARY_KEYS     = [
    'worst', 'worst_theta', 'normalized', 'bound600', 'boundary_normalized',
    'bound300', 'high_boundary_normalized', 'high_boundary_bound',
    'high_boundary_ok', 'S_physical', 'sum_Nk', 'theoretical_bound',
    'grid_spec'
]

logger           = logging.getLogger(__name__)


def stationary_plan(machine):
    """Elimination plan shared by every theta for ``machine``.

    The initial state is kept until the end of the elimination.
    """

    rows = machine.transition_matrix(0.5).log_rows()

    return elimination_order(rows, keep=[machine.initial - 1])


def _power_iteration(tm, tol, max_iter, check_every=50):
    # the lazy chain (P + I) / 2 shares the stationary law and is aperiodic
    PT       = tm.matrix.T.tocsr()
    S        = tm.dimension
    pi       = np.full(S, 1. / S)
    residual = np.inf

    for it in range(1, max_iter + 1):
        pi = .5 * (pi + PT @ pi)

        if it % check_every == 0:
            pi      /= pi.sum()
            residual = np.abs(PT @ pi - pi).sum()

            if residual <= tol:
                logger.debug('power iteration converged in %d steps', it)

                return pi

    raise NumericalError(
        f'power iteration did not converge in {max_iter} steps', residual
    )


def _dense_solve(tm):
    S = tm.dimension

    if S > MAX_DENSE_STATES:
        raise DomainError(
            f'dense solves are limited to {MAX_DENSE_STATES} states '
            f'but the chain has {S}'
        )

    A     = tm.toarray().T - np.eye(S)
    A[-1] = 1.
    b     = np.zeros(S)
    b[-1] = 1.

    return linalg.solve(A, b)


def stationary_distribution(
    tm, method='reduction', tol=1e-12, max_iter=100000, root=0, plan=None
):
    """Stationary distribution of an irreducible chain.

    Parameters
    ----------
    tm : TransitionMatrix
        Transition matrix.

    method : str, default 'reduction'
        ``'reduction'`` eliminates states in the log domain and is accurate
        even when the chain mixes over astronomically many steps;
        ``'power'`` iterates the lazy chain; ``'dense'`` solves the
        balance equations directly (small chains only).

    tol : float, default 1e-12
        Largest accepted 1-norm of ``pi P - pi``.

    max_iter : int, default 100000
        Iteration cap of ``'power'``.

    root : int, default 0
        0-based state eliminated last by ``'reduction'``.

    plan : list, default None
        Elimination plan of ``'reduction'`` for the structure of ``tm``.

    Returns
    -------
    pi : array-like of shape (S,)
        Stationary probabilities, entry ``i`` for state ``i + 1``.

    Examples
    --------
    >>> from fmest.analysis import stationary_distribution
    >>> from fmest.machine import Machine
    >>> m = Machine(next0=[1, 1], next1=[2, 2], estimate=[0., 1.])
    >>> stationary_distribution(m.transition_matrix(0.3)).round(12).tolist()
    [0.7, 0.3]
    """

    if method == 'reduction':
        log_pi = stationary_log(tm.log_rows(), root=root, plan=plan)
        pi     = np.exp(log_pi)

    elif method == 'power':
        pi     = _power_iteration(tm, tol, max_iter)

    elif method == 'dense':
        pi     = _dense_solve(tm)

    else:
        raise ValueError(f'invalid method {method!r}')

    pi         = np.maximum(pi, 0.)
    pi        /= pi.sum()
    residual   = np.abs(tm.matrix.T @ pi - pi).sum()

    if residual > tol:
        raise NumericalError(
            f'stationary distribution at theta={tm.theta} is inaccurate',
            residual
        )

    return pi


def class_distribution(pi, class_map):
    """Aggregate a distribution over states to classes ``1..K``."""

    class_map = np.asarray(class_map)

    return np.bincount(class_map - 1, weights=pi)


def exact_risk(machine, layout, theta, method='reduction', plan=None):
    """Asymptotic risk of ``machine`` at ``theta``.

    Parameters
    ----------
    machine : Machine
        Machine to analyze.

    layout : ComposedLayout or None
        Class structure. If None, every state is its own class.

    theta : float
        Bernoulli parameter in (0, 1).

    method : str, default 'reduction'
        Stationary solver, see :func:`stationary_distribution`.

    plan : list, default None
        Output of :func:`stationary_plan`, reused across theta.

    Returns
    -------
    risk : float
        Stationary average of the squared error.
    """

    check_theta(theta)

    tm        = machine.transition_matrix(theta)
    pi        = stationary_distribution(
        tm, method=method, root=machine.initial - 1, plan=plan
    )

    if layout is None:
        weights   = pi
        estimates = machine.estimate
    else:
        weights   = class_distribution(pi, layout.class_map)
        estimates = layout.estimates

    return float(np.dot(weights, (estimates - theta) ** 2))


def _birth_death_log(log_p, log_q):
    log_p = np.asarray(log_p, dtype=float)
    log_q = np.asarray(log_q, dtype=float)

    if np.any(log_q[1:] == -np.inf):
        raise DomainError(
            'birth-death chain cannot move left from every class'
        )

    log_mu = np.concatenate([[0.], np.cumsum(log_p[:-1] - log_q[1:])])

    return log_mu - logsumexp(log_mu)


def birth_death_stationary(p, q):
    """Stationary law of a birth-death chain.

    Parameters
    ----------
    p : array-like of shape (K,)
        Probability of moving from class ``k`` to ``k + 1``.

    q : array-like of shape (K,)
        Probability of moving from class ``k`` to ``k - 1``.

    Examples
    --------
    >>> from fmest.analysis import birth_death_stationary
    >>> birth_death_stationary([1., 0.], [0., 1.]).tolist()
    [0.5, 0.5]
    """

    with np.errstate(divide='ignore'):
        return np.exp(_birth_death_log(np.log(p), np.log(q)))


def quantized_stationary(mu, holding):
    """Time share of every class given visit law and mean holding times.

    Examples
    --------
    >>> from fmest.analysis import quantized_stationary
    >>> quantized_stationary([.5, .5], [2., 1.]).round(12).tolist()
    [0.666666666667, 0.333333333333]
    """

    weights = np.asarray(holding, dtype=float) * np.asarray(mu, dtype=float)

    return weights / weights.sum()


def sampled_analysis(machine, layout, theta, method='reduction'):
    """Birth-death decomposition of a composed machine at ``theta``.

    Parameters
    ----------
    machine : Machine
        Composed machine.

    layout : ComposedLayout
        Its class structure.

    theta : float
        Bernoulli parameter in (0, 1).

    method : str, default 'reduction'
        Solver of the testers, see :func:`fmest.isit.exit_analysis`.

    Returns
    -------
    analysis : Bunch
        ``p`` and ``q`` (probabilities of moving right and left from every
        class), ``mu`` (stationary law of the class seen at decision
        times), ``holding`` (expected decision time of every class) and
        ``pi`` (time share of every class); ``log_``-prefixed versions of
        all five; ``theta``, ``K`` and ``epsilon``.

    Raises
    ------
    DomainError
        If the machine lacks the entry-state structure of ``layout``.
    """

    check_theta(theta)

    if not check_nested_structure(machine, layout).ok:
        raise DomainError('machine does not have the nested structure')

    K            = layout.K
    exits        = [
        exit_analysis(c, theta, method) for c in layout.mini_chains
    ]
    log_p        = np.array([a.log_prob_exit_right for a in exits])
    log_q        = np.array([a.log_prob_exit_left for a in exits])
    log_holding  = np.array([a.log_expected_decision_time for a in exits])

    # boundary classes send both decisions to their only neighbour
    log_p[0]     = log_q[-1] = 0.
    log_q[0]     = log_p[-1] = -np.inf

    log_mu       = _birth_death_log(log_p, log_q)
    log_pi       = log_holding + log_mu
    log_pi      -= logsumexp(log_pi)

    return Bunch(
        theta       = theta,
        K           = K,
        epsilon     = layout.epsilon,
        p           = np.exp(log_p),
        q           = np.exp(log_q),
        mu          = np.exp(log_mu),
        holding     = np.exp(log_holding),
        pi          = np.exp(log_pi),
        log_p       = log_p,
        log_q       = log_q,
        log_mu      = log_mu,
        log_holding = log_holding,
        log_pi      = log_pi
    )


def detailed_balance_residual(sa):
    """Largest relative gap in ``mu[i-1] p[i-1] = mu[i] q[i]``."""

    left  = sa.log_mu[:-1] + sa.log_p[:-1]
    right = sa.log_mu[1:] + sa.log_q[1:]
    both  = np.isfinite(left) & np.isfinite(right)

    if np.any(np.isfinite(left) != np.isfinite(right)):
        return np.inf

    return float(np.max(np.abs(np.expm1(left[both] - right[both])),
                        initial=0.))


def _leq(lhs, rhs, rtol):
    """``lhs <= rhs`` on log values with a relative slack."""

    if lhs == -np.inf:
        return True

    return lhs <= rhs + rtol * max(1., abs(rhs))


def check_drift_decay(sa, k, epsilon, rtol=1e-9):
    """Check the geometric decay of ``mu`` away from the bracketing classes.

    For ``theta`` in ``[k/(K+2), (k+1)/(K+2)]`` checks
    ``mu[k-i] <= mu[k-1] (epsilon/(1-epsilon)) ** (i-1)`` for
    ``1 <= i <= k-1`` and ``mu[k+i] <= mu[k+1] (epsilon/(1-epsilon)) ** (i-1)``
    for ``1 <= i <= K-k`` (classes numbered from 1).

    Raises
    ------
    DomainError
        If ``theta`` lies outside the bracket of class ``k``.
    """

    check_epsilon(epsilon)

    K      = sa.K

    if not 1 <= k <= K:
        raise DomainError(f'k must be in [1, {K}] but was {k}')

    lo, hi = k / (K + 2.), (k + 1) / (K + 2.)

    if not lo - 1e-12 <= sa.theta <= hi + 1e-12:
        raise DomainError(
            f'theta must be in [{lo}, {hi}] but was {sa.theta}'
        )

    log_mu = sa.log_mu
    rate   = np.log(epsilon / (1. - epsilon))
    ok     = True

    for i in range(1, k):
        ok &= _leq(log_mu[k - i - 1], log_mu[k - 2] + (i - 1) * rate, rtol)

    for i in range(1, K - k + 1):
        ok &= _leq(log_mu[k + i - 1], log_mu[k] + (i - 1) * rate, rtol)

    return bool(ok)


def check_holding_times(sa, epsilon, rtol=1e-9):
    """Check that classes on the far side of ``theta`` are left no faster.

    For every class ``j`` with ``theta < j/(K+2)``, checks
    ``E[T_j] >= (1 - epsilon) E[T_i]`` for all ``i > j``; for every class
    ``j`` with ``theta > (j+1)/(K+2)``, the same for all ``i < j``.
    """

    check_epsilon(epsilon)

    K     = sa.K
    log_h = sa.log_holding
    c     = np.log1p(-epsilon)
    ok    = True

    for j in range(1, K + 1):
        if sa.theta < j / (K + 2.):
            for i in range(j + 1, K + 1):
                ok &= _leq(c + log_h[i - 1], log_h[j - 1], rtol)

        if sa.theta > (j + 1) / (K + 2.):
            for i in range(1, j):
                ok &= _leq(c + log_h[i - 1], log_h[j - 1], rtol)

    return bool(ok)


def decomposition_error(machine, layout, theta, pi=None, plan=None):
    """1-norm gap between the class law of the full chain and its
    birth-death decomposition."""

    if pi is None:
        pi = stationary_distribution(
            machine.transition_matrix(theta),
            root = machine.initial - 1,
            plan = plan
        )

    sa       = sampled_analysis(machine, layout, theta)
    class_pi = class_distribution(pi, layout.class_map)

    return float(np.abs(class_pi - sa.pi).sum())


def point_diagnostics(machine, layout, theta, plan=None):
    """Exact risk and structural checks of a composed machine at ``theta``.

    Returns
    -------
    diagnostics : Bunch
        ``theta``, ``risk``, ``decomposition_error``, ``drift_ok`` and
        ``holding_ok``. ``drift_ok`` is None when ``theta`` lies in no class
        bracket.
    """

    check_theta(theta)

    tm        = machine.transition_matrix(theta)
    pi        = stationary_distribution(
        tm, root=machine.initial - 1, plan=plan
    )
    class_pi  = class_distribution(pi, layout.class_map)
    sa        = sampled_analysis(machine, layout, theta)
    K         = layout.K
    brackets  = [
        k for k in range(1, K + 1)
        if k / (K + 2.) <= theta <= (k + 1) / (K + 2.)
    ]

    if brackets:
        drift_ok = all(
            check_drift_decay(sa, k, layout.epsilon) for k in brackets
        )
    else:
        drift_ok = None

    return Bunch(
        theta               = theta,
        risk                = float(
            np.dot(class_pi, (layout.estimates - theta) ** 2)
        ),
        decomposition_error = float(np.abs(class_pi - sa.pi).sum()),
        drift_ok            = drift_ok,
        holding_ok          = check_holding_times(sa, layout.epsilon)
    )


def default_theta_grid(K=None, step=None, low=1e-3, high=1. - 1e-3):
    """Default theta grid of the risk sweeps.

    A uniform grid of step ``1/(8(K+2))`` over ``[low, high]`` together
    with every class estimate ``k/(K+2)`` and every midpoint between
    consecutive estimates. Without ``K`` the step defaults to 1/64 and no
    estimates are added.

    Examples
    --------
    >>> from fmest.analysis import default_theta_grid
    >>> grid = default_theta_grid(2)
    >>> bool(grid[0] == 1e-3), bool(grid[-1] == 1. - 1e-3), 0.5 in grid
    (True, True, True)
    """

    if step is None:
        step = 1. / 64 if K is None else 1. / (8. * (K + 2))

    if not 0. < step < high - low:
        raise DomainError(f'step must be in (0, {high - low}) but was {step}')

    n        = int(np.floor((high - low) / step + 1e-9))
    points   = [low + step * np.arange(n + 1), [high]]

    if K is not None:
        Kp   = K + 2.
        points.append(np.arange(1, K + 2) / Kp)
        points.append((np.arange(0, K + 2) + .5) / Kp)

    grid     = np.unique(np.concatenate(points))

    return grid[(grid >= low) & (grid <= high)]


def _bracket_max(risk, mask, sum_Nk):
    if not np.any(mask):
        return None

    return float(np.max(risk[mask]) * sum_Nk)


def worst_case_risk(
    machine, layout, grid=None, step=None, n_jobs=None, method='reduction'
):
    """Exact risk over a theta grid and its maximum.

    Parameters
    ----------
    machine : Machine
        Machine to analyze.

    layout : ComposedLayout or None
        Class structure. If None, nominal and physical sizes coincide.

    grid : array-like, default None
        Theta values. If None, use :func:`default_theta_grid`.

    step : float, default None
        Step of the default grid.

    n_jobs : int, default None
        Number of jobs to run in parallel. If None, read ``FMEST_THREADS``.

    method : str, default 'reduction'
        Stationary solver.

    Returns
    -------
    report : Bunch
        ``theta_grid``, ``risk``, ``worst``, ``worst_theta``,
        ``S_physical``, ``sum_Nk``, ``normalized`` (``worst * sum_Nk``),
        ``bound600``, ``boundary_normalized`` (largest ``risk * sum_Nk``
        below the first class estimate), ``bound300``,
        ``high_boundary_normalized`` (the same above the last class
        estimate), ``high_boundary_bound`` (see
        :func:`fmest.construction.high_boundary_risk_bound`, times
        ``sum_Nk``), ``high_boundary_ok``, ``theoretical_bound`` and
        ``grid_spec``. Bounds are None for compact machines. The maximum
        is taken over the grid only.
    """

    K                   = None if layout is None else layout.K

    if grid is None:
        if step is None:
            step        = 1. / 64 if K is None else 1. / (8. * (K + 2))

        grid            = default_theta_grid(K, step)
        grid_spec       = {
            'kind':     'default',
            'step':     step,
            'low':      float(grid[0]),
            'high':     float(grid[-1]),
            'n_points': int(grid.size)
        }
    else:
        grid            = np.asarray(grid, dtype=float).ravel()
        grid_spec       = {'kind': 'explicit', 'n_points': int(grid.size)}

    plan                = stationary_plan(machine)
    n_jobs              = get_n_jobs(n_jobs)
    risk                = np.array(Parallel(n_jobs=n_jobs)(
        delayed(exact_risk)(machine, layout, theta, method, plan)
        for theta in grid
    ))

    i                   = int(np.argmax(risk))
    S_physical          = machine.num_states
    sum_Nk              = S_physical if layout is None else layout.sum_Nk
    normalized          = float(risk[i] * sum_Nk)

    if K is None:
        low             = np.zeros(grid.shape, dtype=bool)
        high            = low
    else:
        low             = grid < 1. / (K + 2)
        high            = grid > (K + 1.) / (K + 2)

    boundary_normalized = _bracket_max(risk, low, sum_Nk)
    high_normalized     = _bracket_max(risk, high, sum_Nk)

    if layout is None or layout.compact:
        theoretical_bound   = None
        high_bound          = None
    else:
        theoretical_bound   = risk_upper_bound(K, layout.epsilon)
        high_bound          = high_boundary_risk_bound(
            K, layout.epsilon
        ) * sum_Nk

    if high_normalized is None or high_bound is None:
        high_ok             = None
    else:
        high_ok             = high_normalized <= high_bound

    logger.info(
        'worst risk %.6g at theta=%.6g over %d points, normalized %.6g',
        risk[i], grid[i], grid.size, normalized
    )

    return Bunch(
        theta_grid               = grid,
        risk                     = risk,
        worst                    = float(risk[i]),
        worst_theta              = float(grid[i]),
        S_physical               = S_physical,
        sum_Nk                   = sum_Nk,
        normalized               = normalized,
        bound600                 = normalized <= 600.,
        boundary_normalized      = boundary_normalized,
        bound300                 = boundary_normalized is None
        or boundary_normalized <= 300.,
        high_boundary_normalized = high_normalized,
        high_boundary_bound      = high_bound,
        high_boundary_ok         = high_ok,
        theoretical_bound        = theoretical_bound,
        grid_spec                = grid_spec
    )


def endpoint_orbit_risk(machine, theta):
    """Risk at ``theta`` in {0, 1}, where the input stream is constant.

    The orbit of the initial state under the constant input ends in a
    cycle; the risk is the average squared error over that cycle.

    Examples
    --------
    >>> from fmest.analysis import endpoint_orbit_risk
    >>> from fmest.machine import Machine
    >>> m = Machine(next0=[2, 1], next1=[2, 2], estimate=[0., .5])
    >>> endpoint_orbit_risk(m, 0)
    0.125
    """

    if theta not in (0, 1):
        raise DomainError(f'theta must be 0 or 1 but was {theta}')

    machine._check_structure()

    table = (machine.next1 if theta == 1 else machine.next0).tolist()
    seen  = {}
    state = machine.initial

    while state not in seen:
        seen[state] = len(seen)
        state       = table[state - 1]

    orbit = list(seen)
    cycle = np.array(orbit[seen[state]:])

    return float(np.mean((machine.estimate[cycle - 1] - theta) ** 2))


def cut_flow_check(pi, tm, cut, atol=1e-10):
    """Check that probability flows across a cut balance.

    Parameters
    ----------
    pi : array-like of shape (S,)
        Stationary distribution of ``tm``.

    tm : TransitionMatrix
        Transition matrix.

    cut : array-like of int
        States (1-based) on one side of the cut.

    Returns
    -------
    balanced : bool
        True if the flow out of ``cut`` equals the flow into it within
        ``atol``.
    """

    inside             = np.zeros(tm.dimension, dtype=bool)
    inside[np.asarray(cut, dtype=np.int64) - 1] = True

    P                  = tm.matrix.tocoo()
    flow               = np.asarray(pi)[P.row] * P.data
    out_flow           = flow[inside[P.row] & ~inside[P.col]].sum()
    in_flow            = flow[~inside[P.row] & inside[P.col]].sum()

    return bool(abs(out_flow - in_flow) <= atol)


def export_risk_report(report, filename, summary=None, columns=None):
    """Write a risk report as CSV and its summary as JSON.

    Parameters
    ----------
    report : Bunch
        Output of :func:`worst_case_risk`.

    filename : str
        CSV file with columns ``theta``, ``risk``, ``risk_times_S`` and any
        extra ``columns``.

    summary : str, default None
        JSON summary file. If None, no summary is written.

    columns : dict, default None
        Extra columns, name to array of the grid length.
    """

    columns = dict(columns or {})
    names   = ['theta', 'risk', 'risk_times_S'] + list(columns)
    data    = np.column_stack(
        [report.theta_grid, report.risk, report.risk * report.sum_Nk]
        + [np.asarray(v, dtype=float) for v in columns.values()]
    )

    np.savetxt(
        filename, data, fmt='%.17g', delimiter=',', header=','.join(names),
        comments=''
    )

    if summary is not None:
        doc = {
            key: report[key] for key in SUMMARY_KEYS
        }

        with open(summary, 'w') as f:
            json.dump(doc, f, indent=1, sort_keys=True)

    logger.info('wrote risk report to %s', filename)
