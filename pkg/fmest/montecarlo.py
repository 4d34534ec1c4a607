"""Seeded stream simulation of deterministic machines.

Input streams come from ``numpy.random.Philox``, a counter-based generator
whose output is fixed across platforms, so a simulation is a pure function
of its configuration. Tasks run in parallel derive their seeds as
``seed ^ index`` and do not depend on the schedule.
"""

import logging
import numbers

import numpy as np
from joblib import delayed, Parallel
from sklearn.utils import Bunch

from .analysis import quantized_stationary
from .exceptions import DomainError
from .machine import _walk
from .metrics import batch_standard_error, N_BATCHES
from .utils import check_theta, get_n_jobs

__all__ = [
    'SimConfig', 'class_labels', 'empirical_sampled_stats',
    'export_sim_results', 'simulate', 'simulate_many'
]

CHUNK_SIZE = 1 << 20
MAX_SEED   = 1 << 64

logger     = logging.getLogger(__name__)


class SimConfig:
    """Configuration of one simulation run.

    Parameters
    ----------
    machine : Machine
        Machine to simulate.

    theta : float
        Bernoulli parameter in (0, 1).

    steps : int
        Total number of input bits, burn-in included.

    burn_in : int, default None
        Number of leading steps left out of every statistic. If None,
        ``10 * S``.

    seed : int, default 0
        64-bit seed of the input stream.

    n_batches : int, default 100
        Number of batches of the standard error.

    Examples
    --------
    >>> from fmest.machine import Machine
    >>> from fmest.montecarlo import SimConfig
    >>> m = Machine(next0=[1, 1], next1=[2, 2], estimate=[0., 1.])
    >>> SimConfig(m, 0.5, steps=1000).burn_in
    20
    """

    def __init__(
        self, machine, theta, steps, burn_in=None, seed=0,
        n_batches=N_BATCHES
    ):
        check_theta(theta)

        if burn_in is None:
            burn_in    = 10 * machine.num_states

        if isinstance(steps, bool) or not isinstance(steps, numbers.Integral) \
                or steps < 1:
            raise DomainError(
                f'steps must be a positive integer but was {steps}'
            )

        if not isinstance(burn_in, numbers.Integral) or burn_in < 0:
            raise DomainError(
                f'burn_in must be a non-negative integer but was {burn_in}'
            )

        if steps - burn_in < n_batches:
            raise DomainError(
                f'steps must exceed burn_in by at least {n_batches} '
                f'but were steps={steps}, burn_in={burn_in}'
            )

        if not isinstance(seed, numbers.Integral) or not 0 <= seed < MAX_SEED:
            raise DomainError(f'seed must be in [0, 2**64) but was {seed}')

        self.machine   = machine
        self.theta     = theta
        self.steps     = int(steps)
        self.burn_in   = int(burn_in)
        self.seed      = int(seed)
        self.n_batches = n_batches

    def __repr__(self):
        return (
            f'SimConfig(theta={self.theta}, steps={self.steps}, '
            f'burn_in={self.burn_in}, seed={self.seed})'
        )

    @property
    def steps_used(self):
        """int: Number of steps entering the statistics.
        """

        return self.steps - self.burn_in


def class_labels(machine):
    """Class label of every state and the estimate of every class.

    Machines without a class map are split into classes of equal estimate,
    numbered by increasing estimate.

    Returns
    -------
    labels : array-like of shape (S,)
        Class label (1-based) of every state.

    estimates : array-like of shape (K,)
        Estimate of every class.
    """

    if machine.class_map is not None:
        labels    = machine.class_map
        K         = int(labels.max())
        estimates = np.full(K, np.nan)
        estimates[labels - 1] = machine.estimate

        return labels, estimates

    estimates, inverse = np.unique(machine.estimate, return_inverse=True)

    return inverse + 1, estimates


class _RunTracker:
    """Runs of the class sequence, partial first and last runs excluded."""

    def __init__(self, K):
        self.lengths = np.zeros(K)
        self.counts  = np.zeros(K, dtype=np.int64)
        self.current = None
        self.start   = 0
        self.partial = True

    def update(self, classes, offset):
        if self.current is None:
            self.current = classes[0]
            self.start   = offset

        previous     = np.concatenate([[self.current], classes[:-1]])
        change       = np.flatnonzero(classes != previous)

        if change.size == 0:
            return

        ends         = offset + change
        starts       = np.concatenate([[self.start], ends[:-1]])
        labels       = np.concatenate([[self.current], classes[change[:-1]]])

        if self.partial:
            starts, ends, labels = starts[1:], ends[1:], labels[1:]

        K            = self.counts.shape[0]
        self.lengths += np.bincount(
            labels - 1, weights=ends - starts, minlength=K
        )
        self.counts  += np.bincount(labels - 1, minlength=K)
        self.current = classes[change[-1]]
        self.start   = offset + change[-1]
        self.partial = False


def simulate(cfg):
    """Run the machine of ``cfg`` on a seeded Bernoulli stream.

    Parameters
    ----------
    cfg : SimConfig
        Simulation configuration.

    Returns
    -------
    result : Bunch
        ``theta``, ``seed``, ``burn_in``, ``steps_used``, ``empirical_risk``
        (mean squared error after burn-in), ``standard_error`` (batch
        means), ``class_estimates``, ``class_occupancy`` (fraction of steps
        spent in every class), ``holding_time_means`` and
        ``visit_fraction`` (mean length and share of the completed runs of
        every class, NaN for classes with no completed run), ``run_counts``
        and ``final_state``.

    Examples
    --------
    >>> from fmest.machine import Machine
    >>> from fmest.montecarlo import SimConfig, simulate
    >>> m = Machine(next0=[1], next1=[1], estimate=[.25])
    >>> simulate(SimConfig(m, 0.5, steps=200, seed=1)).empirical_risk
    0.0625
    """

    machine          = cfg.machine

    machine._check_structure()

    labels, class_estimates = class_labels(machine)
    K                = class_estimates.shape[0]
    errors           = (machine.estimate - cfg.theta) ** 2
    table            = machine._table
    rng              = np.random.Generator(np.random.Philox(cfg.seed))
    n                = cfg.steps_used
    size             = n // cfg.n_batches
    sums             = np.zeros(cfg.n_batches)
    counts           = np.zeros(cfg.n_batches)
    occupancy        = np.zeros(K)
    tracker          = _RunTracker(K)
    state            = machine.initial - 1

    for start in range(-cfg.burn_in, n, CHUNK_SIZE):
        m            = min(CHUNK_SIZE, n - start)
        bits         = (rng.random(m) < cfg.theta).astype(np.int64).tolist()
        path         = _walk(table, state, bits)
        state        = int(path[-1])

        if start < 0:
            path     = path[-start:]
            m       += start
            start    = 0

            if m <= 0:
                continue

        classes      = labels[path]
        index        = np.minimum(
            np.arange(start, start + m) // size, cfg.n_batches - 1
        )
        sums        += np.bincount(
            index, weights=errors[path], minlength=cfg.n_batches
        )
        counts      += np.bincount(index, minlength=cfg.n_batches)
        occupancy   += np.bincount(classes - 1, minlength=K)

        tracker.update(classes, start)

        logger.debug('%r: %d of %d steps done', cfg, start + m, n)

    with np.errstate(invalid='ignore'):
        holding      = tracker.lengths / tracker.counts
        visits       = tracker.counts / tracker.counts.sum()

    result           = Bunch(
        theta              = cfg.theta,
        seed               = cfg.seed,
        burn_in            = cfg.burn_in,
        steps_used         = n,
        empirical_risk     = float(sums.sum() / n),
        standard_error     = batch_standard_error(sums / counts),
        class_estimates    = class_estimates,
        class_occupancy    = occupancy / n,
        holding_time_means = holding,
        visit_fraction     = visits,
        run_counts         = tracker.counts,
        final_state        = state + 1
    )

    logger.info(
        'theta=%.6g, seed=%d: empirical risk %.6g +- %.2g over %d steps',
        cfg.theta, cfg.seed, result.empirical_risk, result.standard_error, n
    )

    return result


def empirical_sampled_stats(cfg):
    """Empirical counterpart of the birth-death decomposition.

    Returns
    -------
    stats : Bunch
        ``visit_fraction`` (share of completed runs per class, estimating
        the law of the class seen at decision times), ``mean_holding``
        (mean completed run length per class), ``occupancy`` and
        ``reconstructed_occupancy``, the time share rebuilt from the first
        two. Classes never completing a run report NaN.
    """

    result        = simulate(cfg)
    visited       = result.run_counts > 0
    reconstructed = np.full(visited.shape, np.nan)

    if np.any(visited):
        reconstructed[visited] = quantized_stationary(
            result.visit_fraction[visited],
            result.holding_time_means[visited]
        )

    return Bunch(
        visit_fraction          = result.visit_fraction,
        mean_holding            = result.holding_time_means,
        occupancy               = result.class_occupancy,
        reconstructed_occupancy = reconstructed,
        run_counts              = result.run_counts
    )


def simulate_many(
    machine, thetas, steps, burn_in=None, seed=0, n_seeds=1, n_jobs=None
):
    """Simulate ``machine`` for every theta and seed in parallel.

    Task ``i`` (thetas outermost, seeds innermost) runs with seed
    ``seed ^ i``.

    Parameters
    ----------
    machine : Machine
        Machine to simulate.

    thetas : array-like
        Bernoulli parameters.

    steps : int
        Steps per task.

    burn_in : int, default None
        Burn-in per task.

    seed : int, default 0
        Base seed.

    n_seeds : int, default 1
        Number of seeds per theta.

    n_jobs : int, default None
        Number of jobs to run in parallel. If None, read ``FMEST_THREADS``.

    Returns
    -------
    results : list of Bunch
        Outputs of :func:`simulate` in task order.
    """

    thetas = np.atleast_1d(np.asarray(thetas, dtype=float)).tolist()
    cfgs   = [
        SimConfig(machine, theta, steps, burn_in, seed ^ i)
        for i, theta in enumerate(
            theta for theta in thetas for _ in range(n_seeds)
        )
    ]

    return Parallel(n_jobs=get_n_jobs(n_jobs))(
        delayed(simulate)(cfg) for cfg in cfgs
    )


def export_sim_results(results, filename):
    """Write simulation results as CSV, one row per result and class.

    Columns are ``theta``, ``seed``, ``steps_used``, ``empirical_risk``,
    ``standard_error``, ``class``, ``occupancy``, ``mean_holding`` and
    ``visit_fraction``.
    """

    names = [
        'theta', 'seed', 'steps_used', 'empirical_risk', 'standard_error',
        'class', 'occupancy', 'mean_holding', 'visit_fraction'
    ]
    rows  = [
        [
            r.theta, r.seed, r.steps_used, r.empirical_risk,
            r.standard_error, k + 1, r.class_occupancy[k],
            r.holding_time_means[k], r.visit_fraction[k]
        ]
        for r in results for k in range(r.class_occupancy.shape[0])
    ]
    fmt   = ['%.17g', '%d', '%d', '%.17g', '%.17g', '%d', '%.17g', '%.17g',
             '%.17g']

    np.savetxt(
        filename, np.array(rows, dtype=object).reshape(-1, len(names)),
        fmt=fmt, delimiter=',', header=','.join(names), comments=''
    )

    logger.info('wrote %d simulation rows to %s', len(rows), filename)
