"""Command-line front end.

Sub-commands write CSV tables (or JSON records with ``--format json``)
and, for ``analyze`` and ``sweep``, a JSON summary next to the table.
Floats are written with 17 significant digits. The exit status is 0 when
every check passes, 1 when a check fails or an I/O or numerical error
occurs and 2 on usage errors.
"""

import argparse
import csv
import json
import logging
import math
import os
import sys

import numpy as np
from joblib import delayed, Parallel

from . import __version__
from .analysis import (
    default_theta_grid, endpoint_orbit_risk, exact_risk, point_diagnostics,
    stationary_plan, SUMMARY_KEYS, worst_case_risk
)
from .baselines import samaniego_worst_case_risk
from .construction import (
    build_estimator, ComposedLayout, DEFAULT_EPSILON, state_budget
)
from .exceptions import (
    DomainError, MachineParseError, NumericalError, StructuralError
)
from .machine import load_machine
from .montecarlo import simulate_many
from .utils import get_n_jobs

__all__ = ['main']

DECOMPOSITION_TOL = 1e-8
REFINE_TOL        = 0.05

logger            = logging.getLogger(__name__)


def _n_classes(value):
    K = int(value)

    if K < 2:
        raise argparse.ArgumentTypeError(f'K must be >= 2 but was {K}')

    return K


def _epsilon(value):
    epsilon = float(value)

    if not 0. < epsilon < .5:
        raise argparse.ArgumentTypeError(
            f'epsilon must be in (0, 0.5) but was {epsilon}'
        )

    return epsilon


def _theta(value):
    theta = float(value)

    if not 0. <= theta <= 1.:
        raise argparse.ArgumentTypeError(
            f'theta must be in [0, 1] but was {theta}'
        )

    return theta


def _positive(value):
    n = int(value)

    if n < 1:
        raise argparse.ArgumentTypeError(f'expected a positive integer: {n}')

    return n


def _cell(value):
    if value is None:
        return ''

    if isinstance(value, str):
        return value

    if isinstance(value, (bool, np.bool_)):
        return str(int(value))

    if isinstance(value, (int, np.integer)):
        return str(value)

    return format(float(value), '.17g')


def _relative_change(old, new):
    """Change from ``old`` to ``new``, absolute when ``old`` is zero."""

    if old == 0.:
        return abs(new)

    return abs(new - old) / old


def _record(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)

    if isinstance(value, (int, np.integer)):
        return int(value)

    if isinstance(value, (float, np.floating)):
        return None if math.isnan(value) else float(value)

    return value


def _write_table(filename, names, rows, format='csv'):
    """Write ``rows`` as CSV or as a JSON list of records."""

    with open(filename, 'w', newline='') as f:
        if format == 'json':
            json.dump(
                [
                    {name: _record(v) for name, v in zip(names, row)}
                    for row in rows
                ],
                f, indent=1
            )
        else:
            writer = csv.writer(f, lineterminator='\n')

            writer.writerow(names)
            writer.writerows([[_cell(v) for v in row] for row in rows])

    logger.info('wrote %d rows to %s', len(rows), filename)


def _write_summary(filename, summary):
    with open(filename, 'w') as f:
        json.dump(
            {key: _record(value) for key, value in summary.items()}, f,
            indent=1, sort_keys=True
        )

    logger.info('wrote summary to %s', filename)


def _summary_path(args):
    if args.summary is not None:
        return args.summary

    return os.path.splitext(args.out)[0] + '.summary.json'


def _load_composed(filename):
    """Load a machine and, when it carries one, its class layout."""

    machine = load_machine(filename)

    try:
        layout = ComposedLayout.from_machine(machine)
    except StructuralError as e:
        logger.info('%s is not a composed machine: %s', filename, e)

        layout = None

    return machine, layout


def cmd_build(args):
    machine, layout = build_estimator(args.K, args.epsilon, args.n_states)
    diagnostics     = machine.validate()

    machine.save(args.out)

    budget          = state_budget(args.K, args.epsilon)
    within_bound    = layout.sum_Nk <= budget.closed_form_bound

    print(f'S_physical   {machine.num_states}')
    print(f'sum_Nk       {layout.sum_Nk}')
    print(f'sum_bound    {budget.sum_bound:.17g}')
    print(f'closed_form  {budget.closed_form_bound:.17g}')
    print(f'within_bound {within_bound}')

    if not within_bound:
        logger.warning(
            'sum of N_k exceeds the closed-form bound %.1f',
            budget.closed_form_bound
        )

    if not diagnostics.strongly_connected:
        logger.warning('%s is not strongly connected', args.out)

        return 1

    return 0 if layout.sum_Nk <= budget.sum_bound else 1


def cmd_analyze(args):
    machine, layout = _load_composed(args.machine)
    n_jobs          = get_n_jobs(args.n_jobs)
    strict          = layout is not None and not layout.compact
    rows            = []
    summary         = {}
    ok              = True

    if args.theta is None:
        report      = worst_case_risk(
            machine, layout, step=args.grid_step, n_jobs=n_jobs
        )
        thetas      = np.empty(0)
    else:
        thetas      = np.array(args.theta, dtype=float)
        interior    = thetas[(thetas > 0.) & (thetas < 1.)]
        thetas      = thetas[(thetas == 0.) | (thetas == 1.)]
        report      = worst_case_risk(
            machine, layout, grid=interior, n_jobs=n_jobs
        ) if interior.size else None

    if report is not None:
        if layout is None:
            diagnostics = [None] * report.theta_grid.size
        else:
            plan        = stationary_plan(machine)
            diagnostics = Parallel(n_jobs=n_jobs)(
                delayed(point_diagnostics)(machine, layout, theta, plan)
                for theta in report.theta_grid
            )

        for theta, risk, d in zip(report.theta_grid, report.risk, diagnostics):
            if d is None:
                rows.append(
                    [theta, risk, risk * report.sum_Nk, None, None, None]
                )

                continue

            rows.append([
                theta, risk, risk * report.sum_Nk, d.decomposition_error,
                d.drift_ok, d.holding_ok
            ])

            ok &= d.decomposition_error <= DECOMPOSITION_TOL

            if strict:
                ok &= d.drift_ok is not False and d.holding_ok

        if strict:
            ok &= bool(report.bound600 and report.bound300)
            ok &= report.high_boundary_ok is not False

        summary.update({
            key: report[key] for key in SUMMARY_KEYS
        })

        if args.refine and args.theta is None:
            finer    = worst_case_risk(
                machine, layout, step=report.grid_spec['step'] / 2.,
                n_jobs=n_jobs
            )
            change   = _relative_change(report.worst, finer.worst)

            summary['refinement_change'] = change

            if change > REFINE_TOL:
                logger.warning(
                    'worst risk moved by %.1f%% under refinement',
                    100. * change
                )

    for theta in thetas:
        risk        = endpoint_orbit_risk(machine, theta)
        sum_Nk      = machine.num_states if layout is None else layout.sum_Nk

        rows.append([theta, risk, risk * sum_Nk, None, None, None])

        summary[f'endpoint_risk_{int(theta)}'] = risk

    summary['checks_passed'] = bool(ok)

    _write_table(
        args.out,
        [
            'theta', 'risk', 'risk_times_S', 'pi_decomposition_error',
            'drift_ok', 'holding_ok'
        ],
        rows, args.format
    )
    _write_summary(_summary_path(args), summary)

    if 'worst' in summary:
        print(
            f'worst {summary["worst"]:.17g} at theta '
            f'{summary["worst_theta"]:.17g}, normalized '
            f'{summary["normalized"]:.17g}'
        )

    if not ok:
        logger.warning('some checks failed, see %s', args.out)

    return 0 if ok else 1


def cmd_simulate(args):
    machine = load_machine(args.machine)
    results = simulate_many(
        machine, args.theta, args.steps,
        burn_in = args.burn_in,
        seed    = args.seed,
        n_seeds = args.n_seeds,
        n_jobs  = args.n_jobs
    )
    rows    = [
        [
            r.theta, r.seed, r.steps_used, r.empirical_risk,
            r.standard_error, k + 1, r.class_occupancy[k],
            r.holding_time_means[k], r.visit_fraction[k]
        ]
        for r in results for k in range(r.class_occupancy.shape[0])
    ]

    _write_table(
        args.out,
        [
            'theta', 'seed', 'steps_used', 'empirical_risk',
            'standard_error', 'class', 'occupancy', 'mean_holding',
            'visit_fraction'
        ],
        rows, args.format
    )

    for r in results:
        print(
            f'theta {r.theta:.17g} seed {r.seed}: empirical risk '
            f'{r.empirical_risk:.17g} +- {r.standard_error:.3g}'
        )

    return 0


def cmd_compare(args):
    machine, layout = build_estimator(args.K, args.epsilon, args.n_states)
    report          = worst_case_risk(
        machine, layout, step=args.grid_step, n_jobs=args.n_jobs
    )
    S               = machine.num_states
    S_det           = S if args.S_equalized else layout.sum_Nk
    det_normalized  = report.worst * S_det
    baseline        = samaniego_worst_case_risk(S)
    ratio           = det_normalized / baseline.normalized
    rows            = [
        ['nested_isit', S_det, report.worst, det_normalized, ratio],
        ['samaniego', S, baseline.worst, baseline.normalized, 1.]
    ]

    _write_table(
        args.out, ['machine', 'S', 'worst', 'normalized', 'ratio'], rows,
        args.format
    )

    for row in rows:
        print(' '.join(_cell(v) for v in row))

    if layout.compact:
        return 0

    return 0 if report.normalized <= 600. else 1


def _trend_ok(normalized, slack=1.2):
    """True if every value stays within ``slack`` of the running maximum."""

    normalized = np.asarray(normalized, dtype=float)
    envelope   = np.maximum.accumulate(normalized)

    return bool(np.all(normalized[1:] <= slack * envelope[:-1]))


def _sweep_point(machine, layout, theta, plan):
    if theta in (0., 1.):
        return endpoint_orbit_risk(machine, theta)

    return exact_risk(machine, layout, theta, plan=plan)


def cmd_sweep(args):
    n_jobs   = get_n_jobs(args.n_jobs)
    rows     = []
    trend    = []
    trend_ok = True
    ok       = True

    for epsilon in args.epsilon:
        normalized = []

        for K in args.K:
            machine, layout = build_estimator(K, epsilon, args.n_states)

            if args.theta is None:
                thetas      = default_theta_grid(K, args.grid_step)
            else:
                thetas      = np.array(args.theta, dtype=float)

            plan            = stationary_plan(machine)
            risks           = Parallel(n_jobs=n_jobs)(
                delayed(_sweep_point)(machine, layout, theta, plan)
                for theta in thetas
            )
            worst           = max(risks)

            rows.extend(
                [K, epsilon, theta, risk, risk * layout.sum_Nk]
                for theta, risk in zip(thetas, risks)
            )
            normalized.append(worst * layout.sum_Nk)
            trend.append({
                'K':          K,
                'epsilon':    epsilon,
                'worst':      worst,
                'normalized': worst * layout.sum_Nk
            })

            if not layout.compact:
                ok &= worst * layout.sum_Nk <= 600.

        if not _trend_ok(normalized):
            logger.warning(
                'epsilon=%g: worst * sum_Nk grows by more than 20%% with K',
                epsilon
            )

            trend_ok = False

    _write_table(
        args.out, ['K', 'epsilon', 'theta', 'risk', 'risk_times_S'], rows,
        args.format
    )
    _write_summary(
        _summary_path(args),
        {'trend': trend, 'trend_ok': trend_ok, 'checks_passed': bool(ok)}
    )

    return 0 if ok else 1


def _add_output(parser, summary=False):
    parser.add_argument(
        '--out', required=True, help='output table'
    )
    parser.add_argument(
        '--format', choices=['csv', 'json'], default='csv',
        help='format of the output table (default: csv)'
    )

    if summary:
        parser.add_argument(
            '--summary', default=None,
            help='JSON summary (default: next to --out)'
        )


def _add_machine_options(parser, multiple_K=False):
    if multiple_K:
        parser.add_argument(
            '--K', type=_n_classes, nargs='+', required=True,
            help='numbers of classes'
        )
        parser.add_argument(
            '--epsilon', type=_epsilon, nargs='+', default=[DEFAULT_EPSILON],
            help='tester error probabilities (default: 0.01)'
        )
    else:
        parser.add_argument(
            '--K', type=_n_classes, required=True, help='number of classes'
        )
        parser.add_argument(
            '--epsilon', type=_epsilon, default=DEFAULT_EPSILON,
            help='tester error probability (default: 0.01)'
        )

    parser.add_argument(
        '--n-states', type=int, nargs='+', default=None,
        help='explicit tester sizes, one or K values (compact machine)'
    )


def _add_jobs(parser):
    parser.add_argument(
        '--n-jobs', type=int, default=None,
        help='parallel jobs (default: FMEST_THREADS or 1)'
    )


def make_parser():
    """Return the argument parser of the ``fmest`` command."""

    parser     = argparse.ArgumentParser(
        prog        = 'fmest',
        description = 'Finite-memory estimation of a Bernoulli parameter.'
    )

    parser.add_argument(
        '--version', action='version', version=f'%(prog)s {__version__}'
    )
    parser.add_argument(
        '-v', '--verbose', action='count', default=0,
        help='log INFO (-v) or DEBUG (-vv) messages'
    )

    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True

    build      = subparsers.add_parser('build', help='build an estimator')

    _add_machine_options(build)
    build.add_argument('--out', required=True, help='machine file')
    build.set_defaults(func=cmd_build)

    analyze    = subparsers.add_parser(
        'analyze', help='exact risk and structural checks of a machine'
    )

    analyze.add_argument('machine', help='machine file')
    analyze.add_argument(
        '--theta', type=_theta, nargs='+', default=None,
        help='theta values; 0 and 1 use the constant-input orbit'
    )
    analyze.add_argument(
        '--grid-step', type=float, default=None, help='step of the theta grid'
    )
    analyze.add_argument(
        '--refine', action='store_true',
        help='also report the worst risk on a grid of half the step'
    )
    _add_output(analyze, summary=True)
    _add_jobs(analyze)
    analyze.set_defaults(func=cmd_analyze)

    simulate   = subparsers.add_parser(
        'simulate', help='simulate a machine on seeded streams'
    )

    simulate.add_argument('machine', help='machine file')
    simulate.add_argument(
        '--theta', type=_theta, nargs='+', required=True,
        help='Bernoulli parameters in (0, 1)'
    )
    simulate.add_argument(
        '--steps', type=_positive, required=True,
        help='steps per run, burn-in included'
    )
    simulate.add_argument(
        '--burn-in', type=int, default=None,
        help='steps left out of the statistics (default: 10 S)'
    )
    simulate.add_argument('--seed', type=int, default=0, help='base seed')
    simulate.add_argument(
        '--n-seeds', type=_positive, default=1, help='runs per theta'
    )
    _add_output(simulate)
    _add_jobs(simulate)
    simulate.set_defaults(func=cmd_simulate)

    compare    = subparsers.add_parser(
        'compare', help='compare against the randomized counter'
    )

    _add_machine_options(compare)
    compare.add_argument(
        '--S-equalized', action='store_true',
        help='normalize both machines by the physical state count'
    )
    compare.add_argument(
        '--grid-step', type=float, default=None, help='step of the theta grid'
    )
    _add_output(compare)
    _add_jobs(compare)
    compare.set_defaults(func=cmd_compare)

    sweep      = subparsers.add_parser(
        'sweep', help='exact risk over K, epsilon and theta'
    )

    _add_machine_options(sweep, multiple_K=True)
    sweep.add_argument(
        '--theta', type=_theta, nargs='+', default=None,
        help='theta values (default: the grid of every K)'
    )
    sweep.add_argument(
        '--grid-step', type=float, default=None, help='step of the theta grid'
    )
    _add_output(sweep, summary=True)
    _add_jobs(sweep)
    sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None):
    """Run the ``fmest`` command and return its exit status."""

    parser = make_parser()
    args   = parser.parse_args(argv)

    logging.basicConfig(
        format = '%(asctime)s %(name)s %(levelname)s: %(message)s',
        level  = [logging.WARNING, logging.INFO, logging.DEBUG][
            min(args.verbose, 2)
        ]
    )

    if getattr(args, 'n_states', None) is not None \
            and len(args.n_states) == 1:
        args.n_states = args.n_states[0]

    try:
        return args.func(args)
    except DomainError as e:
        print(f'fmest: error: {e}', file=sys.stderr)

        return 2
    except (
        MachineParseError, NumericalError, StructuralError, OSError
    ) as e:
        print(f'fmest: error: {e}', file=sys.stderr)

        return 1


if __name__ == '__main__':
    sys.exit(main())
