import contextlib
import csv
import io
import json
import os
import shutil
import tempfile
import unittest
from unittest import mock

from fmest import cli
from fmest.machine import load_machine, Machine


def run(*argv):
    """Run the command line, returning the exit status and stdout."""

    stdout = io.StringIO()

    with contextlib.redirect_stdout(stdout), \
            contextlib.redirect_stderr(io.StringIO()):
        status = cli.main(list(argv))

    return status, stdout.getvalue()


def read_csv(filename):
    with open(filename, newline='') as f:
        return list(csv.DictReader(f))


class CLITestCase(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def path(self, name):
        return os.path.join(self.tmpdir, name)

    def build_compact(self, name='m.json', K='3', n_states='6'):
        filename = self.path(name)
        status, _ = run(
            'build', '--K', K, '--n-states', n_states, '--out', filename
        )

        self.assertEqual(status, 0)

        return filename


class BuildTest(CLITestCase):
    def test_compact(self):
        filename = self.path('m.json')
        status, out = run(
            'build', '--K', '3', '--n-states', '6', '--out', filename
        )

        self.assertEqual(status, 0)
        self.assertIn('S_physical   12', out)
        self.assertIn('sum_Nk       18', out)

        machine = load_machine(filename)

        self.assertEqual(machine.num_states, 12)
        self.assertTrue(machine.metadata['compact'])

    def test_per_class_sizes(self):
        filename = self.path('m.json')
        status, _ = run(
            'build', '--K', '3', '--n-states', '5', '6', '7',
            '--out', filename
        )

        self.assertEqual(status, 0)
        self.assertEqual(load_machine(filename).num_states, 12)

    def test_full(self):
        filename = self.path('m.json')
        status, out = run('build', '--K', '6', '--out', filename)

        self.assertEqual(status, 0)
        self.assertIn('S_physical   3026', out)
        self.assertIn('sum_Nk       3038', out)
        self.assertIn('within_bound True', out)
        self.assertTrue(load_machine(filename).validate().strongly_connected)

    def test_usage_errors(self):
        for argv in [
            ['build', '--K', '1', '--out', self.path('m.json')],
            ['build', '--K', '3', '--epsilon', '0.5', '--out', 'm.json'],
            ['build', '--K', '3'],
            ['frobnicate']
        ]:
            with self.assertRaises(SystemExit) as cm:
                run(*argv)

            self.assertEqual(cm.exception.code, 2)

    def test_invalid_sizes(self):
        status, _ = run(
            'build', '--K', '3', '--n-states', '3', '--out', self.path('m')
        )

        self.assertEqual(status, 2)


class AnalyzeTest(CLITestCase):
    def test_default_grid(self):
        machine = self.build_compact()
        out     = self.path('risk.csv')
        status, stdout = run('analyze', machine, '--out', out)

        self.assertEqual(status, 0)
        self.assertTrue(stdout.startswith('worst '))

        rows    = read_csv(out)

        self.assertEqual(
            list(rows[0]),
            [
                'theta', 'risk', 'risk_times_S', 'pi_decomposition_error',
                'drift_ok', 'holding_ok'
            ]
        )

        with open(self.path('risk.summary.json')) as f:
            summary = json.load(f)

        self.assertEqual(len(rows), summary['grid_spec']['n_points'])
        self.assertEqual(summary['sum_Nk'], 18)
        self.assertEqual(summary['S_physical'], 12)
        self.assertTrue(summary['checks_passed'])
        self.assertEqual(
            summary['worst'], max(float(row['risk']) for row in rows)
        )

        for row in rows:
            self.assertLessEqual(float(row['pi_decomposition_error']), 1e-8)
            self.assertIn(row['holding_ok'], ['0', '1'])

    def test_endpoints(self):
        machine = self.build_compact()
        out     = self.path('risk.csv')
        summary = self.path('summary.json')
        status, _ = run(
            'analyze', machine, '--theta', '0', '0.3', '1', '--out', out,
            '--summary', summary
        )

        self.assertEqual(status, 0)

        rows    = read_csv(out)

        self.assertEqual([float(row['theta']) for row in rows], [.3, 0., 1.])
        self.assertEqual(rows[1]['pi_decomposition_error'], '')

        with open(summary) as f:
            doc = json.load(f)

        self.assertEqual(doc['grid_spec'], {'kind': 'explicit', 'n_points': 1})
        self.assertLessEqual(doc['endpoint_risk_0'], (2. / 5) ** 2)
        self.assertLessEqual(doc['endpoint_risk_1'], (3. / 5) ** 2)
        self.assertEqual(doc['worst_theta'], .3)

    def test_refine(self):
        machine = self.build_compact()
        out     = self.path('risk.csv')
        status, _ = run(
            'analyze', machine, '--grid-step', '0.05', '--refine', '--out', out
        )

        self.assertEqual(status, 0)

        with open(self.path('risk.summary.json')) as f:
            summary = json.load(f)

        self.assertEqual(summary['grid_spec']['step'], .05)
        self.assertGreaterEqual(summary['refinement_change'], 0.)

    def test_json_format(self):
        machine = self.build_compact()
        out     = self.path('risk.json')
        status, _ = run(
            'analyze', machine, '--theta', '0.4', '1', '--format', 'json',
            '--out', out
        )

        self.assertEqual(status, 0)

        with open(out) as f:
            records = json.load(f)

        self.assertEqual(len(records), 2)
        self.assertEqual(records[0]['theta'], .4)
        self.assertIsInstance(records[0]['holding_ok'], bool)
        self.assertIsNone(records[1]['drift_ok'])

    def test_full_machine(self):
        filename  = self.path('full.json')
        status, _ = run('build', '--K', '4', '--out', filename)

        self.assertEqual(status, 0)

        out       = self.path('risk.csv')
        status, _ = run('analyze', filename, '--out', out)

        self.assertEqual(status, 0)

        with open(self.path('risk.summary.json')) as f:
            summary = json.load(f)

        self.assertTrue(summary['bound300'])
        self.assertTrue(summary['high_boundary_ok'])
        self.assertLessEqual(
            summary['high_boundary_normalized'],
            summary['high_boundary_bound']
        )
        self.assertTrue(summary['checks_passed'])

    def test_relative_change(self):
        self.assertAlmostEqual(cli._relative_change(.02, .021), .05)
        self.assertEqual(cli._relative_change(0., 0.), 0.)
        self.assertEqual(cli._relative_change(0., .1), .1)

    def test_machine_without_layout(self):
        filename = self.path('plain.json')

        Machine(next0=[1, 1], next1=[2, 2], estimate=[0., 1.]).save(filename)

        out      = self.path('risk.csv')
        status, _ = run('analyze', filename, '--theta', '0.5', '--out', out)

        self.assertEqual(status, 0)
        self.assertAlmostEqual(float(read_csv(out)[0]['risk']), .25)

    def test_missing_file(self):
        status, _ = run(
            'analyze', self.path('missing.json'), '--out', self.path('r.csv')
        )

        self.assertEqual(status, 1)

    def test_malformed_file(self):
        filename = self.path('bad.json')

        with open(filename, 'w') as f:
            f.write('{"version": 1, "num_states": "two"}')

        status, _ = run('analyze', filename, '--out', self.path('r.csv'))

        self.assertEqual(status, 1)

    def test_bad_thread_count(self):
        machine = self.build_compact()

        with mock.patch.dict(os.environ, {'FMEST_THREADS': 'many'}):
            status, _ = run('analyze', machine, '--out', self.path('r.csv'))

        self.assertEqual(status, 2)


class SimulateTest(CLITestCase):
    def test_reproducible(self):
        machine = self.build_compact()
        outputs = []

        for name in ['a.csv', 'b.csv']:
            out       = self.path(name)
            status, _ = run(
                'simulate', machine, '--theta', '0.3', '0.6', '--steps',
                '5000', '--seed', '17', '--n-seeds', '2', '--out', out
            )

            self.assertEqual(status, 0)

            with open(out, 'rb') as f:
                outputs.append(f.read())

        self.assertEqual(outputs[0], outputs[1])

        rows = read_csv(self.path('a.csv'))

        self.assertEqual(len(rows), 2 * 2 * 3)
        self.assertEqual(
            sorted({row['seed'] for row in rows}), ['16', '17', '18', '19']
        )
        self.assertEqual(rows[0]['steps_used'], '4880')

    def test_steps_too_small(self):
        machine = self.build_compact()
        status, _ = run(
            'simulate', machine, '--theta', '0.3', '--steps', '150',
            '--out', self.path('s.csv')
        )

        self.assertEqual(status, 2)

    def test_endpoint_theta(self):
        machine = self.build_compact()
        status, _ = run(
            'simulate', machine, '--theta', '1', '--steps', '1000',
            '--out', self.path('s.csv')
        )

        self.assertEqual(status, 2)


class CompareTest(CLITestCase):
    def test_compare(self):
        out       = self.path('cmp.csv')
        status, _ = run(
            'compare', '--K', '3', '--n-states', '6', '--S-equalized',
            '--grid-step', '0.05', '--out', out
        )

        self.assertEqual(status, 0)

        rows      = read_csv(out)

        self.assertEqual(
            [row['machine'] for row in rows], ['nested_isit', 'samaniego']
        )
        self.assertEqual([row['S'] for row in rows], ['12', '12'])
        self.assertAlmostEqual(float(rows[1]['worst']), .25 / 11)
        self.assertEqual(float(rows[1]['ratio']), 1.)
        self.assertAlmostEqual(
            float(rows[0]['ratio']),
            float(rows[0]['normalized']) / float(rows[1]['normalized'])
        )

    def test_nominal_sizes(self):
        out       = self.path('cmp.csv')
        status, _ = run(
            'compare', '--K', '3', '--n-states', '6', '--grid-step', '0.05',
            '--out', out
        )

        self.assertEqual(status, 0)
        self.assertEqual(read_csv(out)[0]['S'], '18')

    def test_text_cells(self):
        self.assertEqual(cli._cell('samaniego'), 'samaniego')
        self.assertEqual(cli._cell(True), '1')
        self.assertEqual(cli._cell(12), '12')
        self.assertEqual(cli._cell(.5), '0.5')
        self.assertEqual(cli._cell(None), '')


class SweepTest(CLITestCase):
    def test_sweep(self):
        out       = self.path('sweep.csv')
        status, _ = run(
            'sweep', '--K', '3', '4', '--n-states', '6', '--theta', '0',
            '0.3', '0.5', '1', '--out', out
        )

        self.assertEqual(status, 0)

        rows      = read_csv(out)

        self.assertEqual(len(rows), 8)
        self.assertEqual(
            list(rows[0]), ['K', 'epsilon', 'theta', 'risk', 'risk_times_S']
        )
        self.assertEqual([row['K'] for row in rows], ['3'] * 4 + ['4'] * 4)

        with open(self.path('sweep.summary.json')) as f:
            summary = json.load(f)

        self.assertEqual([t['K'] for t in summary['trend']], [3, 4])
        self.assertIsInstance(summary['trend_ok'], bool)
        self.assertTrue(summary['checks_passed'])

    def test_trend(self):
        self.assertTrue(cli._trend_ok([100., 110., 90., 115.]))
        self.assertFalse(cli._trend_ok([100., 130.]))
