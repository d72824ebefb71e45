#!/usr/bin/env python

import contextlib
import io
import json
import logging
import math
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from moilab import cli
from moilab.config import EXPERIMENTS, LabSettings

logging.basicConfig(level=logging.WARNING)


def run_main(*argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli.main(list(argv))
    return code, out.getvalue(), err.getvalue()


def inline_config(path, max_order, n=2):
    problem = {
        'f': {'name': 'exp', 'params': {'max_order': max_order}},
        'H': {'dim': 2, 're': [[1.0, 0.0], [0.0, -1.0]]},
        'X': [{'dim': 2, 're': [[2.0, 0.0], [0.0, 1.0]]}] * n,
        'n': n,
    }
    path.write_text(json.dumps({'experiment': 'moi', 'problem': problem}))
    return str(path)


class CliTest(unittest.TestCase):

    def tearDown(self):
        LabSettings.current = None

    def test_list(self):
        code, out, _ = run_main('list')
        self.assertEqual(code, cli.EXIT_OK)
        lines = out.splitlines()
        self.assertEqual(lines[0], 'moi')
        self.assertEqual(sorted(lines), sorted(EXPERIMENTS))

    def test_list_json(self):
        code, out, _ = run_main('list', '--json')
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(len(json.loads(out)), len(EXPERIMENTS))

    def test_validate(self):
        code, out, _ = run_main('validate', 'zeta')
        self.assertEqual(code, cli.EXIT_OK)
        self.assertIn('valid zeta config', out)

    def test_validate_rejects(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'bad.json'
            path.write_text(json.dumps({'experiment': 'zeta', 'nmax': -1}))
            code, _, err = run_main('validate', str(path))
        self.assertEqual(code, cli.EXIT_INPUT)
        self.assertIn('nmax', err)

    def test_missing_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            code, _, err = run_main('validate', str(Path(tmp) / 'absent.json'))
        self.assertEqual(code, cli.EXIT_INPUT)
        self.assertIn('cannot read', err)

    def test_internal_value_error_propagates(self):
        with tempfile.TemporaryDirectory() as tmp:
            with mock.patch('moilab.cli.run_experiment', side_effect=ValueError('broken kernel')):
                with self.assertRaises(ValueError):
                    run_main('run', 'theta-asymptotic', '--out', tmp)

    def test_order_exceeded_is_input_error(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = inline_config(Path(tmp) / 'problem.json', max_order=1)
            code, _, err = run_main('run', config, '--out', tmp)
        self.assertEqual(code, cli.EXIT_INPUT)
        self.assertIn('order', err)

    def test_inline_problem(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = inline_config(Path(tmp) / 'problem.json', max_order=10, n=1)
            code, _, _ = run_main('run', config, '--out', tmp)
            payload = json.loads((Path(tmp) / 'moi.json').read_text())
        self.assertEqual(code, cli.EXIT_OK)
        result = payload['summary']['result']
        self.assertAlmostEqual(result['re'][0][0], 2.0 * math.e, places=12)
        self.assertAlmostEqual(result['re'][1][1], math.exp(-1.0), places=12)

    def test_bad_threads(self):
        code, _, err = run_main('run', 'theta-asymptotic', '--threads', '0')
        self.assertEqual(code, cli.EXIT_INPUT)
        self.assertIn('threads', err)

    def test_run_writes_outputs(self):
        with tempfile.TemporaryDirectory() as tmp:
            code, out, _ = run_main('run', 'theta-asymptotic', '--out', tmp)
            csv_path = Path(tmp) / 'theta-asymptotic.csv'
            payload = json.loads((Path(tmp) / 'theta-asymptotic.json').read_text())
            header = csv_path.read_text().splitlines()[0]
        self.assertEqual(code, cli.EXIT_OK)
        self.assertIn('passed', out)
        self.assertTrue(payload['passed'])
        self.assertEqual(payload['experiment'], 'theta-asymptotic')
        self.assertEqual(len(payload['config_digest']), 64)
        self.assertEqual(payload['results_csv'], 'theta-asymptotic.csv')
        self.assertIn('numpy', payload['versions'])
        self.assertTrue(header)

    def test_deterministic(self):
        outputs = []
        for threads in ('1', '2'):
            with tempfile.TemporaryDirectory() as tmp:
                run_main('run', 'theta-asymptotic', '--out', tmp, '--threads', threads)
                csv_bytes = (Path(tmp) / 'theta-asymptotic.csv').read_bytes()
                digest = json.loads((Path(tmp) / 'theta-asymptotic.json').read_text())['config_digest']
                outputs.append((csv_bytes, digest))
        self.assertEqual(outputs[0], outputs[1])


if __name__ == '__main__':
    unittest.main()
