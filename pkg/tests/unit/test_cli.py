#!/usr/bin/env python3
# Unit tests for the debuglin command line

import unittest
import os
import sys
import json
import logging
import tempfile
import shutil
from unittest.mock import patch

from click.testing import CliRunner

sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))
from debuglin.cli import cli, format_value, main
from debuglin.instance_io import load_instance, serialize_trajectory
from debuglin.resource_provider import LOGGER_NAME
from debuglin.sgd_engine import train
from debuglin.solver_manager import solve
from debuglin.verification_manager import SubCheck, TheoremReport, VerificationManager

ROOT_DIR = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
CONFIG = os.path.join(ROOT_DIR, 'config.yaml')
PHI1 = os.path.join(ROOT_DIR, 'tests', 'data', 'phi1.cnf')
PHI2 = os.path.join(ROOT_DIR, 'tests', 'data', 'phi2.cnf')


def make_runner():
    try:
        return CliRunner(mix_stderr=False)
    except TypeError:
        # click 8.2 and later keep stderr separate by default
        return CliRunner()


class TestCli(unittest.TestCase):
    """
    Command output against direct library calls, and exit codes
    """

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.runner = make_runner()

    def tearDown(self):
        logger = logging.getLogger(LOGGER_NAME)
        for handler in logger.handlers[:]:
            logger.removeHandler(handler)
        shutil.rmtree(self.temp_dir)

    def path(self, name):
        return os.path.join(self.temp_dir, name)

    def run_cli(self, *args):
        return self.runner.invoke(cli, ['--config', CONFIG, *args])

    def compile_phi(self, cnf, name):
        out = self.path(name)
        result = self.run_cli('compile', 'sat13', cnf, '-o', out)
        self.assertEqual(result.exit_code, 0, result.stderr)
        return out

    def test_compile_and_debug_phi1(self):
        inst_path = self.compile_phi(PHI1, 'phi1.json')
        result = self.run_cli('debug', inst_path)
        self.assertEqual(result.exit_code, 0, result.stderr)
        lines = result.stdout.splitlines()
        self.assertEqual(lines[0], 'DEBUGGABLE (solver: brute)')
        self.assertEqual(lines[1], 'removal set: {var(2), var(3)}')
        self.assertEqual(lines[2], 'removal mask: 6')

        verdict = solve(load_instance(inst_path))
        expected = ['final_w:'] + [f"  [{i}] {format_value(v)}" for i, v in enumerate(verdict.final_w)]
        self.assertEqual(lines[3:], expected)

    def test_debug_phi2(self):
        inst_path = self.compile_phi(PHI2, 'phi2.json')
        result = self.run_cli('debug', inst_path, '--solver', 'brute')
        self.assertEqual(result.exit_code, 0, result.stderr)
        self.assertEqual(result.stdout.splitlines()[0], 'NOT DEBUGGABLE (solver: brute)')

    def test_compile_ss2d_and_debug(self):
        out = self.path('ss.json')
        result = self.run_cli('compile', 'ss2d', '--set', '1,2', '--target', '3', '--beta', '1', '-o', out)
        self.assertEqual(result.exit_code, 0, result.stderr)
        self.assertIn('wrote', result.stdout)
        result = self.run_cli('debug', out)
        self.assertEqual(result.exit_code, 0, result.stderr)
        self.assertIn('DEBUGGABLE (solver: brute)', result.stdout)
        self.assertIn('removal set: {}', result.stdout)

    def test_compile_ss1d_irrational(self):
        out = self.path('ss1.json')
        result = self.run_cli('compile', 'ss1d', '--set', '1,2', '--target', '3', '--size', '2',
                              '--beta', '-2', '-o', out)
        self.assertEqual(result.exit_code, 0, result.stderr)
        self.assertIn('gamma=2', result.stdout)
        result = self.run_cli('train', out)
        self.assertIn('sqrt(2)', result.stdout)
        self.assertIn('≈', result.stdout)

    def test_train_with_trace(self):
        inst_path = self.compile_phi(PHI1, 'phi1.json')
        trace = self.path('trace.jsonl')
        result = self.run_cli('train', inst_path, '--trace', trace)
        self.assertEqual(result.exit_code, 0, result.stderr)
        self.assertEqual(result.stdout.splitlines()[0], 'terminated_epoch: 2')
        inst = load_instance(inst_path)
        with open(trace, encoding='utf-8') as f:
            self.assertEqual(f.read(), serialize_trajectory(train(inst), inst.gamma))

    def test_train_with_orders_seed_is_reproducible(self):
        inst_path = self.compile_phi(PHI1, 'phi1.json')
        first = self.run_cli('train', inst_path, '--orders-seed', '4')
        second = self.run_cli('train', inst_path, '--orders-seed', '4')
        self.assertEqual(first.exit_code, 0, first.stderr)
        self.assertEqual(first.stdout, second.stdout)

    def test_verify_thm1(self):
        report = self.path('thm1.jsonl')
        result = self.run_cli('verify', 'thm1', PHI1, '--orders', '1', '--report', report)
        self.assertEqual(result.exit_code, 0, result.stdout)
        lines = result.stdout.splitlines()
        self.assertEqual(lines[-1], 'PASS')
        self.assertIn('debuggable: yes', lines)
        self.assertIn('oracle: yes', lines)
        with open(report, encoding='utf-8') as f:
            records = [json.loads(line) for line in f]
        self.assertEqual(records[0]['type'], 'theorem')
        self.assertTrue(records[0]['passed'])

    def test_verify_thm4_and_thm5(self):
        result = self.run_cli('verify', 'thm4', '--set', '2,4', '--target', '3', '--beta', '1')
        self.assertEqual(result.exit_code, 0, result.stdout)
        self.assertIn('debuggable: no', result.stdout)
        self.assertEqual(result.stdout.splitlines()[-1], 'PASS')
        result = self.run_cli('verify', 'thm5', '--set', '1,2,3', '--target', '5', '--size', '2')
        self.assertEqual(result.exit_code, 0, result.stdout)
        self.assertIn('debuggable: yes', result.stdout)

    def test_verify_lemmas(self):
        result = self.run_cli('verify', 'lemmas', PHI1, '--subsets', '8', '--orders', '0')
        self.assertEqual(result.exit_code, 0, result.stdout)
        self.assertEqual(result.stdout.splitlines(), ['lemmas 8 run(s)', 'PASS'])

    def test_verify_failure_exit_code(self):
        failing = TheoremReport('thm5', 'stub', None, (SubCheck('verdict-matches-oracle', False),), False, True)
        with patch.object(VerificationManager, 'verify_thm5', return_value=failing):
            result = self.run_cli('verify', 'thm5', '--set', '1,2', '--target', '3', '--size', '1')
        self.assertEqual(result.exit_code, 3)
        self.assertEqual(result.stdout.splitlines()[-1], 'FAIL')

    def test_input_errors(self):
        result = self.run_cli('debug', self.path('missing.json'))
        self.assertEqual(result.exit_code, 2)
        self.assertTrue(result.stderr.startswith('error:'))

        bad = self.path('bad.json')
        with open(bad, 'w', encoding='utf-8') as f:
            json.dump({
                'format_version': 1, 'dimension': 1, 'gamma': '1',
                'loss': {'kind': 'linear', 'alpha': '1', 'beta': '0'},
                'w0': ['1'], 'eta': ['-1'], 'epsilon': {'exact_zero': True},
                'max_epochs': 1, 'train': [], 'test': {'x': ['1'], 'y': 1},
            }, f)
        result = self.run_cli('train', bad)
        self.assertEqual(result.exit_code, 2)
        self.assertIn('learning rate negative', result.stderr)

        cnf = self.path('neg.cnf')
        with open(cnf, 'w', encoding='utf-8') as f:
            f.write('p cnf 4 1\n1 -2 3 0\n')
        result = self.run_cli('compile', 'sat13', cnf, '-o', self.path('x.json'))
        self.assertEqual(result.exit_code, 2)
        self.assertIn('negation not allowed', result.stderr)

    def test_brute_cap(self):
        inst_path = self.compile_phi(PHI1, 'phi1.json')
        result = self.run_cli('debug', inst_path, '--max-brute', '2')
        self.assertEqual(result.exit_code, 2)
        self.assertIn('cap', result.stderr)

    def test_bad_option_values(self):
        result = self.run_cli('compile', 'ss2d', '--set', '1,x', '--target', '3', '--beta', '1',
                              '-o', self.path('x.json'))
        self.assertEqual(result.exit_code, 2)
        result = self.run_cli('verify', 'thm4', '--set', '1,2', '--target', '3', '--beta', 'half')
        self.assertEqual(result.exit_code, 2)

    def test_main_returns_exit_code(self):
        self.assertEqual(main(['--config', CONFIG, 'verify', 'thm5',
                               '--set', '1,2', '--target', '3', '--size', '2']), 0)
        self.assertEqual(main(['--config', CONFIG, 'debug']), 2)


if __name__ == '__main__':
    unittest.main()
