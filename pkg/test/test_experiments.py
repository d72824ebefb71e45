#!/usr/bin/env python

import logging
import unittest

from moilab.config import EXPERIMENTS, parse_config
from moilab.experiments import REGISTRY, Check, list_experiments, run_experiment

logging.basicConfig(level=logging.WARNING)


def run(data, n_jobs=1):
    return run_experiment(parse_config(data), n_jobs)


class RegistryTest(unittest.TestCase):

    def test_every_experiment_registered(self):
        self.assertEqual(sorted(REGISTRY), sorted(EXPERIMENTS))
        self.assertEqual(list_experiments()[0], 'moi')

    def test_check(self):
        self.assertTrue(Check('a', 1e-12, 1e-10).passed)
        self.assertFalse(Check('a', float('nan'), 1e-10).passed)
        self.assertEqual(Check('a', 2.0, 1.0).to_dict()['passed'], False)


class ExperimentTest(unittest.TestCase):

    def assertPassed(self, outcome):
        failed = [c for c in outcome.checks if not c.passed]
        self.assertEqual(failed, [], outcome)
        self.assertTrue(outcome.checks)

    def test_moi(self):
        outcome = run({'experiment': 'moi', 'draws': 3, 'bound': {'dims': [10, 20]}})
        self.assertPassed(outcome)
        self.assertEqual(outcome.header, ['draw', 'check', 'residual'])
        self.assertEqual(len(outcome.tables['bound'][1]), 2)

    def test_moi_threads(self):
        data = {'experiment': 'moi', 'draws': 4}
        self.assertEqual(run(data, 1).rows, run(data, 3).rows)

    def test_identities(self):
        self.assertPassed(run({'experiment': 'identities', 'dim': 4, 'n_max': 2, 'draws': 2}))

    def test_taylor(self):
        outcome = run({'experiment': 'taylor', 'dim': 4, 'orders': [1, 2], 'polynomial_cases': 3})
        self.assertPassed(outcome)
        self.assertIn('exactness', outcome.tables)

    def test_combinatorial(self):
        outcome = run({'experiment': 'combinatorial', 'dim': 4, 'draws': 2, 'multiset_max': 6})
        self.assertPassed(outcome)
        self.assertIn('delta_growth', outcome.tables)

    def test_heat_trace(self):
        self.assertPassed(run({'experiment': 'heat-trace', 'commuting_draws': 3}))

    def test_theta(self):
        self.assertPassed(run({'experiment': 'theta-asymptotic'}))

    def test_zeta(self):
        self.assertPassed(run({'experiment': 'zeta', 'tail_draws': 3}))

    def test_order_estimate(self):
        outcome = run({'experiment': 'order-estimate'})
        self.assertPassed(outcome)
        self.assertEqual(len(outcome.rows), 3)

    def test_hs_calc(self):
        outcome = run({'experiment': 'hs-calc', 'draws': 1, 'N_values': [3], 'divided_cases': 3,
                       'resolvent_dim': 10, 'resolvent_points': 9, 'tolerances': {'independence': 1e5}})
        self.assertPassed(outcome)
        self.assertIn('quadrature', outcome.summary)


if __name__ == '__main__':
    unittest.main()
