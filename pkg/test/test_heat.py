#!/usr/bin/env python

import logging
import math
import unittest

import numpy as np

from moilab.exceptions import DivergentRegion, OrderExceeded, RangeGuard, SpectralGapViolation, TailTooFat
from moilab.expansion import fit_power_law
from moilab.functions import gauss_function
from moilab.heat import (
    SpectralTripleModel, abs_expansion, build_model, dirichlet_coefficients, heat_trace_direct,
    heat_trace_expansion, mangoldt_table, series_term_count, spectral_action_direct,
    spectral_action_expansion, theta_asymptotic_check, theta_sum, von_mangoldt, zeta_partial,
)

logging.basicConfig(level=logging.WARNING)


class ModelTest(unittest.TestCase):

    def test_families(self):
        model = build_model('harmonic', 4)
        np.testing.assert_allclose(np.diag(model.D.entries) ** 2, [1.0, 3.0, 5.0, 7.0])
        np.testing.assert_allclose(model.theta.power(2.0), np.diag([2.0, 4.0, 6.0, 8.0]), atol=1e-12)
        with self.assertRaises(ValueError):
            build_model('torus', 4)
        with self.assertRaises(ValueError):
            build_model('diag', 4, potential='quartic')

    def test_seeded(self):
        a = build_model('diag', 5, 'random', 0.1, 'random_diagonal', seed=3)
        b = build_model('diag', 5, 'random', 0.1, 'random_diagonal', seed=3)
        np.testing.assert_array_equal(a.V, b.V)
        np.testing.assert_array_equal(a.P, b.P)

    def test_direct_trace(self):
        model = build_model('diag', 3)
        self.assertAlmostEqual(heat_trace_direct(model, 0.5),
                               sum(math.exp(-0.5 * d * d) for d in (1, 2, 3)), places=12)
        self.assertAlmostEqual(heat_trace_direct(model, 0.5, 'abs'),
                               sum(math.exp(-0.5 * d) for d in (1, 2, 3)), places=12)
        with self.assertRaises(ValueError):
            heat_trace_direct(model, 0.0)


class HeatExpansionTest(unittest.TestCase):

    def test_term_count(self):
        self.assertEqual(series_term_count(0), 1)
        self.assertEqual(series_term_count(1), 3)

    def test_commuting_closed_form(self):
        d = np.arange(1.0, 9.0)
        v, t, N = 0.3, 0.1, 6
        model = build_model('diag', 8, 'constant', v)
        result = heat_trace_expansion(model, N, [t])[0]
        A = 2.0 * d * v + v * v
        expected = sum(np.sum((-t * A) ** n / math.factorial(n) * np.exp(-t * d * d)) for n in range(N + 1))
        self.assertAlmostEqual(result.partial_sums[N].real, expected, places=9)
        self.assertAlmostEqual(result.exact, float(np.sum(np.exp(-t * (d + v) ** 2))), places=12)

    def test_remainder_slope(self):
        t_grid = [2e-3, 4e-3, 8e-3, 1.6e-2, 3.2e-2, 6.4e-2]
        model = build_model('diag', 400, 'constant', 0.05)
        results = heat_trace_expansion(model, 2, t_grid)
        fit = fit_power_law(t_grid, [r.remainder_norms[2] for r in results], order=2)
        self.assertAlmostEqual(fit.slope, 1.0, delta=0.15)

    def test_abs_needs_gap(self):
        with self.assertRaises(SpectralGapViolation):
            abs_expansion(SpectralTripleModel(np.diag([0.0, 1.0])), 1, [0.1])
        with self.assertRaises(SpectralGapViolation):
            abs_expansion(SpectralTripleModel(np.diag([1.0, 2.0]), np.diag([-1.0, 0.0])), 1, [0.1])

    def test_abs_zero_perturbation(self):
        model = build_model('diag', 6)
        result = abs_expansion(model, 2, [0.2])[0]
        self.assertAlmostEqual(result.partial_sums[2].real, result.exact, places=12)


class SpectralActionTest(unittest.TestCase):

    def test_gauss_is_heat_trace(self):
        model = build_model('diag', 6, 'random', 0.2, seed=1)
        self.assertAlmostEqual(spectral_action_direct(model, gauss_function(), 0.3),
                               heat_trace_direct(model, 0.09), places=12)

    def test_moi_level_agrees(self):
        model = build_model('diag', 3, 'random', 0.1)
        result = spectral_action_expansion(model, gauss_function(), 10, [0.1])[0]
        self.assertLess(max(result.companion_gaps[-1:]), 1e-9)
        self.assertLess(result.remainder_norms[-1], 1e-9)

    def test_needs_derivatives(self):
        with self.assertRaises(OrderExceeded):
            spectral_action_expansion(build_model('diag', 3), gauss_function(max_order=4), 2, [0.1])


class ThetaTest(unittest.TestCase):

    def test_coefficients(self):
        fit = theta_asymptotic_check(2000, np.logspace(-3, -1, 9))
        self.assertAlmostEqual(fit.coefficients[0], math.sqrt(math.pi) / 2.0, delta=1e-4)
        self.assertAlmostEqual(fit.coefficients[1], -0.5, delta=1e-3)
        self.assertAlmostEqual(float(fit.predict(0.01)), theta_sum(0.01, 2000), places=6)

    def test_theta_sum(self):
        self.assertAlmostEqual(theta_sum(0.01, 2000), 8.36227, places=4)

    def test_tail_too_fat(self):
        with self.assertRaises(TailTooFat):
            theta_asymptotic_check(10, [1e-3, 1e-2, 1e-1, 1.0])


class ZetaTest(unittest.TestCase):

    def test_zeta_two(self):
        coeffs, start = dirichlet_coefficients('one')
        partial = zeta_partial(coeffs, 2.0, 100000, start=start)
        self.assertLess(abs(partial.value - math.pi ** 2 / 6.0), 2.0 * partial.tail_bound)
        self.assertAlmostEqual(partial.tail_bound, 1e-5, places=9)

    def test_tail_derivative(self):
        coeffs, start = dirichlet_coefficients('inv_log')
        h = 1e-4
        upper = zeta_partial(coeffs, 1.0 + h, 100000, power=2.0, start=start).value
        lower = zeta_partial(coeffs, 1.0 - h, 100000, power=2.0, start=start).value
        self.assertAlmostEqual(((upper - lower) / (2.0 * h)).real, 2.0 - math.pi ** 2 / 3.0, delta=1e-3)

    def test_log_zeta(self):
        coeffs, start = dirichlet_coefficients('mangoldt_over_log')
        partial = zeta_partial(coeffs, 2.0, 100000, start=start)
        self.assertAlmostEqual(partial.value.real, math.log(math.pi ** 2 / 6.0), delta=1e-4)

    def test_divergent(self):
        coeffs, start = dirichlet_coefficients('one')
        with self.assertRaises(DivergentRegion):
            zeta_partial(coeffs, 1.0, 1000)
        with self.assertRaises(DivergentRegion):
            zeta_partial(coeffs, 0.75 + 3j, 1000, power=1.0)
        with self.assertRaises(ValueError):
            dirichlet_coefficients('liouville')

    def test_von_mangoldt(self):
        self.assertEqual(von_mangoldt(1), 0.0)
        self.assertAlmostEqual(von_mangoldt(8), math.log(2.0))
        self.assertEqual(von_mangoldt(12), 0.0)
        self.assertAlmostEqual(von_mangoldt(9973), 9.207636157000237, places=12)
        with self.assertRaises(RangeGuard):
            von_mangoldt(10 ** 7 + 1)
        with self.assertRaises(ValueError):
            von_mangoldt(0)

    def test_sieve_agrees(self):
        table = mangoldt_table(500)
        for n in range(1, 501):
            self.assertAlmostEqual(table[n], von_mangoldt(n), places=12)


if __name__ == '__main__':
    unittest.main()
