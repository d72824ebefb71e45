#!/usr/bin/env python

import logging
import math
import unittest

import numpy as np
import scipy.linalg

from moilab.exceptions import DimensionMismatch, DomainViolation, NotHermitian, OrderExceeded
from moilab.functions import (
    exp_function, log_function, poly_function, power_function, rational_function, sin_function,
)
from moilab.spectral import (
    HermitianOperator, apply_function, divided_difference, divided_difference_grid,
    divided_difference_opitz, divided_difference_rows, eig,
)
from . import draws, hermitian

logging.basicConfig(level=logging.WARNING)


class HermitianOperatorTest(unittest.TestCase):

    def test_rejects_non_hermitian(self):
        with self.assertRaises(NotHermitian):
            HermitianOperator([[0.0, 1.0], [0.0, 0.0]])

    def test_rejects_non_square(self):
        with self.assertRaises(DimensionMismatch):
            HermitianOperator(np.zeros((2, 3)))

    def test_clusters(self):
        H = HermitianOperator.diagonal([1.0, 2.0, 1.0])
        spec = eig(H)
        np.testing.assert_allclose(spec.eigenvalues, [1.0, 2.0])
        self.assertEqual(spec.multiplicities, [2, 1])
        self.assertEqual(len(spec.projections), 2)
        np.testing.assert_allclose(spec.reconstruct(), H.entries, atol=1e-14)

    def test_projections(self):
        for _, rng in draws():
            H = HermitianOperator(hermitian(5, rng))
            total = sum(H.spectral.projections)
            np.testing.assert_allclose(total, np.eye(5), atol=1e-12)

    def test_json(self):
        H = HermitianOperator([[1.0, 1j], [-1j, 2.0]])
        self.assertEqual(HermitianOperator.from_json(H.to_json()).entries.tolist(), H.entries.tolist())


class FunctionalCalculusTest(unittest.TestCase):

    def test_exp_matches_expm(self):
        for _, rng in draws():
            H = HermitianOperator(hermitian(6, rng, 2.0))
            np.testing.assert_allclose(apply_function(exp_function(), H), scipy.linalg.expm(H.entries),
                                       atol=1e-11)

    def test_derivative_order(self):
        H = HermitianOperator.diagonal([0.0, 1.0])
        np.testing.assert_allclose(apply_function(exp_function(2.0), H, 1), np.diag([2.0, 2.0 * math.e ** 2]))

    def test_domain_violation(self):
        with self.assertRaises(DomainViolation):
            apply_function(log_function(), HermitianOperator.diagonal([-1.0, 1.0]))


class DividedDifferenceTest(unittest.TestCase):

    def test_square(self):
        f = poly_function([0.0, 0.0, 1.0])
        self.assertAlmostEqual(divided_difference(f, [1.0, 3.0]).real, 4.0)
        self.assertAlmostEqual(divided_difference(f, [1.0, 3.0, -2.0]).real, 1.0)

    def test_confluent(self):
        f = exp_function()
        self.assertAlmostEqual(divided_difference(f, [0.0, 0.0, 0.0]).real, 0.5, places=12)
        self.assertAlmostEqual(divided_difference(f, [1.0, 1.0 + 1e-9]).real, math.e, places=8)
        self.assertAlmostEqual(divided_difference(f, [2.0, 2.0 + 1e-9, 2.0 - 1e-9]).real,
                               math.exp(2.0) / 2.0, places=7)

    def test_opitz_agrees(self):
        f = exp_function()
        nodes = [-1.0, 0.3, 1.2, 2.0]
        self.assertAlmostEqual(divided_difference_opitz(f, nodes), divided_difference(f, nodes), places=12)

    def test_order_exceeded(self):
        with self.assertRaises(OrderExceeded):
            divided_difference(exp_function(max_order=2), [0.0, 1.0, 2.0, 3.0])

    def test_rows(self):
        f = exp_function()
        rows = np.array([[0.5, 0.5], [0.0, 1.0], [1.0, 1.0 + 1e-9]])
        values = divided_difference_rows(f, rows)
        self.assertAlmostEqual(values[0].real, math.exp(0.5), places=12)
        self.assertAlmostEqual(values[1].real, math.e - 1.0, places=12)
        self.assertAlmostEqual(values[2].real, math.e, places=8)

    def test_grid(self):
        f = exp_function()
        x, y = np.array([0.0, 1.0, 2.0]), np.array([-1.0, 1.0])
        grid = divided_difference_grid(f, [x, y])
        self.assertEqual(grid.shape, (3, 2))
        for i in range(3):
            for j in range(2):
                self.assertAlmostEqual(grid[i, j], divided_difference(f, [x[i], y[j]]), places=12)

    def test_close_nodes_against_closed_forms(self):
        # exp: e^x0 ((e^h - 1) / h)^n / n! on x0 + kh;  1/x: (-1)^n / prod x_k
        cases = [(exp_function(), 0.0), (exp_function(), 1.0), (power_function(-1.0), 0.3)]
        for f, x0 in cases:
            for n in (1, 2, 3, 4):
                for h in (1e-7, 2e-6, 1e-5, 1e-3, 2e-2, 1e-1):
                    nodes = x0 + h * np.arange(n + 1)
                    if x0 == 0.3:
                        exact = (-1.0) ** n / float(np.prod(nodes))
                    else:
                        exact = math.exp(x0) * (math.expm1(h) / h) ** n / math.factorial(n)
                    with self.subTest(f=f.name, x0=x0, n=n, h=h):
                        for value in (divided_difference(f, nodes), divided_difference_opitz(f, nodes),
                                      divided_difference_rows(f, nodes[None, ::-1])[0]):
                            self.assertLess(abs(value - exact), 1e-9 * abs(exact))

    def test_permutation_symmetry(self):
        rng = draws()[0][1]
        functions = [exp_function(), sin_function(), rational_function()]
        for _ in range(100):
            f = functions[rng.integers(len(functions))]
            n = int(rng.integers(1, 5))
            nodes = rng.uniform(-2.0, 2.0, n + 1)
            shuffled = nodes[rng.permutation(n + 1)]
            value = divided_difference(f, nodes)
            self.assertLessEqual(abs(divided_difference(f, shuffled) - value), 1e-9 * max(1.0, abs(value)))
            rows = divided_difference_rows(f, np.stack([nodes, shuffled]))
            self.assertLessEqual(abs(rows[1] - rows[0]), 1e-9 * max(1.0, abs(rows[0])))

    def test_confluent_limit_rate(self):
        f = exp_function()
        hs = 10.0 ** -np.arange(1, 6)
        errors = [abs(divided_difference(f, [0.3, 0.3 + h]) - math.exp(0.3)) for h in hs]
        slope = np.polyfit(np.log(hs), np.log(errors), 1)[0]
        self.assertAlmostEqual(slope, 1.0, delta=0.2)

    def test_leibniz_rule(self):
        f, g = exp_function(0.7), sin_function(1.3)
        fg = f * g
        for _, rng in draws():
            for n in (1, 2, 3):
                nodes = rng.uniform(-1.5, 1.5, n + 1)
                lhs = divided_difference(fg, nodes)
                rhs = sum(divided_difference(f, nodes[:l + 1]) * divided_difference(g, nodes[l:])
                          for l in range(n + 1))
                self.assertLessEqual(abs(lhs - rhs), 1e-9 * max(1.0, abs(lhs)))


if __name__ == '__main__':
    unittest.main()
