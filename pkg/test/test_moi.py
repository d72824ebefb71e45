#!/usr/bin/env python

import logging
import math
import unittest

import numpy as np
import scipy.linalg

from moilab.exceptions import BadIndex, DimensionMismatch, OrderExceeded
from moilab.functions import exp_function, poly_function, rational_function
from moilab.moi import (
    IDENTITY_KINDS, MoiProblem, derivative_identity_residual, identity_residual, identity_sides,
    jlo_equality_residual, moi_evaluate, moi_norm_bound_check, moi_trace, simplex_rule,
    telescoping_levels,
)
from moilab.sobolev import WeightOperator
from . import draws, hermitian, matrices, spectral_norm

logging.basicConfig(level=logging.WARNING)


class MoiEvaluateTest(unittest.TestCase):

    def test_order_zero(self):
        for _, rng in draws():
            H = hermitian(5, rng)
            T = moi_evaluate(MoiProblem.divided(exp_function(), H, []))
            np.testing.assert_allclose(T, scipy.linalg.expm(H), atol=1e-12)

    def test_square_symbol(self):
        f = poly_function([0.0, 0.0, 1.0])
        for _, rng in draws():
            H = hermitian(5, rng)
            X = matrices(1, 5, rng)[0]
            T = moi_evaluate(MoiProblem.divided(f, H, [X]))
            np.testing.assert_allclose(T, H @ X + X @ H, atol=1e-12)

    def test_callable_symbols(self):
        for _, rng in draws():
            A, B = hermitian(4, rng), hermitian(4, rng)
            X = matrices(1, 4, rng)[0]
            left = moi_evaluate(MoiProblem(lambda x0, x1: x0, (A, B), (X,)))
            right = moi_evaluate(MoiProblem(lambda x0, x1: x1, (A, B), (X,)))
            ones = moi_evaluate(MoiProblem(lambda x0, x1: np.ones_like(x0), (A, B), (X,)))
            np.testing.assert_allclose(left, A @ X, atol=1e-12)
            np.testing.assert_allclose(right, X @ B, atol=1e-12)
            np.testing.assert_allclose(ones, X, atol=1e-12)

    def test_commuting_oracle(self):
        f = exp_function()
        lam = np.array([0.3, 0.3, -1.0, 2.0])
        d1, d2 = np.array([1.0, 2.0, 3.0, 4.0]), np.array([1j, 1.0, -1.0, 0.5])
        T = moi_evaluate(MoiProblem.divided(f, np.diag(lam), [np.diag(d1), np.diag(d2)]))
        np.testing.assert_allclose(T, np.diag(np.exp(lam) / 2.0 * d1 * d2), atol=1e-12)

    def test_identity_slot(self):
        f = exp_function()
        for _, rng in draws():
            H = hermitian(4, rng)
            X = matrices(1, 4, rng)[0]
            marked = moi_evaluate(MoiProblem.divided(f, H, [None, X]))
            explicit = moi_evaluate(MoiProblem.divided(f, H, [np.eye(4), X]))
            np.testing.assert_allclose(marked, explicit, atol=1e-12)

    def test_multilinear(self):
        f = rational_function()
        for _, rng in draws():
            H = hermitian(4, rng, 2.0)
            X, Y, Z = matrices(3, 4, rng)
            mixed = moi_evaluate(MoiProblem.divided(f, H, [X, 2.0 * Y - 1j * Z]))
            split = (2.0 * moi_evaluate(MoiProblem.divided(f, H, [X, Y]))
                     - 1j * moi_evaluate(MoiProblem.divided(f, H, [X, Z])))
            np.testing.assert_allclose(mixed, split, atol=1e-12)

    def test_linear_in_symbol(self):
        phi = lambda x0, x1: np.exp(x0 - x1)
        psi = lambda x0, x1: 1.0 / (1.0 + x0 ** 2 + x1 ** 2)
        alpha, beta = 2.0 - 0.5j, -1.5 + 1j
        for _, rng in draws():
            A, B = hermitian(4, rng), hermitian(4, rng)
            X = matrices(1, 4, rng)[0]
            mixed = moi_evaluate(MoiProblem(lambda x0, x1: alpha * phi(x0, x1) + beta * psi(x0, x1), (A, B), (X,)))
            split = (alpha * moi_evaluate(MoiProblem(phi, (A, B), (X,)))
                     + beta * moi_evaluate(MoiProblem(psi, (A, B), (X,))))
            np.testing.assert_allclose(mixed, split, rtol=1e-10, atol=1e-12)

    def test_symbol_only_seen_on_spectra(self):
        phi = lambda x0, x1: np.cos(x0) * x1
        for _, rng in draws():
            A, B = hermitian(4, rng), hermitian(4, rng)
            X = matrices(1, 4, rng)[0]
            spectrum = np.linalg.eigvalsh(A)
            changed = lambda x0, x1: phi(x0, x1) + 5.0 * np.prod([x0 - l for l in spectrum], axis=0) * np.sin(x1)
            np.testing.assert_allclose(moi_evaluate(MoiProblem(changed, (A, B), (X,))),
                                       moi_evaluate(MoiProblem(phi, (A, B), (X,))), atol=1e-9)

    def test_trace(self):
        f = exp_function()
        for _, rng in draws():
            H = hermitian(4, rng)
            p = MoiProblem.divided(f, H, matrices(3, 4, rng))
            self.assertAlmostEqual(moi_trace(p), np.trace(moi_evaluate(p)), places=10)

    def test_dimension_mismatch(self):
        H = np.eye(3)
        with self.assertRaises(DimensionMismatch):
            MoiProblem(exp_function(), (H, H), ())
        with self.assertRaises(DimensionMismatch):
            MoiProblem.divided(exp_function(), H, [np.eye(2)])

    def test_order_exceeded(self):
        p = MoiProblem.divided(exp_function(max_order=1), np.eye(2), [np.eye(2), np.eye(2)])
        with self.assertRaises(OrderExceeded):
            moi_evaluate(p)


class IdentityTest(unittest.TestCase):

    def test_identities(self):
        f = exp_function()
        for _, rng in draws():
            n = 2
            hs = [hermitian(4, rng, 2.0) for _ in range(n + 1)]
            xs = matrices(n, 4, rng)
            a = matrices(1, 4, rng)[0]
            pair = (hermitian(4, rng), hermitian(4, rng))
            for kind in IDENTITY_KINDS:
                b = hermitian(4, rng, 0.5) if kind == 'loewner' else a
                lhs, rhs = identity_sides(kind, f, hs, xs, a=b, pair=pair, j=1)
                scale = max(1.0, spectral_norm(lhs))
                self.assertLess(spectral_norm(lhs - rhs) / scale, 1e-9, kind)

    def test_bad_index(self):
        f = exp_function()
        H = np.eye(3)
        with self.assertRaises(BadIndex):
            identity_residual('middle', f, [H, H], [np.eye(3)], a=np.eye(3), j=1)
        with self.assertRaises(BadIndex):
            identity_residual('left', f, [H], [], a=np.eye(3))
        with self.assertRaises(BadIndex):
            identity_residual('perturbation', f, [H, H], [np.eye(3)], pair=(H, H), j=2)
        with self.assertRaises(ValueError):
            identity_residual('associativity', f, [H], [], a=np.eye(3))

    def test_derivative_identity(self):
        f = exp_function()
        for _, rng in draws():
            H = hermitian(6, rng)
            V = hermitian(6, rng)
            V = V / spectral_norm(V)
            for n in (1, 2):
                self.assertLess(derivative_identity_residual(f, H, V, n, 1e-2), 1e-6)

    def test_derivative_identity_slope(self):
        f = exp_function()
        rng = draws()[0][1]
        H = hermitian(6, rng)
        H = 0.9 * H / spectral_norm(H)
        V = hermitian(6, rng)
        V = 4.0 * V / spectral_norm(V)
        hs = [1e-2, 5e-3, 2.5e-3]
        residuals = [derivative_identity_residual(f, H, V, 1, h) for h in hs]
        slope = np.polyfit(np.log(hs), np.log(residuals), 1)[0]
        self.assertAlmostEqual(slope, 4.0, delta=0.3)

    def test_derivative_preconditions(self):
        H = np.eye(2)
        with self.assertRaises(ValueError):
            derivative_identity_residual(exp_function(), H, H, 4, 1e-2)
        with self.assertRaises(OrderExceeded):
            derivative_identity_residual(exp_function(max_order=2), H, H, 1, 1e-2)


class NormBoundTest(unittest.TestCase):

    def test_telescoping_levels(self):
        self.assertEqual(telescoping_levels(0.0, [1.0, 1.0], [0.5]), [1.0])
        self.assertEqual(telescoping_levels(1.0, [1.0, 2.0, 0.0], [0.5, 0.25]), [2.0, 4.5])

    def test_order_zero_is_sharp(self):
        W = WeightOperator.diagonal(np.arange(1.0, 9.0))
        p = MoiProblem.divided(rational_function(), np.diag(np.arange(1.0, 9.0)), [])
        report = moi_norm_bound_check(p, W, 0.0, [0.0], [])
        self.assertAlmostEqual(report.fitted_C, 1.0, places=12)
        self.assertEqual(report.levels_source, 'telescoping')

    def test_shapes(self):
        W = WeightOperator.diagonal([1.0, 2.0])
        p = MoiProblem.divided(exp_function(), np.eye(2), [np.eye(2)])
        with self.assertRaises(DimensionMismatch):
            moi_norm_bound_check(p, W, 0.0, [0.0], [0.0])

    def test_finite_bound(self):
        W = WeightOperator.diagonal(np.arange(1.0, 11.0))
        S = np.eye(10, k=1)
        p = MoiProblem.divided(rational_function(), np.diag(np.arange(1.0, 11.0)), [S + S.T])
        report = moi_norm_bound_check(p, W, 0.0, [0.0, 0.0], [0.0])
        self.assertTrue(math.isfinite(report.fitted_C))
        self.assertGreater(report.lhs, 0.0)


class SimplexTest(unittest.TestCase):

    def test_weights(self):
        # midpoint is exact on the collapsed weights only up to n = 2
        for n, rule in [(1, 'midpoint'), (2, 'midpoint'), (1, 'gauss'), (2, 'gauss'), (3, 'gauss')]:
            with self.subTest(n=n, rule=rule):
                t, w = simplex_rule(n, 12, rule)
                self.assertAlmostEqual(float(np.sum(w)), 1.0 / math.factorial(n), places=12)
                np.testing.assert_allclose(t.sum(axis=1), 1.0, atol=1e-12)

    def test_midpoint_convergence(self):
        rng = draws()[0][1]
        D = hermitian(4, rng)
        a_list = matrices(2, 4, rng)
        coarse = jlo_equality_residual(np.eye(4), a_list, D, 1, 64)
        fine = jlo_equality_residual(np.eye(4), a_list, D, 1, 128)
        self.assertAlmostEqual(coarse / fine, 4.0, delta=0.5)

    def test_gauss_rule(self):
        rng = draws()[0][1]
        D = hermitian(4, rng)
        for n in (1, 2):
            a_list = matrices(n + 1, 4, rng)
            self.assertLess(jlo_equality_residual(np.eye(4), a_list, D, n, 20, rule='gauss'), 1e-10)

    def test_preconditions(self):
        D = np.eye(2)
        with self.assertRaises(ValueError):
            jlo_equality_residual(D, [D, D], D, 1, 5)
        with self.assertRaises(DimensionMismatch):
            jlo_equality_residual(D, [D], D, 1, 16)


if __name__ == '__main__':
    unittest.main()
