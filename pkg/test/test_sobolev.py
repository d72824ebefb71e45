#!/usr/bin/env python

import logging
import math
import unittest

import numpy as np
import scipy.special

from moilab.exceptions import DimensionMismatch, InsufficientDims, NotPositive, Unbounded
from moilab.functions import exp_function, gauss_function, rational_function
from moilab.sobolev import (
    WeightOperator, delta_power, estimate_analytic_order, flat_adjoint, op_norm, pairing,
    s_beta_seminorm, sobolev_norm, t_beta_seminorm, truncation_family, weighted_sup_norm,
)
from moilab.spectral import HermitianOperator
from . import draws, hermitian

logging.basicConfig(level=logging.WARNING)


class WeightOperatorTest(unittest.TestCase):

    def test_rejects_nonpositive(self):
        with self.assertRaises(NotPositive):
            WeightOperator.diagonal([1.0, 0.0])

    def test_dense_power(self):
        for _, rng in draws():
            Q = np.linalg.qr(hermitian(3, rng) + 1j * hermitian(3, rng))[0]
            M = Q @ np.diag([1.0, 2.0, 4.0]) @ Q.conj().T
            W = WeightOperator((M + M.conj().T) / 2)
            root = W.power(0.5)
            np.testing.assert_allclose(root @ root, M, atol=1e-12)
            np.testing.assert_allclose(W.sandwich(np.eye(3), 1.0, -1.0), np.eye(3), atol=1e-12)

    def test_dimension_check(self):
        W = WeightOperator.diagonal([1.0, 2.0])
        with self.assertRaises(DimensionMismatch):
            op_norm(np.eye(3), 0.0, 0.0, W)


class NormTest(unittest.TestCase):

    def test_sobolev_norm(self):
        W = WeightOperator.diagonal([2.0, 3.0])
        self.assertAlmostEqual(sobolev_norm([1.0, 0.0], 1.0, W), 2.0)
        self.assertAlmostEqual(sobolev_norm([0.0, 1.0], -1.0, W), 1.0 / 3.0)

    def test_pairing(self):
        W = WeightOperator.diagonal([1.0, 2.0, 5.0])
        for _, rng in draws():
            u = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            self.assertAlmostEqual(pairing(u, v, 1.5, W), np.vdot(v, u), places=10)

    def test_op_norm_of_weight(self):
        W = WeightOperator.diagonal(np.arange(1.0, 11.0))
        self.assertAlmostEqual(op_norm(np.eye(10), 0.0, 1.0, W), 1.0)
        self.assertAlmostEqual(op_norm(W.power(1.0), 0.0, 1.0, W), 1.0)
        self.assertAlmostEqual(op_norm(W.power(1.0), 0.0, 0.0, W), 10.0)

    def test_submultiplicative(self):
        for _, rng in draws():
            W = WeightOperator.diagonal(rng.uniform(1.0, 5.0, 5))
            A = hermitian(5, rng) + 1j * hermitian(5, rng)
            B = hermitian(5, rng) + 1j * hermitian(5, rng)
            for s, r, t in [(0.0, 0.0, 0.0), (0.5, -1.0, 1.5), (-1.0, 0.5, -0.5)]:
                bound = op_norm(A, s, r, W) * op_norm(B, s + r, t, W)
                self.assertLessEqual(op_norm(A @ B, s, r + t, W), bound * (1 + 1e-12) + 1e-9)

    def test_interpolation(self):
        W = WeightOperator.diagonal(np.arange(1.0, 7.0))
        for _, rng in draws():
            A = hermitian(6, rng) + 1j * hermitian(6, rng)
            n0, n1 = op_norm(A, -1.0, 0.5, W), op_norm(A, 1.0, 0.5, W)
            for theta in (0.25, 0.5, 0.75):
                s = (1 - theta) * -1.0 + theta * 1.0
                self.assertLessEqual(op_norm(A, s, 0.5, W), n0 ** (1 - theta) * n1 ** theta * (1 + 1e-9))

    def test_flat_adjoint(self):
        W = WeightOperator.diagonal([1.0, 2.0])
        A = np.array([[0.0, 1.0], [0.0, 0.0]])
        np.testing.assert_allclose(flat_adjoint(A, 0.0, 1.0, W), [[0.0, 0.0], [0.25, 0.0]])

    def test_flat_adjoint_inner_products(self):
        W = WeightOperator.diagonal([1.0, 2.0, 3.0])
        for _, rng in draws():
            A = hermitian(3, rng) + 1j * hermitian(3, rng)
            x = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            y = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            s, r = 0.5, 1.0
            lhs = np.vdot(W.power(s) @ y, W.power(s) @ (A @ x))
            rhs = np.vdot(W.power(s + r) @ (flat_adjoint(A, s, r, W) @ y), W.power(s + r) @ x)
            self.assertAlmostEqual(lhs, rhs, places=10)

    def test_delta_power(self):
        B = np.diag([1.0, 0.0])
        X = np.array([[0.0, 1.0], [0.0, 0.0]])
        np.testing.assert_allclose(delta_power(B, X, 1), [[0.0, 1.0], [0.0, 0.0]])
        np.testing.assert_allclose(delta_power(B, X, 3), [[0.0, 1.0], [0.0, 0.0]])
        np.testing.assert_allclose(delta_power(B, X, 0), X)
        with self.assertRaises(ValueError):
            delta_power(B, X, -1)


class SeminormTest(unittest.TestCase):

    def test_weighted_sup(self):
        H = HermitianOperator.diagonal([0.0, 1.0])
        self.assertAlmostEqual(weighted_sup_norm(exp_function(), H, 0.0), math.e)
        self.assertAlmostEqual(weighted_sup_norm(exp_function(), H, 1.0), math.e / math.sqrt(2.0))

    def test_s_beta_of_rational(self):
        self.assertAlmostEqual(s_beta_seminorm(rational_function(), -2.0, 0), 1.0, places=6)

    def test_s_beta_unbounded(self):
        with self.assertRaises(Unbounded):
            s_beta_seminorm(exp_function(), 0.0, 0)

    def test_t_beta_gauss(self):
        expected = math.exp(0.5) * float(scipy.special.k0(0.5))
        self.assertAlmostEqual(t_beta_seminorm(gauss_function(), 0.0, 0), expected, places=6)
        self.assertAlmostEqual(expected, 1.524109, places=5)

    def test_t_beta_on_interval(self):
        value = t_beta_seminorm(exp_function(), 0.0, 0, interval=(0.0, 1.0))
        self.assertGreater(value, (math.e - 1.0) / math.sqrt(2.0))
        self.assertLess(value, math.e - 1.0)


class AnalyticOrderTest(unittest.TestCase):

    def test_families(self):
        for power in (0.0, 1.0, 2.0):
            family = truncation_family('diag_linear', [50, 100, 200, 400], {'power': power})
            self.assertAlmostEqual(estimate_analytic_order(family).order, power, delta=0.05)

    def test_insufficient_dims(self):
        family = truncation_family('diag_linear', [10, 20, 40])
        with self.assertRaises(InsufficientDims):
            estimate_analytic_order(family)

    def test_unknown_family(self):
        with self.assertRaises(ValueError):
            truncation_family('laplacian', [10])
        with self.assertRaises(ValueError):
            truncation_family('diag_linear', [10], {'bogus': 1.0})


if __name__ == '__main__':
    unittest.main()
