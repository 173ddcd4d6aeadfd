#!/usr/bin/env python3
"""
Unit tests for the dense Hermitian linear-algebra kernels
"""

import math
import sys
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent / "scripts"))

import linalg
from entropy_lib import ContractViolation, LayoutError, NotPSDError, NumericalFailure
from quantum import SystemLayout, make_rng
from test_config import TestConfig


class TestHermitianChecks(unittest.TestCase):

    def test_require_hermitian_symmetrizes(self):
        m = np.array([[1.0, 2.0 + 1e-14j], [2.0, 3.0]])
        h = linalg.require_hermitian(m)
        self.assertEqual(linalg.hermiticity_error(h), 0.0)

    def test_non_hermitian_rejected(self):
        with self.assertRaises(ContractViolation):
            linalg.require_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_non_square_rejected(self):
        with self.assertRaises(ContractViolation):
            linalg.require_hermitian(np.zeros((2, 3)))
        self.assertFalse(linalg.is_hermitian(np.zeros((2, 3))))


class TestEigensolvers(unittest.TestCase):
    """LAPACK and Jacobi back ends satisfy the same post-conditions"""

    def setUp(self):
        self.rng = make_rng(TestConfig.SEED, 1)

    def check_decomposition(self, m, values, vectors):
        self.assertTrue(np.all(np.diff(values) <= 1e-12), "eigenvalues must be descending")
        self.assertLess(linalg.unitarity_error(vectors), 1e-10)
        residual = np.linalg.norm(m @ vectors - vectors * values)
        self.assertLessEqual(residual, 1e-10 * max(1.0, np.linalg.norm(m)))

    def test_lapack_random(self):
        for n in (1, 2, 5, 9):
            m = linalg.random_hermitian(n, self.rng)
            self.check_decomposition(m, *linalg.herm_eig(m))

    def test_jacobi_random(self):
        for n in (1, 2, 4, 7):
            m = linalg.random_hermitian(n, self.rng)
            self.check_decomposition(m, *linalg.herm_eig(m, method="jacobi"))

    def test_backends_agree(self):
        m = linalg.random_hermitian(6, self.rng)
        lapack, _ = linalg.herm_eig(m)
        jacobi, _ = linalg.jacobi_eig(m)
        np.testing.assert_allclose(lapack, jacobi, atol=1e-10)

    def test_degenerate_spectrum(self):
        u = np.linalg.qr(self.rng.normal(size=(4, 4)) + 1j * self.rng.normal(size=(4, 4)))[0]
        m = u @ np.diag([2.0, 2.0, -1.0, -1.0]) @ u.conj().T
        values, vectors = linalg.herm_eig(m, method="jacobi")
        np.testing.assert_allclose(values, [2.0, 2.0, -1.0, -1.0], atol=1e-10)
        self.check_decomposition(linalg.hermitian_part(m), values, vectors)

    def test_jacobi_sweep_cap(self):
        m = linalg.random_hermitian(6, self.rng)
        with self.assertRaises(NumericalFailure) as ctx:
            linalg.jacobi_eig(m, max_sweeps=0)
        self.assertIsNotNone(ctx.exception.residual)

    def test_unknown_method(self):
        with self.assertRaises(ContractViolation):
            linalg.herm_eig(np.eye(2), method="power")


class TestSpectralFunctions(unittest.TestCase):

    def setUp(self):
        self.rng = make_rng(TestConfig.SEED, 2)

    def test_matrix_sqrt_squares_back(self):
        g = self.rng.normal(size=(4, 4)) + 1j * self.rng.normal(size=(4, 4))
        m = g @ g.conj().T
        root = linalg.matrix_sqrt(m)
        np.testing.assert_allclose(root @ root, m, atol=1e-9)

    def test_matrix_sqrt_rejects_negative(self):
        with self.assertRaises(NotPSDError):
            linalg.matrix_sqrt(np.diag([1.0, -0.1]))

    def test_matrix_sqrt_clamps_rounding(self):
        root = linalg.matrix_sqrt(np.diag([1.0, -1e-13]))
        np.testing.assert_allclose(root, np.diag([1.0, 0.0]), atol=1e-12)

    def test_matrix_sqrt_relative_floor(self):
        m = np.diag([1.0, 1e-17, 0.25])
        self.assertAlmostEqual(linalg.matrix_sqrt(m)[1, 1].real, math.sqrt(1e-17), places=15)
        root = linalg.matrix_sqrt(m, relative_floor=1e-15)
        self.assertAlmostEqual(abs(root[1, 1]), 0.0, places=15)
        self.assertAlmostEqual(root[2, 2].real, 0.5, places=14)

    def test_positive_part_trace(self):
        self.assertAlmostEqual(linalg.positive_part_trace(np.diag([0.5, -0.25, 0.1])), 0.6, places=12)

    def test_project_psd(self):
        p = linalg.project_psd(np.diag([0.5, -0.25]))
        np.testing.assert_allclose(p, np.diag([0.5, 0.0]), atol=1e-14)

    def test_trace_norm(self):
        self.assertAlmostEqual(linalg.trace_norm(np.diag([0.5, -0.25])), 0.75, places=12)

    def test_support_and_rank(self):
        v = np.array([1.0, 1.0j]) / np.sqrt(2)
        m = 0.3 * np.outer(v, v.conj())
        values, vectors = linalg.support(m)
        self.assertEqual(values.size, 1)
        np.testing.assert_allclose(linalg.reconstruct(values, vectors), m, atol=1e-14)
        self.assertEqual(linalg.rank(np.zeros((3, 3))), 0)


class TestTensorFactors(unittest.TestCase):

    def setUp(self):
        self.rng = make_rng(TestConfig.SEED, 3)

    def test_partial_trace_of_product(self):
        a = linalg.random_hermitian(2, self.rng)
        b = np.diag([0.25, 0.75, 0.0])
        ab = linalg.kron(a, b)
        np.testing.assert_allclose(linalg.partial_trace_dims(ab, [2, 3], [1]), a, atol=1e-14)
        np.testing.assert_allclose(linalg.partial_trace_dims(ab, [2, 3], [0]), np.trace(a) * b, atol=1e-14)

    def test_partial_trace_with_layout(self):
        layout = SystemLayout.of(("A", 2), ("B", 2), ("C", 3))
        m = linalg.kron_all([np.eye(2), np.diag([1.0, 0.0]), np.eye(3) / 3])
        reduced, kept = linalg.partial_trace(m, layout, ["A", "C"])
        self.assertEqual(kept.labels, ("B",))
        np.testing.assert_allclose(reduced, np.diag([2.0, 0.0]), atol=1e-14)

    def test_trace_all_factors(self):
        m = linalg.kron(np.eye(2), np.eye(2))
        self.assertEqual(linalg.partial_trace_dims(m, [2, 2], [0, 1]).shape, (1, 1))

    def test_partial_trace_shape_mismatch(self):
        with self.assertRaises(LayoutError):
            linalg.partial_trace_dims(np.eye(5), [2, 2], [0])

    def test_permute_systems_swaps_kron(self):
        a = linalg.random_hermitian(2, self.rng)
        b = linalg.random_hermitian(3, self.rng)
        swapped = linalg.permute_systems(linalg.kron(a, b), [2, 3], [1, 0])
        np.testing.assert_allclose(swapped, linalg.kron(b, a), atol=1e-14)

    def test_permute_vector(self):
        v = np.kron([1.0, 0.0], [0.0, 1.0, 0.0])
        np.testing.assert_allclose(linalg.permute_vector(v, [2, 3], [1, 0]), np.kron([0.0, 1.0, 0.0], [1.0, 0.0]))

    def test_invalid_permutation(self):
        with self.assertRaises(LayoutError):
            linalg.permute_systems(np.eye(4), [2, 2], [0, 0])

    def test_embed_top_left(self):
        out = linalg.embed_top_left(np.ones((2, 2)), 4, offset=1)
        self.assertEqual(out[1, 2], 1.0)
        self.assertEqual(out[0, 0], 0.0)
        self.assertEqual(np.count_nonzero(out), 4)


if __name__ == "__main__":
    unittest.main()
