#!/usr/bin/env python3
"""
Unit tests for layouts, states, channels, isometries and random generation
"""

import sys
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent / "scripts"))

import linalg
from entropy_lib import (
    ContractViolation,
    InsufficientDimensionError,
    LayoutError,
    NotPSDError,
    PreconditionError,
)
from quantum import (
    Channel,
    Isometry,
    PureState,
    State,
    SystemLayout,
    apply_channel,
    apply_isometry,
    basis_state,
    embed,
    fresh_label,
    make_rng,
    maximally_mixed,
    pinching,
    projective_measurement_map,
    purify,
    random_channel,
    random_isometry,
    random_pure,
    random_state,
)
from test_config import TestConfig, TestFixtures


class TestSystemLayout(unittest.TestCase):

    def test_parse_plain_dims(self):
        layout = SystemLayout.parse("2,3,4")
        self.assertEqual(layout.labels, ("A", "B", "C"))
        self.assertEqual(layout.total_dim, 24)

    def test_parse_labeled(self):
        layout = SystemLayout.parse("A:2, E:3")
        self.assertEqual(layout.factors, (("A", 2), ("E", 3)))
        self.assertEqual(str(layout), "A:2,E:3")

    def test_parse_errors(self):
        for profile in ("", "2,x", "A:2,A:2", "A:0"):
            with self.subTest(profile=profile):
                with self.assertRaises(LayoutError):
                    SystemLayout.parse(profile)

    def test_select_without_and_dims(self):
        layout = SystemLayout.of(A=2, B=3, C=5)
        self.assertEqual(layout.select(["C", "A"]).dims, (5, 2))
        self.assertEqual(layout.without(["B"]).labels, ("A", "C"))
        self.assertEqual(layout.dim_of(["A", "C"]), 10)
        self.assertEqual(layout.with_dims({"B": 4}).dims, (2, 4, 5))
        with self.assertRaises(LayoutError):
            layout.without(["Z"])

    def test_trivial_layout(self):
        self.assertEqual(SystemLayout().total_dim, 1)
        self.assertEqual(str(SystemLayout()), "<trivial>")

    def test_fresh_label(self):
        layout = SystemLayout.of(R=2, R1=2)
        self.assertEqual(fresh_label(layout), "R2")


class TestRandomness(unittest.TestCase):

    def test_same_stream_same_draws(self):
        a = make_rng(5, 1, 2).normal(size=4)
        b = make_rng(5, 1, 2).normal(size=4)
        np.testing.assert_array_equal(a, b)

    def test_streams_independent_of_order(self):
        later = make_rng(5, 1, 3).normal(size=4)
        make_rng(5, 1, 2).normal(size=100)
        np.testing.assert_array_equal(later, make_rng(5, 1, 3).normal(size=4))
        self.assertFalse(np.array_equal(later, make_rng(5, 1, 2).normal(size=4)))

    def test_generator_passthrough(self):
        rng = make_rng(1)
        self.assertIs(make_rng(rng), rng)


class TestStates(unittest.TestCase):

    def test_rejects_negative_eigenvalue(self):
        with self.assertRaises(NotPSDError):
            State(SystemLayout.of(A=2), np.diag([1.1, -0.1]))

    def test_rejects_trace_above_one(self):
        with self.assertRaises(PreconditionError):
            State(SystemLayout.of(A=2), np.diag([0.9, 0.9]))

    def test_rejects_zero(self):
        with self.assertRaises(PreconditionError):
            State(SystemLayout.of(A=2), np.zeros((2, 2)))

    def test_layout_mismatch(self):
        with self.assertRaises(LayoutError):
            State(SystemLayout.of(A=3), np.eye(2) / 2)

    def test_matrix_is_read_only(self):
        rho = maximally_mixed(SystemLayout.of(A=2))
        with self.assertRaises(ValueError):
            rho.matrix[0, 0] = 1.0

    def test_subnormalized_allowed(self):
        rho = maximally_mixed(SystemLayout.of(A=2), trace=0.5)
        self.assertFalse(rho.is_normalized())
        self.assertAlmostEqual(rho.normalized().trace, 1.0, places=14)

    def test_marginal_reorders(self):
        rho = TestFixtures.mixed_product(2, 3)
        marginal = rho.marginal(["B"])
        np.testing.assert_allclose(marginal.matrix, np.diag([1.0, 0.0, 0.0]), atol=1e-14)
        swapped = rho.reorder(["B", "A"])
        self.assertEqual(swapped.layout.labels, ("B", "A"))

    def test_bell_marginal_maximally_mixed(self):
        np.testing.assert_allclose(TestFixtures.bell_state().marginal(["A"]).matrix, np.eye(2) / 2, atol=1e-14)

    def test_mix(self):
        zero = basis_state(SystemLayout.of(A=2)).to_state()
        one = basis_state(SystemLayout.of(A=2), 1).to_state()
        np.testing.assert_allclose(zero.mix(one, 0.25).matrix, np.diag([0.75, 0.25]), atol=1e-15)

    def test_pure_state_norm(self):
        with self.assertRaises(PreconditionError):
            PureState(SystemLayout.of(A=2), [1.0, 1.0])
        with self.assertRaises(LayoutError):
            PureState(SystemLayout.of(A=2), [1.0, 0.0, 0.0])

    def test_apply_local_replaces_factor(self):
        psi = PureState(TestFixtures.qubit_pair(), np.kron([1.0, 0.0], [1.0, 0.0]))
        flip = np.array([[0.0, 1.0], [1.0, 0.0], [0.0, 0.0]])
        out = psi.apply_local(flip, ["A"], SystemLayout.of(A2=3))
        self.assertEqual(out.layout.labels, ("A2", "B"))
        np.testing.assert_allclose(out.marginal(["A2"]).matrix, np.diag([0.0, 1.0, 0.0]), atol=1e-15)


class TestPurification(unittest.TestCase):

    def test_marginal_recovers_state(self):
        rho = random_state(TestFixtures.qubit_pair(), rank=3, seed=TestConfig.SEED)
        psi = purify(rho)
        self.assertEqual(psi.layout.labels, ("A", "B", "R"))
        self.assertEqual(psi.layout.dims[-1], 3)
        np.testing.assert_allclose(psi.marginal(["A", "B"]).matrix, rho.matrix, atol=1e-12)

    def test_subnormalized_purification(self):
        rho = maximally_mixed(SystemLayout.of(A=2), trace=0.4)
        psi = purify(rho, "E", 3)
        self.assertAlmostEqual(psi.norm_squared, 0.4, places=12)

    def test_purifier_too_small(self):
        with self.assertRaises(InsufficientDimensionError):
            purify(maximally_mixed(SystemLayout.of(A=3)), "R", 2)


class TestChannels(unittest.TestCase):

    def setUp(self):
        self.rng = make_rng(TestConfig.SEED, 20)

    def test_random_channel_trace_preserving(self):
        layout = SystemLayout.of(B=2)
        channel = random_channel(layout, SystemLayout.of(D=3), 2, self.rng)
        rho = random_state(TestFixtures.qubit_pair(), seed=self.rng)
        out = apply_channel(channel, rho, ["B"])
        self.assertEqual(out.layout.factors, (("A", 2), ("D", 3)))
        self.assertAlmostEqual(out.trace, rho.trace, places=12)
        np.testing.assert_allclose(out.marginal(["A"]).matrix, rho.marginal(["A"]).matrix, atol=1e-12)

    def test_trace_non_increasing_channel(self):
        layout = SystemLayout.of(A=3)
        channel = random_channel(layout, layout, 2, self.rng, trace_preserving=False)
        self.assertLessEqual(apply_channel(channel, maximally_mixed(layout)).trace, 1.0 + 1e-12)

    def test_trace_increasing_rejected(self):
        with self.assertRaises(ContractViolation):
            Channel(SystemLayout.of(A=1), SystemLayout.of(A=1), (np.array([[2.0]]),), False)

    def test_false_trace_preserving_flag(self):
        with self.assertRaises(ContractViolation):
            Channel(SystemLayout.of(A=2), SystemLayout.of(A=2), (np.diag([1.0, 0.0]),), True)

    def test_depolarizing(self):
        layout = SystemLayout.of(A=2)
        out = apply_channel(Channel.depolarizing(layout), basis_state(layout).to_state())
        np.testing.assert_allclose(out.matrix, np.eye(2) / 2, atol=1e-15)

    def test_partial_trace_channel_matches_marginal(self):
        rho = random_state(SystemLayout.of(A=2, B=3, C=2), seed=self.rng)
        channel = Channel.partial_trace(rho.layout, ["B"])
        out = apply_channel(channel, rho, ["A", "B", "C"])
        np.testing.assert_allclose(out.matrix, rho.marginal(["A", "C"]).matrix, atol=1e-12)

    def test_output_label_collision(self):
        layout = SystemLayout.of(B=2)
        channel = Channel(layout, SystemLayout.of(A=2), (np.eye(2),), True)
        with self.assertRaises(LayoutError):
            apply_channel(channel, TestFixtures.bell_state(), ["B"])

    def test_measurement_map_dephases(self):
        layout = SystemLayout.of(A=2)
        channel = projective_measurement_map(np.eye(2), layout, "X")
        plus = PureState(layout, np.array([1.0, 1.0]) / np.sqrt(2)).to_state()
        out = apply_channel(channel, plus)
        self.assertEqual(out.layout.labels, ("X",))
        np.testing.assert_allclose(out.matrix, np.eye(2) / 2, atol=1e-15)

    def test_measurement_basis_must_be_orthonormal(self):
        with self.assertRaises(ContractViolation):
            projective_measurement_map(np.ones((2, 2)), SystemLayout.of(A=2))

    def test_pinching_keeps_trace(self):
        layout = SystemLayout.of(A=2)
        rho = random_state(layout, seed=self.rng)
        out = apply_channel(pinching(np.diag([1.0, 0.0]), layout), rho)
        self.assertAlmostEqual(out.matrix[0, 1], 0.0, places=14)
        self.assertAlmostEqual(out.trace, rho.trace, places=12)


class TestIsometries(unittest.TestCase):

    def setUp(self):
        self.rng = make_rng(TestConfig.SEED, 30)

    def test_random_isometry_is_isometric(self):
        v = random_isometry(2, 5, self.rng)
        self.assertLess(linalg.unitarity_error(v.matrix), 1e-12)
        np.testing.assert_allclose(v.projector @ v.projector, v.projector, atol=1e-12)

    def test_too_small_target(self):
        with self.assertRaises(InsufficientDimensionError):
            random_isometry(3, 2, self.rng)

    def test_non_isometry_rejected(self):
        with self.assertRaises(ContractViolation):
            Isometry(np.ones((2, 2)), SystemLayout.of(A=2), SystemLayout.of(A=2))

    def test_pull_back_inverts_isometry(self):
        source = SystemLayout.of(B=2)
        target = SystemLayout.of(B=4)
        v = random_isometry(2, 4, self.rng, source, target)
        rho = random_state(TestFixtures.qubit_pair(), seed=self.rng)
        lifted = apply_isometry(v, rho, ["B"])
        self.assertEqual(lifted.layout.dims, (2, 4))
        back = apply_channel(v.pull_back_channel(), lifted, ["B"])
        np.testing.assert_allclose(back.matrix, rho.matrix, atol=1e-12)

    def test_embed(self):
        rho = TestFixtures.bell_state()
        bigger = embed(rho, SystemLayout.of(A=3, B=2))
        self.assertEqual(bigger.dim, 6)
        self.assertAlmostEqual(bigger.trace, 1.0, places=14)
        np.testing.assert_allclose(bigger.marginal(["B"]).matrix, np.eye(2) / 2, atol=1e-14)


class TestRandomStates(unittest.TestCase):

    def test_random_pure_normalized_and_seeded(self):
        layout = TestFixtures.qubit_pair()
        a = random_pure(layout, 3)
        self.assertAlmostEqual(a.norm_squared, 1.0, places=12)
        np.testing.assert_array_equal(a.amplitudes, random_pure(layout, 3).amplitudes)

    def test_random_state_rank(self):
        rho = random_state(SystemLayout.of(A=4), rank=2, seed=TestConfig.SEED)
        self.assertEqual(rho.rank(), 2)
        self.assertTrue(rho.is_normalized())

    def test_min_scale(self):
        rho = random_state(SystemLayout.of(A=2), seed=TestConfig.SEED, min_scale=0.5)
        self.assertGreater(rho.trace, 0.5)
        self.assertLessEqual(rho.trace, 1.0)

    def test_invalid_min_scale(self):
        with self.assertRaises(ContractViolation):
            random_state(SystemLayout.of(A=2), seed=1, min_scale=1.5)


if __name__ == "__main__":
    unittest.main()
