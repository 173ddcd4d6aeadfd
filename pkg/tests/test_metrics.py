#!/usr/bin/env python3
"""
Unit tests for distances, fidelities, the epsilon ball and Uhlmann matching
"""

import math
import sys
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent / "scripts"))

from entropy_lib import InsufficientDimensionError, LayoutError, PreconditionError
from metrics import (
    Epsilon,
    as_epsilon,
    extension_match,
    fidelity,
    fidelity_deficit,
    gen_fidelity,
    gen_trace_distance,
    in_ball,
    pure_distance,
    purified_distance,
    states_equal,
    trace_distance,
    uhlmann_match,
)
from quantum import (
    PureState,
    State,
    SystemLayout,
    basis_state,
    make_rng,
    maximally_mixed,
    purify,
    random_pure,
    random_state,
)
from test_config import TestConfig, TestFixtures

QUTRIT = SystemLayout.of(A=3)


class TestEpsilon(unittest.TestCase):

    def test_range(self):
        self.assertEqual(float(Epsilon(0.0)), 0.0)
        for bad in (-0.1, 1.0, float("nan")):
            with self.subTest(eps=bad):
                with self.assertRaises(PreconditionError):
                    Epsilon(bad)

    def test_as_epsilon_passthrough(self):
        eps = Epsilon(0.2)
        self.assertIs(as_epsilon(eps), eps)
        self.assertEqual(as_epsilon(0.2), eps)

    def test_must_be_below_norm(self):
        rho = maximally_mixed(QUTRIT, trace=0.04)
        with self.assertRaises(PreconditionError):
            Epsilon(0.2).require_below_norm(rho)
        Epsilon(0.19).require_below_norm(rho)


class TestDistances(unittest.TestCase):

    def setUp(self):
        self.rng = make_rng(TestConfig.SEED, 40)

    def test_classical_fidelity(self):
        p = np.array([0.2, 0.5, 0.3])
        q = np.array([0.6, 0.1, 0.3])
        rho = State(QUTRIT, np.diag(p))
        tau = State(QUTRIT, np.diag(q))
        self.assertAlmostEqual(fidelity(rho, tau), float(np.sum(np.sqrt(p * q))), places=12)

    def test_pure_fidelity_is_overlap(self):
        layout = SystemLayout.of(A=2)
        zero = basis_state(layout)
        plus = PureState(layout, np.array([1.0, 1.0]) / math.sqrt(2.0))
        self.assertAlmostEqual(fidelity(zero, plus), 1.0 / math.sqrt(2.0), places=12)
        self.assertAlmostEqual(pure_distance(zero, plus), 1.0 / math.sqrt(2.0), places=12)

    def test_purified_distance_of_orthogonal_states(self):
        layout = SystemLayout.of(A=2)
        zero = basis_state(layout).to_state()
        one = basis_state(layout, 1).to_state()
        self.assertAlmostEqual(purified_distance(zero, one), 1.0, places=12)
        self.assertAlmostEqual(trace_distance(zero, one), 1.0, places=12)

    def test_generalized_fidelity_subnormalized(self):
        rho = maximally_mixed(QUTRIT, trace=0.5)
        tau = maximally_mixed(QUTRIT, trace=0.5)
        # F = 0.5, deficit term sqrt(0.25)
        self.assertAlmostEqual(gen_fidelity(rho, tau), 1.0, places=12)
        self.assertAlmostEqual(purified_distance(rho, tau), 0.0, places=6)

    def test_gen_trace_distance_counts_trace_difference(self):
        rho = maximally_mixed(QUTRIT)
        tau = maximally_mixed(QUTRIT, trace=0.7)
        self.assertAlmostEqual(gen_trace_distance(rho, tau), 0.3, places=12)
        self.assertAlmostEqual(trace_distance(rho, tau), 0.15, places=12)

    def test_sandwich_bounds(self):
        for _ in range(20):
            rho = random_state(QUTRIT, seed=self.rng, min_scale=0.3)
            tau = random_state(QUTRIT, seed=self.rng, min_scale=0.3)
            d = gen_trace_distance(rho, tau)
            p = purified_distance(rho, tau)
            self.assertLessEqual(d, p + 1e-12)
            self.assertLessEqual(p, math.sqrt(2.0 * d - d * d) + 1e-12)

    def test_symmetric_and_zero_on_equal(self):
        rho = random_state(QUTRIT, seed=self.rng)
        tau = random_state(QUTRIT, seed=self.rng)
        self.assertAlmostEqual(purified_distance(rho, tau), purified_distance(tau, rho), places=10)
        self.assertLessEqual(purified_distance(rho, rho), 1e-12)
        self.assertTrue(states_equal(rho, State(QUTRIT, rho.matrix.copy())))
        self.assertFalse(states_equal(rho, tau))

    def test_distance_to_itself_vanishes(self):
        for rank in (1, 2, 3):
            for scale in (None, 0.3):
                with self.subTest(rank=rank, scale=scale):
                    rho = random_state(QUTRIT, rank=rank, seed=self.rng, min_scale=scale)
                    self.assertLessEqual(purified_distance(rho, rho), 1e-12)
                    self.assertLessEqual(purified_distance(rho, State(QUTRIT, rho.matrix.copy())), 1e-12)
                    self.assertLessEqual(fidelity_deficit(rho, rho), 1e-24)

    def test_deficit_matches_closed_form_fidelity(self):
        for _ in range(10):
            rho = random_state(QUTRIT, seed=self.rng, min_scale=0.3)
            tau = random_state(QUTRIT, seed=self.rng, min_scale=0.3)
            self.assertAlmostEqual(fidelity_deficit(rho, tau), 1.0 - gen_fidelity(rho, tau), places=12)

    def test_pure_distance_to_itself_vanishes(self):
        for _ in range(5):
            phi = random_pure(SystemLayout.of(A=2, B=3), self.rng)
            self.assertLessEqual(pure_distance(phi, phi), 1e-12)
            rotated = PureState(phi.layout, 1j * phi.amplitudes)
            self.assertLessEqual(pure_distance(phi, rotated), 1e-12)

    def test_layout_mismatch(self):
        with self.assertRaises(LayoutError):
            purified_distance(maximally_mixed(QUTRIT), maximally_mixed(SystemLayout.of(B=3)))


class TestBall(unittest.TestCase):

    def test_center_is_member(self):
        rho = random_state(QUTRIT, seed=TestConfig.SEED)
        membership = in_ball(rho, rho, 0.1)
        self.assertTrue(membership)
        self.assertGreater(membership.slack, 0.09)

    def test_far_state_not_member(self):
        layout = SystemLayout.of(A=2)
        zero = basis_state(layout).to_state()
        one = basis_state(layout, 1).to_state()
        membership = in_ball(one, zero, 0.5)
        self.assertFalse(membership)
        self.assertAlmostEqual(membership.distance, 1.0, places=12)
        self.assertAlmostEqual(membership.slack, -0.5, places=12)

    def test_scaled_copy_inside(self):
        rho = random_state(QUTRIT, seed=TestConfig.SEED)
        self.assertTrue(in_ball(rho.scaled(0.99), rho, 0.2))


class TestUhlmann(unittest.TestCase):

    def setUp(self):
        self.rng = make_rng(TestConfig.SEED, 41)

    def test_matched_purification_preserves_distance(self):
        rho = random_state(QUTRIT, seed=self.rng)
        tau = random_state(QUTRIT, seed=self.rng, min_scale=0.5)
        phi = purify(rho, "R", 3)
        theta = uhlmann_match(rho, tau, phi)
        np.testing.assert_allclose(theta.marginal(["A"]).matrix, tau.matrix, atol=1e-10)
        self.assertAlmostEqual(pure_distance(phi, theta), purified_distance(rho, tau), delta=1e-9)

    def test_matching_is_exact_across_seeds(self):
        for _ in range(10):
            rho = random_state(QUTRIT, seed=self.rng, min_scale=0.3)
            tau = random_state(QUTRIT, seed=self.rng, min_scale=0.3)
            phi = purify(rho, "R", 3)
            theta = uhlmann_match(rho, tau, phi)
            self.assertLessEqual(abs(pure_distance(phi, theta) - purified_distance(rho, tau)), 1e-9)

    def test_matching_a_state_with_itself(self):
        rho = random_state(QUTRIT, rank=2, seed=self.rng)
        phi = purify(rho, "R", 3)
        self.assertLessEqual(pure_distance(phi, uhlmann_match(rho, rho, phi)), 1e-9)

    def test_purifier_too_small(self):
        rho = State(QUTRIT, np.diag([1.0, 0.0, 0.0]))
        tau = maximally_mixed(QUTRIT)
        with self.assertRaises(InsufficientDimensionError):
            uhlmann_match(rho, tau, purify(rho, "R"))

    def test_not_a_purification(self):
        rho = maximally_mixed(QUTRIT)
        other = purify(State(QUTRIT, np.diag([0.5, 0.5, 0.0])), "R", 3)
        with self.assertRaises(PreconditionError):
            uhlmann_match(rho, rho, other)

    def test_extension_match(self):
        rho_ext = random_state(TestFixtures.qubit_pair(), seed=self.rng)
        rho = rho_ext.marginal(["A"])
        tau = random_state(SystemLayout.of(A=2), seed=self.rng)
        tau_ext = extension_match(rho, tau, rho_ext)
        self.assertEqual(tau_ext.layout.labels, ("A", "B"))
        np.testing.assert_allclose(tau_ext.marginal(["A"]).matrix, tau.matrix, atol=1e-10)
        self.assertAlmostEqual(purified_distance(rho_ext, tau_ext), purified_distance(rho, tau), delta=1e-9)


if __name__ == "__main__":
    unittest.main()
