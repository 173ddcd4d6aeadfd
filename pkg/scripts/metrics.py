#!/usr/bin/env python3
"""
Distance and fidelity measures on sub-normalized states.

Generalized trace distance, fidelity, generalized fidelity (closed form),
purified distance, ε-ball membership and the Uhlmann-type matching of
purifications and extensions.
"""

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

import linalg
from entropy_lib import (
    TOLERANCES,
    Tolerances,
    LayoutError,
    InsufficientDimensionError,
    NumericalFailure,
    PreconditionError,
)
from quantum import Operator, PureState, State, fresh_label, purify

Stateish = Union[Operator, PureState, np.ndarray]


@dataclass(frozen=True)
class Epsilon:
    """Smoothing parameter, 0 <= value < 1"""

    value: float

    def __post_init__(self):
        value = float(self.value)
        if not (0.0 <= value < 1.0) or math.isnan(value):
            raise PreconditionError(f"epsilon must lie in [0, 1), got {self.value}")
        object.__setattr__(self, "value", value)

    def require_below_norm(self, rho) -> None:
        """The ball around ρ needs √(tr ρ) > ε"""
        if not math.sqrt(max(rho.trace, 0.0)) > self.value:
            raise PreconditionError(
                f"epsilon {self.value} is not below sqrt(tr rho) = {math.sqrt(max(rho.trace, 0.0)):.12g}")

    def __float__(self) -> float:
        return self.value


def as_epsilon(eps: Union[Epsilon, float]) -> Epsilon:
    return eps if isinstance(eps, Epsilon) else Epsilon(eps)


def _matrix(x: Stateish) -> np.ndarray:
    if isinstance(x, (Operator, PureState)):
        return x.matrix
    return linalg.as_cmatrix(x)


def _require_same_layout(rho, tau) -> None:
    if rho.layout != tau.layout:
        raise LayoutError(f"layout mismatch: {rho.layout} vs {tau.layout}")


# =============================================================================
# DISTANCES
# =============================================================================

def trace_distance(rho, tau) -> float:
    """½‖ρ − τ‖₁"""
    _require_same_layout(rho, tau)
    return 0.5 * linalg.trace_norm(rho.matrix - tau.matrix)


def gen_trace_distance(rho, tau, tolerances: Tolerances = TOLERANCES) -> float:
    """max{tr{ρ−τ}₊, tr{τ−ρ}₊}, cross-checked against ½‖ρ−τ‖₁ + ½|tr ρ − tr τ|"""
    _require_same_layout(rho, tau)
    diff = rho.matrix - tau.matrix
    by_parts = max(linalg.positive_part_trace(diff, tolerances), linalg.positive_part_trace(-diff, tolerances))
    by_norm = 0.5 * linalg.trace_norm(diff) + 0.5 * abs(rho.trace - tau.trace)
    if abs(by_parts - by_norm) > 1e-10 * (1.0 + by_norm) + 2 * rho.dim * tolerances.psd_clamp:
        raise NumericalFailure(
            f"generalized trace distance formulas disagree ({by_parts!r} vs {by_norm!r})",
            residual=abs(by_parts - by_norm))
    return float(min(max(by_parts, 0.0), 1.0))


def fidelity(rho: Stateish, tau: Stateish, tolerances: Tolerances = TOLERANCES) -> float:
    """F(ρ, τ) = ‖√ρ √τ‖₁; also accepts unnormalized PSD matrices"""
    a = _matrix(rho)
    b = _matrix(tau)
    if a.shape != b.shape:
        raise LayoutError(f"shape mismatch: {a.shape} vs {b.shape}")
    return linalg.trace_norm(linalg.matrix_sqrt(a, tolerances) @ linalg.matrix_sqrt(b, tolerances))


def gen_fidelity(rho, tau, tolerances: Tolerances = TOLERANCES) -> float:
    """F̄(ρ, τ) = F(ρ, τ) + √((1 − tr ρ)(1 − tr τ)), clamped to [0, 1]"""
    _require_same_layout(rho, tau)
    deficit = max(0.0, 1.0 - rho.trace) * max(0.0, 1.0 - tau.trace)
    value = fidelity(rho, tau, tolerances) + math.sqrt(deficit)
    return float(min(max(value, 0.0), 1.0))


# Relative size of floating-point noise in traces and spectra
_ROUNDING = 4 * np.finfo(float).eps


def _trace_deficit(trace: float, dim: int) -> float:
    """1 − tr, with round-off around a unit trace counted as zero"""
    deficit = 1.0 - trace
    return deficit if deficit > dim * _ROUNDING else 0.0


def _deficit_terms(trace_a: float, trace_b: float, dim: int) -> float:
    """(√(1 − tr a) − √(1 − tr b))²"""
    return (math.sqrt(_trace_deficit(trace_a, dim)) - math.sqrt(_trace_deficit(trace_b, dim))) ** 2


def _root(m: np.ndarray, tolerances: Tolerances) -> np.ndarray:
    return linalg.matrix_sqrt(m, tolerances, relative_floor=m.shape[0] * _ROUNDING)


def _from_deficit(deficit: float) -> float:
    """P from 1 − F̄, as √((1 − F̄)(1 + F̄))"""
    deficit = min(max(deficit, 0.0), 1.0)
    return math.sqrt(deficit * (2.0 - deficit))


def fidelity_deficit(rho, tau, tolerances: Tolerances = TOLERANCES) -> float:
    """1 − F̄(ρ, τ) as half a sum of squares.

    With V the polar unitary of √ρ√τ,
    2(1 − F̄) = ‖√ρ V − √τ‖²_F + (√(1 − tr ρ) − √(1 − tr τ))²,
    which stays accurate when ρ and τ nearly coincide.
    """
    _require_same_layout(rho, tau)
    root_rho = _root(rho.matrix, tolerances)
    root_tau = _root(tau.matrix, tolerances)
    u, _, vh = np.linalg.svd(root_rho @ root_tau)
    spread = float(np.sum(np.abs(root_rho @ (u @ vh) - root_tau) ** 2))
    return 0.5 * (spread + _deficit_terms(rho.trace, tau.trace, rho.dim))


def purified_distance(rho, tau, tolerances: Tolerances = TOLERANCES) -> float:
    """P(ρ, τ) = √(1 − F̄²)"""
    return _from_deficit(fidelity_deficit(rho, tau, tolerances))


def states_equal(rho, tau, tol: float = 1e-8) -> bool:
    """Equality of states, operationalized as trace-norm distance <= tol"""
    _require_same_layout(rho, tau)
    return linalg.trace_norm(rho.matrix - tau.matrix) <= tol


# =============================================================================
# EPSILON BALL
# =============================================================================

@dataclass(frozen=True)
class BallMembership:
    member: bool
    slack: float       # ε − P(τ, ρ)
    distance: float    # P(τ, ρ)

    def __bool__(self) -> bool:
        return self.member


def in_ball(tau, rho, eps: Union[Epsilon, float], slack: float = 1e-12,
            tolerances: Tolerances = TOLERANCES) -> BallMembership:
    """Is τ in the ε-ball around ρ? (P(τ, ρ) <= ε + slack)"""
    eps = as_epsilon(eps)
    eps.require_below_norm(rho)
    distance = purified_distance(tau, rho, tolerances)
    return BallMembership(distance <= eps.value + slack, eps.value - distance, distance)


# =============================================================================
# UHLMANN MATCHING
# =============================================================================

def _purifier_labels(phi: PureState, rho) -> list:
    for label in rho.layout.labels:
        if label not in phi.layout.labels:
            raise LayoutError(f"purification {phi.layout} lacks factor {label!r} of {rho.layout}")
    purifier = [label for label in phi.layout.labels if label not in set(rho.layout.labels)]
    if not purifier:
        raise LayoutError("purification has no purifying factors")
    return purifier


def uhlmann_match(rho: State, tau: State, phi: PureState,
                  tolerances: Tolerances = TOLERANCES) -> PureState:
    """Purification ϑ of τ on φ's layout with F̄(φ, ϑ) = F̄(ρ, τ).

    ϑ = (I ⊗ W)·Θ₀ for the canonical purification Θ₀ of τ, with W the unitary
    from the polar decomposition of Φ†Θ₀ (Φ the matrix form of φ).
    """
    _require_same_layout(rho, tau)
    purifier = _purifier_labels(phi, rho)
    order = list(rho.layout.labels) + purifier
    phi_ordered = phi.reorder(order)
    d = rho.dim
    d_purifier = phi.layout.dim_of(purifier)

    big_phi = phi_ordered.amplitudes.reshape(d, d_purifier)
    marginal = big_phi @ big_phi.conj().T
    if linalg.trace_norm(marginal - rho.matrix) > 1e-8:
        raise PreconditionError("phi is not a purification of rho")

    theta0 = np.zeros((d, d_purifier), dtype=np.complex128)
    if d_purifier >= d:
        theta0[:, :d] = _root(tau.matrix, tolerances)
    else:
        values, vectors = linalg.support(tau.matrix, tolerances)
        r = values.size
        if d_purifier < r:
            raise InsufficientDimensionError(
                f"purifier dimension {d_purifier} is below rank(tau) = {r}")
        theta0[:, :r] = vectors * np.sqrt(values)

    u, _, vh = np.linalg.svd(big_phi.conj().T @ theta0)
    w = vh.conj().T @ u.conj().T
    theta = theta0 @ w
    matched = PureState(phi_ordered.layout, theta.reshape(-1), tolerances)
    return matched.reorder(list(phi.layout.labels))


def extension_match(rho: State, tau: State, rho_ext: State,
                    tolerances: Tolerances = TOLERANCES) -> State:
    """Extension τ̄ of τ with P(ρ̄, τ̄) = P(ρ, τ), for an extension ρ̄ of ρ"""
    _require_same_layout(rho, tau)
    marginal = rho_ext.marginal(list(rho.layout.labels))
    if linalg.trace_norm(marginal.matrix - rho.matrix) > 1e-8:
        raise PreconditionError("rho_ext does not extend rho")
    purifier_dim = max(rho_ext.rank(tolerances), rho.dim)
    label = fresh_label(rho_ext.layout, "R")
    phi = purify(rho_ext, label, purifier_dim, tolerances)
    theta = uhlmann_match(rho, tau, phi, tolerances)
    return theta.to_state().partial_trace([label])


def pure_distance(phi: PureState, theta: PureState) -> float:
    """Purified distance between pure (possibly sub-normalized) vectors"""
    if phi.layout != theta.layout:
        raise LayoutError(f"layout mismatch: {phi.layout} vs {theta.layout}")
    overlap = phi.overlap(theta)
    phase = np.conj(overlap) / abs(overlap) if overlap != 0 else 1.0
    spread = float(np.sum(np.abs(phi.amplitudes - phase * theta.amplitudes) ** 2))
    terms = _deficit_terms(phi.norm_squared, theta.norm_squared, phi.layout.total_dim)
    return _from_deficit(0.5 * (spread + terms))
