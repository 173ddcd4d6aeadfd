#!/usr/bin/env python3
"""
Dense semidefinite-programming engine for complex-Hermitian block problems.

Problems are stated in standard primal form

    minimize    <C, X>
    subject to  <A_i, X> = b_i,   X = diag(X_1, ..., X_k) >= 0

with dual  maximize b.y  subject to  S = C - sum_i y_i A_i >= 0.

Complex blocks are realified before solving; callers always see values and
iterates of the complex problem. The solver is a primal-dual path-following
interior point method with the HKM direction and Mehrotra's
predictor-corrector.
"""

import os
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

import linalg
from entropy_lib import (
    TOLERANCES,
    Tolerances,
    ContractViolation,
    LayoutError,
    NumericalFailure,
    EntropyLogger,
)

_log = EntropyLogger("smooth_entropy.sdp")

OPTIMAL = "optimal"
PRIMAL_INFEASIBLE = "primal-infeasible-certificate"
DUAL_INFEASIBLE = "dual-infeasible-certificate"
NUMERICAL_FAILURE = "numerical-failure"

STATUSES = (OPTIMAL, PRIMAL_INFEASIBLE, DUAL_INFEASIBLE, NUMERICAL_FAILURE)

# Maps an n x n Hermitian test matrix H to the block coefficient L*(H) of a
# linear map L from a variable block to n x n matrices.
AdjointMap = Callable[[np.ndarray], np.ndarray]


# =============================================================================
# PROBLEM AND SOLUTION TYPES
# =============================================================================

@dataclass(frozen=True)
class Block:
    label: str
    dim: int
    real: bool = False


@dataclass(frozen=True)
class Constraint:
    coefficients: Dict[str, np.ndarray]
    rhs: float


@dataclass(frozen=True)
class SdpProblem:
    """Block-structured SDP in standard primal form"""

    blocks: Tuple[Block, ...]
    objective: Dict[str, np.ndarray]
    constraints: Tuple[Constraint, ...]
    name: str = "sdp"

    def block(self, label: str) -> Block:
        for blk in self.blocks:
            if blk.label == label:
                return blk
        raise LayoutError(f"unknown SDP block {label!r}")

    def validate(self, tolerances: Tolerances = TOLERANCES) -> Tuple[bool, List[str]]:
        """Check block conformity, Hermiticity and finiteness.

        Returns:
            (is_valid, errors)
        """
        errors = []
        labels = [blk.label for blk in self.blocks]
        if len(set(labels)) != len(labels):
            errors.append(f"duplicate block labels {labels}")
        if not self.blocks:
            errors.append("problem has no blocks")

        def check(where: str, coefficients: Dict[str, np.ndarray]) -> None:
            for label, m in coefficients.items():
                if label not in labels:
                    errors.append(f"{where}: unknown block {label!r}")
                    continue
                blk = self.block(label)
                if m.shape != (blk.dim, blk.dim):
                    errors.append(f"{where}: block {label} has shape {m.shape}, expected {(blk.dim, blk.dim)}")
                elif not linalg.is_hermitian(m, tolerances):
                    errors.append(f"{where}: block {label} is not Hermitian")
                elif blk.real and np.max(np.abs(m.imag), initial=0.0) > tolerances.hermitian:
                    errors.append(f"{where}: real block {label} has imaginary coefficients")
                elif not np.all(np.isfinite(m)):
                    errors.append(f"{where}: block {label} has non-finite entries")

        check("objective", self.objective)
        for i, con in enumerate(self.constraints):
            check(f"constraint {i}", con.coefficients)
            if not np.isfinite(con.rhs):
                errors.append(f"constraint {i}: non-finite right-hand side")
        return len(errors) == 0, errors

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)


@dataclass
class SdpSolution:
    """Solution of the complex problem together with solver diagnostics"""

    primal_X: Dict[str, np.ndarray]
    dual_y: np.ndarray
    dual_S: Dict[str, np.ndarray]
    primal_value: float
    dual_value: float
    status: str
    iterations: int
    gap: float
    primal_residual: float
    dual_residual: float
    dropped_constraints: Tuple[int, ...] = ()
    wall_time: float = 0.0

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL

    @property
    def value(self) -> float:
        """Midpoint of the primal and dual objective values"""
        return 0.5 * (self.primal_value + self.dual_value)

    def require_optimal(self, what: str = "SDP") -> "SdpSolution":
        if not self.is_optimal:
            raise NumericalFailure(
                f"{what} ended with status {self.status} after {self.iterations} iterations "
                f"(gap {self.gap:.2e}, primal residual {self.primal_residual:.2e}, "
                f"dual residual {self.dual_residual:.2e})",
                residual=max(self.gap, self.primal_residual, self.dual_residual),
                status=self.status,
                solution=self)
        return self

    def summary(self) -> str:
        return (f"status={self.status} iterations={self.iterations} "
                f"primal={self.primal_value:.12g} dual={self.dual_value:.12g} gap={self.gap:.3e}")


@dataclass(frozen=True)
class SolverOptions:
    tolerances: Tolerances = TOLERANCES
    max_iterations: Optional[int] = None

    @property
    def iteration_cap(self) -> int:
        return self.max_iterations if self.max_iterations is not None else self.tolerances.sdp_max_iterations


# =============================================================================
# PROBLEM BUILDER
# =============================================================================

def hermitian_basis(n: int) -> List[np.ndarray]:
    """Orthonormal basis of the n x n Hermitian matrices under <A, B> = tr(AB)"""
    basis = []
    for j in range(n):
        e = np.zeros((n, n), dtype=np.complex128)
        e[j, j] = 1.0
        basis.append(e)
    r = 1.0 / np.sqrt(2.0)
    for j in range(n):
        for k in range(j + 1, n):
            e = np.zeros((n, n), dtype=np.complex128)
            e[j, k] = e[k, j] = r
            basis.append(e)
            e = np.zeros((n, n), dtype=np.complex128)
            e[j, k] = -1j * r
            e[k, j] = 1j * r
            basis.append(e)
    return basis


def identity_map() -> AdjointMap:
    return lambda h: h


def scaled_map(inner: AdjointMap, factor: float) -> AdjointMap:
    return lambda h: factor * inner(h)


def principal_submatrix(block_dim: int, offset: int, size: int) -> AdjointMap:
    """L(X) = X[offset:offset+size, offset:offset+size]"""
    if offset < 0 or offset + size > block_dim:
        raise LayoutError(f"sub-block [{offset}, {offset + size}) outside block of dimension {block_dim}")
    return lambda h: linalg.embed_top_left(h, block_dim, offset)


def identity_tensor(d_identity: int, d_variable: int) -> AdjointMap:
    """L(σ) = I_d ⊗ σ; the adjoint is the partial trace over the identity factor"""
    return lambda h: linalg.partial_trace_dims(h, [d_identity, d_variable], [0])


def partial_trace_map(d_traced: int, d_kept: int) -> AdjointMap:
    """L(Y) = tr_1 Y for Y on d_traced ⊗ d_kept; the adjoint is h ↦ I ⊗ h"""
    identity = np.eye(d_traced)
    return lambda h: np.kron(identity, h)


@dataclass(frozen=True)
class OperatorConstraint:
    """Handle for an operator equality expanded over a Hermitian basis"""

    indices: Tuple[int, ...]
    basis: Tuple[np.ndarray, ...]

    def multiplier(self, solution: SdpSolution) -> np.ndarray:
        """Operator-valued dual multiplier Σ_k y_k H_k"""
        y = solution.dual_y[list(self.indices)]
        return linalg.hermitian_part(np.tensordot(y, np.stack(self.basis), axes=1))


class ProblemBuilder:
    """Assemble an SdpProblem from blocks, scalar and operator constraints.

    Inequalities are compiled into equalities with explicit PSD slack blocks.
    """

    def __init__(self, name: str = "sdp"):
        self.name = name
        self._blocks: List[Block] = []
        self._objective: Dict[str, np.ndarray] = {}
        self._constraints: List[Constraint] = []
        self._slack_count = 0

    def _dim(self, label: str) -> int:
        for blk in self._blocks:
            if blk.label == label:
                return blk.dim
        raise LayoutError(f"unknown SDP block {label!r}")

    def add_block(self, label: str, dim: int, real: bool = False) -> "ProblemBuilder":
        if any(blk.label == label for blk in self._blocks):
            raise LayoutError(f"duplicate SDP block {label!r}")
        if dim < 1:
            raise ContractViolation(f"SDP block {label!r} needs a positive dimension")
        self._blocks.append(Block(label, int(dim), real))
        return self

    def set_objective(self, label: str, matrix) -> "ProblemBuilder":
        """Add ``matrix`` to the objective coefficient of a block"""
        m = linalg.as_cmatrix(matrix)
        previous = self._objective.get(label)
        self._objective[label] = m if previous is None else previous + m
        return self

    def add_constraint(self, coefficients: Dict[str, np.ndarray], rhs: float) -> int:
        coefficients = {label: linalg.as_cmatrix(m) for label, m in coefficients.items()}
        for label in coefficients:
            self._dim(label)
        self._constraints.append(Constraint(coefficients, float(rhs)))
        return len(self._constraints) - 1

    def add_operator_equality(self, terms: Sequence[Tuple[str, AdjointMap]], rhs) -> OperatorConstraint:
        """Σ_t L_t(X_t) = rhs, imposed as <H_k, ·> for every basis element H_k"""
        rhs = linalg.require_hermitian(rhs)
        basis = hermitian_basis(rhs.shape[0])
        indices = []
        for h in basis:
            coefficients: Dict[str, np.ndarray] = {}
            for label, adjoint in terms:
                c = adjoint(h)
                coefficients[label] = coefficients[label] + c if label in coefficients else c
            indices.append(self.add_constraint(coefficients, float(np.real(np.trace(h @ rhs)))))
        return OperatorConstraint(tuple(indices), tuple(basis))

    def _new_slack(self, dim: int, real: bool) -> str:
        self._slack_count += 1
        label = f"_slack{self._slack_count}"
        self.add_block(label, dim, real)
        return label

    def add_inequality(self, coefficients: Dict[str, np.ndarray], rhs: float, sense: str = "<=") -> str:
        """<A, X> <= rhs (or >=) via a real 1x1 slack block; returns the slack label"""
        sign = _sense_sign(sense)
        slack = self._new_slack(1, real=True)
        coefficients = dict(coefficients)
        coefficients[slack] = np.array([[sign]], dtype=np.complex128)
        self.add_constraint(coefficients, rhs)
        return slack

    def add_operator_inequality(self, terms: Sequence[Tuple[str, AdjointMap]], rhs,
                                sense: str = "<=") -> Tuple[str, OperatorConstraint]:
        """Σ_t L_t(X_t) <= rhs (or >=) in the PSD order via a slack block T"""
        sign = _sense_sign(sense)
        rhs = linalg.require_hermitian(rhs)
        slack = self._new_slack(rhs.shape[0], real=False)
        handle = self.add_operator_equality(list(terms) + [(slack, scaled_map(identity_map(), sign))], rhs)
        return slack, handle

    def build(self) -> SdpProblem:
        problem = SdpProblem(tuple(self._blocks), dict(self._objective), tuple(self._constraints), self.name)
        ok, errors = problem.validate()
        if not ok:
            raise ContractViolation(f"invalid SDP {self.name}: " + "; ".join(errors))
        return problem


def _sense_sign(sense: str) -> float:
    if sense == "<=":
        return 1.0
    if sense == ">=":
        return -1.0
    raise ContractViolation(f"inequality sense must be '<=' or '>=', got {sense!r}")


# =============================================================================
# REALIFICATION
# =============================================================================

@dataclass
class RealProblem:
    """Real symmetric block problem; block k has size sizes[k]"""

    sizes: List[int]
    C: List[np.ndarray]
    A: List[np.ndarray]   # per block, stacked (m, n, n)
    b: np.ndarray
    source: SdpProblem

    @property
    def num_constraints(self) -> int:
        return int(self.b.size)

    def take(self, rows: Sequence[int]) -> "RealProblem":
        rows = list(rows)
        return RealProblem(self.sizes, self.C, [a[rows] for a in self.A], self.b[rows], self.source)


def _realify_matrix(m: np.ndarray, real: bool) -> np.ndarray:
    if real:
        return np.real(m).astype(np.float64)
    re, im = np.real(m), np.imag(m)
    return 0.5 * np.block([[re, -im], [im, re]])


def realify(problem: SdpProblem) -> RealProblem:
    """Embed each complex block via A ↦ ½[[Re A, −Im A], [Im A, Re A]].

    The ½ makes <R(A), R(X)> equal the complex <A, X>, so optimal values of the
    two problems coincide. Real blocks are copied unchanged.
    """
    sizes = [blk.dim if blk.real else 2 * blk.dim for blk in problem.blocks]
    m = problem.num_constraints
    C, A = [], []
    for blk, n in zip(problem.blocks, sizes):
        c = problem.objective.get(blk.label)
        C.append(np.zeros((n, n)) if c is None else _realify_matrix(c, blk.real))
        stacked = np.zeros((m, n, n))
        for i, con in enumerate(problem.constraints):
            a = con.coefficients.get(blk.label)
            if a is not None:
                stacked[i] = _realify_matrix(a, blk.real)
        A.append(stacked)
    b = np.array([con.rhs for con in problem.constraints], dtype=np.float64)
    return RealProblem(sizes, C, A, b, problem)


def complexify(y: np.ndarray, real: bool) -> np.ndarray:
    """Inverse of realification for a PSD real block: (Y11 + Y22)/2 + i(Y21 − Y12)/2"""
    if real:
        return y.astype(np.complex128)
    n = y.shape[0] // 2
    y11, y12, y21, y22 = y[:n, :n], y[:n, n:], y[n:, :n], y[n:, n:]
    return linalg.hermitian_part(0.5 * (y11 + y22) + 0.5j * (y21 - y12))


# =============================================================================
# REAL INTERIOR POINT SOLVER
# =============================================================================

def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


class _Operators:
    """A(X), A*(y) and the Schur complement for a real block problem"""

    def __init__(self, real: RealProblem):
        self.real = real
        self.active = [np.flatnonzero(np.any(a.reshape(a.shape[0], -1) != 0.0, axis=1)) for a in real.A]

    def apply(self, X: List[np.ndarray]) -> np.ndarray:
        out = np.zeros(self.real.num_constraints)
        for a, x in zip(self.real.A, X):
            out += np.tensordot(a, x, axes=([1, 2], [0, 1]))
        return out

    def adjoint(self, y: np.ndarray) -> List[np.ndarray]:
        return [np.tensordot(y, a, axes=1) for a in self.real.A]

    def schur(self, X: List[np.ndarray], S_inv: List[np.ndarray]) -> np.ndarray:
        """M_ij = <A_i, X A_j S⁻¹>"""
        m = self.real.num_constraints
        M = np.zeros((m, m))
        for a, x, s_inv, act in zip(self.real.A, X, S_inv, self.active):
            if act.size == 0:
                continue
            sub = a[act]
            n = x.shape[0]
            xas = np.matmul(np.matmul(x, sub), s_inv)
            M[np.ix_(act, act)] += sub.reshape(act.size, n * n) @ xas.transpose(0, 2, 1).reshape(act.size, n * n).T
        return 0.5 * (M + M.T)


def _inner(U: List[np.ndarray], V: List[np.ndarray]) -> float:
    return float(sum(np.sum(u * v) for u, v in zip(U, V)))


def _norm(U: List[np.ndarray]) -> float:
    return float(np.sqrt(sum(np.sum(u * u) for u in U)))


def _whiten(x: np.ndarray, dx: np.ndarray) -> np.ndarray:
    """A matrix similar to x^{-1/2} dx x^{-1/2}; eigenvalue floor when x is nearly singular"""
    try:
        l = np.linalg.cholesky(x)
        t = scipy.linalg.solve_triangular(l, dx, lower=True)
        return scipy.linalg.solve_triangular(l, t.T, lower=True)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(_sym(x))
        floor = max(float(w[-1]), 1.0) * np.finfo(float).eps
        r = v / np.sqrt(np.maximum(w, floor))
        return r.T @ dx @ r


def _max_step(X: List[np.ndarray], dX: List[np.ndarray]) -> float:
    """Largest α with X + α dX PSD (X positive definite)"""
    alpha = np.inf
    for x, dx in zip(X, dX):
        lam = np.linalg.eigvalsh(_sym(_whiten(x, dx)))[0]
        if lam < 0:
            alpha = min(alpha, -1.0 / lam)
    return alpha


def _backoff(X: List[np.ndarray], dX: List[np.ndarray], alpha: float, tol: Tolerances) -> float:
    """Shrink α geometrically until every X + α dX has a Cholesky factor; 0 when none does"""
    for _ in range(tol.sdp_backoff_attempts):
        try:
            for x, dx in zip(X, dX):
                np.linalg.cholesky(_sym(x + alpha * dx))
            return alpha
        except np.linalg.LinAlgError:
            alpha *= tol.sdp_step_backoff
    return 0.0


def _step(X: List[np.ndarray], dX: List[np.ndarray], tol: Tolerances) -> float:
    return _backoff(X, dX, min(1.0, tol.sdp_step_fraction * _max_step(X, dX)), tol)


def _spd_inverse(s: np.ndarray) -> np.ndarray:
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(s), np.eye(s.shape[0]))
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        w, v = np.linalg.eigh(_sym(s))
        floor = max(float(w[-1]), 1.0) * np.finfo(float).eps
        return (v / np.maximum(w, floor)) @ v.T


def _factor_schur(M: np.ndarray, regularization: float):
    """Cholesky of M + r I, raising r by 10^3 per retry (three attempts)"""
    scale = max(1.0, float(np.max(np.abs(np.diag(M)), initial=0.0)))
    identity = np.eye(M.shape[0])
    for attempt in range(3):
        try:
            return scipy.linalg.cho_factor(M + regularization * (1e3 ** attempt) * scale * identity)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            if attempt == 2:
                raise


@dataclass
class _Iterate:
    X: List[np.ndarray]
    y: np.ndarray
    S: List[np.ndarray]
    iteration: int = 0
    gap: float = np.inf
    pinf: float = np.inf
    dinf: float = np.inf
    slack: float = -np.inf

    @property
    def merit(self) -> float:
        return max(self.gap, self.pinf, self.dinf)

    def converged(self, tol: Tolerances, factor: float = 1.0) -> bool:
        """Gap and residuals within ``factor`` times the tolerances, dual value not above the primal"""
        return (self.gap <= factor * tol.sdp_gap
                and self.pinf <= factor * tol.sdp_feasibility
                and self.dinf <= factor * tol.sdp_feasibility
                and self.slack >= -tol.sdp_weak_duality)


@dataclass
class _RealResult:
    iterate: _Iterate
    status: str
    iterations: int
    certificate: Optional[np.ndarray] = None
    notes: List[str] = field(default_factory=list)


def _give_up(best: _Iterate, it: int, note: str, tol: Tolerances,
             fallback: Optional[_Iterate] = None) -> _RealResult:
    """Failure exit; the best iterate with dual value not above the primal still counts when close enough"""
    fallback = fallback or best
    if fallback.converged(tol, tol.sdp_relaxed_factor):
        return _RealResult(fallback, OPTIMAL, it, notes=[f"{note}; best iterate {fallback.iteration} accepted"])
    return _RealResult(best, NUMERICAL_FAILURE, it, notes=[note])


def _solve_real(real: RealProblem, options: SolverOptions) -> _RealResult:
    tol = options.tolerances
    ops = _Operators(real)
    b = real.b
    C = real.C
    m = real.num_constraints
    n_total = sum(real.sizes)

    norm_b = float(np.linalg.norm(b))
    norm_c = _norm(C)
    norm_a = max((float(np.linalg.norm(a[i])) for a in real.A for i in range(m)), default=0.0)
    eta = 1.0 + max(norm_c, norm_a, float(np.max(np.abs(b), initial=0.0)))

    X = [eta * np.eye(n) for n in real.sizes]
    S = [eta * np.eye(n) for n in real.sizes]
    y = np.zeros(m)
    best: Optional[_Iterate] = None
    fallback: Optional[_Iterate] = None
    stalled = 0

    for it in range(options.iteration_cap + 1):
        AtY = ops.adjoint(y)
        rp = b - ops.apply(X)
        Rd = [c - aty - s for c, aty, s in zip(C, AtY, S)]
        pobj = _inner(C, X)
        dobj = float(b @ y)
        mu = _inner(X, S) / n_total

        current = _Iterate([x.copy() for x in X], y.copy(), [s.copy() for s in S], it,
                           gap=abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj)),
                           pinf=float(np.linalg.norm(rp)) / (1.0 + norm_b),
                           dinf=_norm(Rd) / (1.0 + norm_c),
                           slack=pobj - dobj)
        if best is None or current.merit < best.merit:
            best = current
        if current.slack >= -tol.sdp_weak_duality and (fallback is None or current.merit < fallback.merit):
            fallback = current
        _log.debug(f"sdp it={it:3d} pobj={pobj:+.10e} dobj={dobj:+.10e} "
                   f"gap={current.gap:.2e} pinf={current.pinf:.2e} dinf={current.dinf:.2e} mu={mu:.2e}")

        if current.converged(tol):
            return _RealResult(current, OPTIMAL, it)

        if max(_norm(X), _norm(S), float(np.linalg.norm(y))) > tol.sdp_divergence:
            return _classify_divergence(real, ops, current, it, tol)

        if it == options.iteration_cap:
            break

        try:
            S_inv = [_spd_inverse(s) for s in S]
            M = ops.schur(X, S_inv)
            factor = _factor_schur(M, tol.sdp_regularization)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
            return _give_up(best, it, f"factorization failed: {e}", tol, fallback)

        def direction(Rc: List[np.ndarray]):
            rhs = rp - ops.apply(Rc)
            dy = scipy.linalg.cho_solve(factor, rhs)
            dy = dy + scipy.linalg.cho_solve(factor, rhs - M @ dy)
            At_dy = ops.adjoint(dy)
            dS = [rd - a for rd, a in zip(Rd, At_dy)]
            dX = [rc + _sym(x @ a @ si) for rc, x, a, si in zip(Rc, X, At_dy, S_inv)]
            return dX, dy, dS

        base = [-x - _sym(x @ rd @ si) for x, rd, si in zip(X, Rd, S_inv)]

        try:
            # predictor
            dXa, dya, dSa = direction(base)
            ap = min(1.0, tol.sdp_step_fraction * _max_step(X, dXa))
            ad = min(1.0, tol.sdp_step_fraction * _max_step(S, dSa))
            mu_aff = _inner([x + ap * dx for x, dx in zip(X, dXa)],
                            [s + ad * ds for s, ds in zip(S, dSa)]) / n_total
            sigma = float(np.clip((mu_aff / mu) ** 3, 0.0, 1.0)) if mu > 0 else 0.0

            # corrector
            Rc = [bc + sigma * mu * si - _sym(dx @ ds @ si)
                  for bc, si, dx, ds in zip(base, S_inv, dXa, dSa)]
            dX, dy, dS = direction(Rc)
            ap = _step(X, dX, tol)
            ad = _step(S, dS, tol)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
            return _give_up(best, it, f"step computation failed: {e}", tol, fallback)

        X = [_sym(x + ap * dx) for x, dx in zip(X, dX)]
        S = [_sym(s + ad * ds) for s, ds in zip(S, dS)]
        y = y + ad * dy

        stalled = stalled + 1 if max(ap, ad) < 1e-10 else 0
        if stalled >= 5:
            return _give_up(best, it, "step length stalled", tol, fallback)

    return _give_up(best, options.iteration_cap, "iteration cap reached", tol, fallback)


def _classify_divergence(real: RealProblem, ops: _Operators, it_state: _Iterate, it: int,
                         tol: Tolerances) -> _RealResult:
    """Turn a diverging iterate into an infeasibility certificate when it is one"""
    certificate_tol = np.sqrt(tol.sdp_feasibility)
    y = it_state.y
    norm_y = float(np.linalg.norm(y))
    if norm_y > 0:
        y_hat = y / norm_y
        ray = ops.adjoint(y_hat)
        top = max(float(np.linalg.eigvalsh(r)[-1]) for r in ray)
        if float(real.b @ y_hat) > certificate_tol and top <= certificate_tol:
            return _RealResult(it_state, PRIMAL_INFEASIBLE, it, certificate=y_hat)
    norm_x = _norm(it_state.X)
    if norm_x > 0:
        x_hat = [x / norm_x for x in it_state.X]
        if _inner(real.C, x_hat) < -certificate_tol and float(np.linalg.norm(ops.apply(x_hat))) <= certificate_tol:
            return _RealResult(it_state, DUAL_INFEASIBLE, it)
    return _RealResult(it_state, NUMERICAL_FAILURE, it, notes=["iterates diverged without a certificate"])


# =============================================================================
# REDUNDANT CONSTRAINTS
# =============================================================================

def independent_constraints(real: RealProblem, tolerances: Tolerances = TOLERANCES
                            ) -> Tuple[List[int], List[int], Optional[np.ndarray]]:
    """Split constraints into a linearly independent subset and the rest.

    Uses QR with column pivoting on the vectorized constraint matrices. When a
    dependent constraint contradicts the independent ones, the returned Farkas
    vector y satisfies A*(y) = 0 and b.y > 0.

    Returns:
        (kept, dropped, certificate)
    """
    m = real.num_constraints
    if m == 0:
        return [], [], None
    flat = np.concatenate([a.reshape(m, -1) for a in real.A], axis=1)
    _, r, pivots = scipy.linalg.qr(flat.T, mode='economic', pivoting=True)
    diag = np.abs(np.diag(r))
    cutoff = tolerances.sdp_rank * max(1.0, float(diag[0]) if diag.size else 0.0)
    rank = int(np.sum(diag > cutoff))
    kept = sorted(int(p) for p in pivots[:rank])
    dropped = sorted(int(p) for p in pivots[rank:])
    if not dropped:
        return kept, dropped, None

    basis = flat[kept].T
    for j in dropped:
        coeffs, *_ = np.linalg.lstsq(basis, flat[j], rcond=None)
        mismatch = real.b[j] - float(coeffs @ real.b[kept])
        if abs(mismatch) > tolerances.sdp_feasibility * (1.0 + abs(real.b[j])):
            y = np.zeros(m)
            y[kept] = -coeffs
            y[j] = 1.0
            y *= np.sign(mismatch)
            return kept, dropped, y / np.linalg.norm(y)
    return kept, dropped, None


# =============================================================================
# PUBLIC SOLVE
# =============================================================================

def solve(problem: SdpProblem, options: Optional[SolverOptions] = None) -> SdpSolution:
    """Solve a complex block SDP.

    Deterministic for identical inputs and options. A solve that does not
    converge returns status ``numerical-failure`` with the best iterate found;
    callers decide whether that is fatal (see ``SdpSolution.require_optimal``).
    """
    options = options or SolverOptions()
    tol = options.tolerances
    ok, errors = problem.validate(tol)
    if not ok:
        raise ContractViolation(f"invalid SDP {problem.name}: " + "; ".join(errors))

    started = time.perf_counter()
    real = realify(problem)
    kept, dropped, certificate = independent_constraints(real, tol)
    if dropped:
        _log.debug(f"{problem.name}: dropped {len(dropped)} dependent constraint(s)")

    m = real.num_constraints
    if certificate is not None:
        result = _RealResult(
            _Iterate([np.zeros((n, n)) for n in real.sizes], certificate, [np.zeros((n, n)) for n in real.sizes]),
            PRIMAL_INFEASIBLE, 0, certificate=certificate)
        y_full = certificate
    else:
        result = _solve_real(real.take(kept), options)
        y_full = np.zeros(m)
        y_full[kept] = result.iterate.y
        if result.certificate is not None:
            y_full = np.zeros(m)
            y_full[kept] = result.certificate

    X = {blk.label: complexify(x, blk.real) for blk, x in zip(problem.blocks, result.iterate.X)}
    S = {blk.label: (1.0 if blk.real else 2.0) * complexify(s, blk.real)
         for blk, s in zip(problem.blocks, result.iterate.S)}
    primal_value = float(sum(np.real(np.trace(c @ X[label])) for label, c in problem.objective.items()))
    dual_value = float(real.b @ y_full)
    solution = SdpSolution(
        primal_X=X,
        dual_y=y_full,
        dual_S=S,
        primal_value=primal_value,
        dual_value=dual_value,
        status=result.status,
        iterations=result.iterations,
        gap=result.iterate.gap,
        primal_residual=result.iterate.pinf,
        dual_residual=result.iterate.dinf,
        dropped_constraints=tuple(dropped),
        wall_time=time.perf_counter() - started,
    )
    if result.notes:
        _log.debug(f"{problem.name}: " + "; ".join(result.notes))
    _log.debug(f"{problem.name}: {solution.summary()}")
    return solution


# =============================================================================
# INDEPENDENT CHECKS AND EXPORT
# =============================================================================

@dataclass(frozen=True)
class SolutionCheck:
    primal_residual: float
    dual_residual: float
    min_eig_X: float
    min_eig_S: float
    relative_gap: float
    weak_duality_slack: float

    def is_valid(self, tolerances: Tolerances = TOLERANCES, scale: float = 10.0) -> Tuple[bool, List[str]]:
        """Compare the residuals against the solver tolerances (with headroom ``scale``)"""
        errors = []
        if self.primal_residual > scale * tolerances.sdp_feasibility:
            errors.append(f"primal residual {self.primal_residual:.3e}")
        if self.dual_residual > scale * tolerances.sdp_feasibility:
            errors.append(f"dual residual {self.dual_residual:.3e}")
        if self.min_eig_X < -tolerances.sdp_psd:
            errors.append(f"min eigenvalue of X {self.min_eig_X:.3e}")
        if self.min_eig_S < -tolerances.sdp_psd:
            errors.append(f"min eigenvalue of S {self.min_eig_S:.3e}")
        if self.relative_gap > scale * tolerances.sdp_gap:
            errors.append(f"relative gap {self.relative_gap:.3e}")
        if self.weak_duality_slack < -tolerances.sdp_weak_duality:
            errors.append(f"dual value exceeds primal value by {-self.weak_duality_slack:.3e}")
        return len(errors) == 0, errors


def check_solution(problem: SdpProblem, solution: SdpSolution) -> SolutionCheck:
    """Residuals of a solution recomputed from the complex problem data"""
    blocks = problem.blocks
    ax = np.array([
        sum(float(np.real(np.trace(a @ solution.primal_X[label]))) for label, a in con.coefficients.items())
        for con in problem.constraints])
    b = np.array([con.rhs for con in problem.constraints])
    primal = float(np.linalg.norm(b - ax)) / (1.0 + float(np.linalg.norm(b))) if b.size else 0.0

    dual_sq = 0.0
    c_sq = 0.0
    min_x = np.inf
    min_s = np.inf
    for blk in blocks:
        c = problem.objective.get(blk.label, np.zeros((blk.dim, blk.dim), dtype=np.complex128))
        aty = np.zeros_like(c)
        for yi, con in zip(solution.dual_y, problem.constraints):
            a = con.coefficients.get(blk.label)
            if a is not None:
                aty = aty + yi * a
        r = c - aty - solution.dual_S[blk.label]
        dual_sq += float(np.sum(np.abs(r) ** 2))
        c_sq += float(np.sum(np.abs(c) ** 2))
        min_x = min(min_x, float(linalg.eigvalsh(linalg.hermitian_part(solution.primal_X[blk.label]))[-1]))
        min_s = min(min_s, float(linalg.eigvalsh(linalg.hermitian_part(solution.dual_S[blk.label]))[-1]))
    dual = np.sqrt(dual_sq) / (1.0 + np.sqrt(c_sq))

    p, d = solution.primal_value, solution.dual_value
    return SolutionCheck(
        primal_residual=primal,
        dual_residual=float(dual),
        min_eig_X=min_x,
        min_eig_S=min_s,
        relative_gap=abs(p - d) / (1.0 + abs(p) + abs(d)),
        weak_duality_slack=p - d,
    )


def write_sdpa(problem: SdpProblem, path: str) -> str:
    """Write the realified problem in SDPA sparse format.

    SDPA's dual form is matched with c = b, F0 = -C, F_i = A_i, so the optimum
    SDPA reports is the negated optimum of this problem.
    """
    real = realify(problem)
    m = real.num_constraints
    lines = [
        f'"{problem.name}: realified; SDPA optimum = -(problem optimum)"',
        str(m),
        str(len(real.sizes)),
        " ".join(str(n) for n in real.sizes),
        " ".join(repr(float(v)) for v in real.b) if m else "",
    ]

    def entries(matno: int, blkno: int, mat: np.ndarray) -> None:
        n = mat.shape[0]
        for i in range(n):
            for j in range(i, n):
                v = float(mat[i, j])
                if v != 0.0:
                    lines.append(f"{matno} {blkno} {i + 1} {j + 1} {v!r}")

    for k, c in enumerate(real.C):
        entries(0, k + 1, -c)
    for i in range(m):
        for k, a in enumerate(real.A):
            entries(i + 1, k + 1, a[i])

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w') as f:
        f.write("\n".join(lines) + "\n")
    return path
