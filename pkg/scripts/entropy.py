#!/usr/bin/env python3
"""
Conditional min- and max-entropies (non-smooth and ε-smooth) and the Φ
functional, each reduced to a semidefinite program.

All values are in bits. Every SDP solved here is re-checked by
``sdp.check_solution`` and every returned witness is validated against the
program it came from.
"""

import itertools
import math
import os
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.optimize
import scipy.special

import linalg
import sdp
from entropy_lib import (
    TOLERANCES,
    Tolerances,
    EntropyLogger,
    LayoutError,
    NumericalFailure,
    PreconditionError,
)
from metrics import (
    Epsilon,
    as_epsilon,
    fidelity,
    gen_trace_distance,
    in_ball,
    uhlmann_match,
)
from quantum import (
    Operator,
    PureState,
    State,
    SystemLayout,
    embedding_isometry,
    fresh_label,
    make_rng,
    purify,
)

_log = EntropyLogger("smooth_entropy.entropy")

Labels = Union[str, Sequence[str]]

QUANTITIES = ("hmin", "hmax", "smooth-hmin", "smooth-hmax")


# =============================================================================
# SETTINGS AND SOLVE HELPER
# =============================================================================

@dataclass(frozen=True)
class SolveSettings:
    """Tolerances plus the optional SDPA dump directory"""

    tolerances: Tolerances = TOLERANCES
    dump_dir: Optional[str] = None
    check: bool = True


DEFAULT_SETTINGS = SolveSettings()

_dump_counter = itertools.count(1)
_dump_lock = threading.Lock()


def _solve(problem: sdp.SdpProblem, settings: SolveSettings) -> sdp.SdpSolution:
    if settings.dump_dir:
        with _dump_lock:
            number = next(_dump_counter)
        sdp.write_sdpa(problem, os.path.join(settings.dump_dir, f"{number:04d}-{problem.name}.dat-s"))
    solution = sdp.solve(problem, sdp.SolverOptions(settings.tolerances)).require_optimal(problem.name)
    if settings.check:
        check = sdp.check_solution(problem, solution)
        ok, errors = check.is_valid(settings.tolerances)
        if not ok:
            raise NumericalFailure(
                f"{problem.name}: post-hoc residual check failed: " + "; ".join(errors),
                residual=max(check.primal_residual, check.dual_residual, check.relative_gap),
                status=solution.status)
    return solution


def _log2(x: float, tolerances: Tolerances) -> Tuple[float, bool]:
    """log₂ x, or (−inf, True) for x below the log floor"""
    if not x > tolerances.log_floor:
        return -math.inf, True
    return math.log2(x), False


def _to_labels(labels: Labels) -> Tuple[str, ...]:
    if isinstance(labels, str):
        return tuple(p.strip() for p in labels.split(",") if p.strip())
    return tuple(labels)


# =============================================================================
# QUERY AND RESULT TYPES
# =============================================================================

@dataclass(frozen=True)
class EntropyQuery:
    """Entropy of ``target`` conditioned on ``conditioning`` at smoothing ``epsilon``"""

    state: State
    target: Tuple[str, ...]
    conditioning: Tuple[str, ...] = ()
    epsilon: Epsilon = field(default_factory=lambda: Epsilon(0.0))

    def __post_init__(self):
        target = _to_labels(self.target)
        conditioning = _to_labels(self.conditioning)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "conditioning", conditioning)
        object.__setattr__(self, "epsilon", as_epsilon(self.epsilon))
        if not target:
            raise LayoutError("entropy query needs at least one target factor")
        overlap = set(target) & set(conditioning)
        if overlap:
            raise LayoutError(f"target and conditioning share factors {sorted(overlap)}")
        for label in target + conditioning:
            self.state.layout.index(label)

    @classmethod
    def of(cls, state: State, target: Labels, conditioning: Labels = (),
           epsilon: Union[Epsilon, float] = 0.0) -> "EntropyQuery":
        return cls(state, _to_labels(target), _to_labels(conditioning), as_epsilon(epsilon))

    def with_epsilon(self, epsilon: Union[Epsilon, float]) -> "EntropyQuery":
        return EntropyQuery(self.state, self.target, self.conditioning, as_epsilon(epsilon))

    def with_state(self, state: State) -> "EntropyQuery":
        return EntropyQuery(state, self.target, self.conditioning, self.epsilon)

    @property
    def labels(self) -> Tuple[str, ...]:
        return self.target + self.conditioning

    @property
    def dims(self) -> Tuple[int, int]:
        layout = self.state.layout
        return layout.dim_of(self.target), layout.dim_of(self.conditioning)

    def marginal(self) -> State:
        """ρ on target ⊗ conditioning, in that factor order"""
        return self.state.marginal(list(self.labels))

    def conditioning_layout(self) -> SystemLayout:
        return self.state.layout.select(self.conditioning)


@dataclass
class EntropyResult:
    quantity: str
    value: float
    optimizer_sigma: Optional[State]
    smoothed_state: Optional[State]
    sdp_gap: float
    witness_residual: float
    sigma_trace: Optional[float] = None
    ball_slack: Optional[float] = None
    degenerate: bool = False
    iterations: int = 0


@dataclass
class PhiValue:
    value: float
    sigma: np.ndarray
    solution: Optional[sdp.SdpSolution]


# =============================================================================
# Φ AND NON-SMOOTH ENTROPIES
# =============================================================================

def _split_matrix(op: Operator, target: Sequence[str], conditioning: Sequence[str]) -> Tuple[np.ndarray, int, int]:
    labels = list(target) + list(conditioning)
    ordered = op.marginal(labels)
    return ordered.matrix, op.layout.dim_of(target), op.layout.dim_of(conditioning)


def _default_split(op: Operator, target, conditioning) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
    if target is None and conditioning is None:
        labels = op.layout.labels
        if len(labels) != 2:
            raise LayoutError(f"phi needs an explicit A|B split for layout {op.layout}")
        return (labels[0],), (labels[1],)
    return _to_labels(target or ()), _to_labels(conditioning or ())


def phi(rho: Operator, target: Optional[Labels] = None, conditioning: Optional[Labels] = None,
        settings: SolveSettings = DEFAULT_SETTINGS) -> PhiValue:
    """Φ(ρ) = inf{tr σ : ρ <= I_A ⊗ σ_B} for Hermitian ρ.

    Solved as the dual of max <ρ, Y> s.t. tr_A Y = I_B, Y >= 0, with ρ
    pre-scaled to unit Frobenius norm.
    """
    target, conditioning = _default_split(rho, target, conditioning)
    m, d_a, d_b = _split_matrix(rho, target, conditioning)
    scale = float(np.linalg.norm(m))
    if scale == 0.0:
        return PhiValue(0.0, np.zeros((d_b, d_b), dtype=np.complex128), None)

    builder = sdp.ProblemBuilder("phi")
    builder.add_block("Y", d_a * d_b)
    builder.set_objective("Y", -m / scale)
    handle = builder.add_operator_equality([("Y", sdp.partial_trace_map(d_a, d_b))], np.eye(d_b))
    solution = _solve(builder.build(), settings)

    sigma = -handle.multiplier(solution) * scale
    value = -solution.dual_value * scale
    return PhiValue(value, sigma, solution)


def _require_unsmoothed(query: EntropyQuery, name: str) -> None:
    if query.epsilon.value != 0.0:
        raise PreconditionError(f"{name} is the non-smooth entropy; use smooth-{name} for epsilon > 0")


def _sigma_state(sigma: np.ndarray, layout: SystemLayout) -> Optional[State]:
    """Normalized PSD witness σ/tr σ"""
    sigma = linalg.project_psd(sigma)
    trace = float(np.real(np.trace(sigma)))
    if not trace > 0.0:
        return None
    return State(layout, sigma / trace)


def hmin(query: EntropyQuery, settings: SolveSettings = DEFAULT_SETTINGS) -> EntropyResult:
    """Hmin(A|B) = −log Φ(ρ_AB)"""
    _require_unsmoothed(query, "hmin")
    tol = settings.tolerances
    rho = query.marginal()
    d_a, d_b = query.dims
    result = phi(rho, query.target, query.conditioning, settings)
    log_phi, degenerate = _log2(result.value, tol)

    residual = max(0.0, -float(linalg.eigvalsh(
        linalg.hermitian_part(np.kron(np.eye(d_a), result.sigma) - rho.matrix), tol)[-1]))
    if residual > tol.witness:
        raise NumericalFailure(f"hmin witness violates I⊗σ >= ρ by {residual:.3e}", residual=residual)

    solution = result.solution
    return EntropyResult(
        quantity="hmin",
        value=-log_phi,
        optimizer_sigma=_sigma_state(result.sigma, query.conditioning_layout()),
        smoothed_state=None,
        sdp_gap=solution.gap if solution else 0.0,
        witness_residual=residual,
        sigma_trace=result.value,
        degenerate=degenerate,
        iterations=solution.iterations if solution else 0,
    )


def _offdiagonal_coupling(top: int, bottom: int, k: np.ndarray) -> np.ndarray:
    """G with <G, Z> = Re tr(K Z[top:, :top]) for Z of size top + bottom; K is top x bottom"""
    n = top + bottom
    g = np.zeros((n, n), dtype=np.complex128)
    g[:top, top:] = 0.5 * k
    g[top:, :top] = 0.5 * k.conj().T
    return g


def hmax(query: EntropyQuery, settings: SolveSettings = DEFAULT_SETTINGS) -> EntropyResult:
    """Hmax(A|B) = max_σ log F(ρ_AB, I_A ⊗ σ_B)², tr σ = 1.

    Fidelity is the optimum of max Re tr(Y V) s.t. [[Λ, Y], [Y†, I⊗σ]] >= 0,
    where ρ = VΛV† is the support decomposition of ρ.
    """
    _require_unsmoothed(query, "hmax")
    tol = settings.tolerances
    rho = query.marginal()
    d_a, d_b = query.dims
    d = d_a * d_b
    values, vectors = linalg.support(rho.matrix, tol.replace(rank=tol.sdp_rank))
    r = values.size
    n = r + d

    builder = sdp.ProblemBuilder("hmax")
    builder.add_block("Z", n)
    builder.add_block("sigma", d_b)
    # Re tr(Y V) with Y = Z[:r, r:]  <=>  coupling of Z[r:, :r] with V†
    builder.set_objective("Z", -_offdiagonal_coupling(r, d, vectors.conj().T))
    builder.add_operator_equality([("Z", sdp.principal_submatrix(n, 0, r))], np.diag(values))
    builder.add_operator_equality(
        [("Z", sdp.principal_submatrix(n, r, d)),
         ("sigma", sdp.scaled_map(sdp.identity_tensor(d_a, d_b), -1.0))],
        np.zeros((d, d)))
    builder.add_constraint({"sigma": np.eye(d_b)}, 1.0)
    solution = _solve(builder.build(), settings)

    opt = -solution.primal_value
    log_opt, degenerate = _log2(opt, tol)
    sigma = linalg.project_psd(solution.primal_X["sigma"])
    sigma = sigma / float(np.real(np.trace(sigma)))
    witness_f = fidelity(rho.matrix, np.kron(np.eye(d_a), sigma), tol)
    residual = abs(witness_f - opt)
    if residual > tol.witness * (1.0 + opt):
        raise NumericalFailure(
            f"hmax witness fidelity {witness_f:.12g} disagrees with SDP optimum {opt:.12g}",
            residual=residual)

    return EntropyResult(
        quantity="hmax",
        value=2.0 * log_opt,
        optimizer_sigma=State(query.conditioning_layout(), sigma),
        smoothed_state=None,
        sdp_gap=solution.gap,
        witness_residual=residual,
        sigma_trace=1.0,
        degenerate=degenerate,
        iterations=solution.iterations,
    )


def fidelity_sdp(rho, tau, settings: SolveSettings = DEFAULT_SETTINGS) -> Tuple[float, sdp.SdpSolution]:
    """F(ρ, τ) as max Re tr(Y W†V) s.t. [[Λ, Y], [Y†, M]] >= 0 with ρ = VΛV†, τ = WMW†"""
    tol = settings.tolerances.replace(rank=settings.tolerances.sdp_rank)
    lam, v = linalg.support(rho.matrix, tol)
    mu, w = linalg.support(tau.matrix, tol)
    r1, r2 = lam.size, mu.size
    n = r1 + r2
    builder = sdp.ProblemBuilder("fidelity")
    builder.add_block("Z", n)
    builder.set_objective("Z", -_offdiagonal_coupling(r1, r2, v.conj().T @ w))
    builder.add_operator_equality([("Z", sdp.principal_submatrix(n, 0, r1))], np.diag(lam))
    builder.add_operator_equality([("Z", sdp.principal_submatrix(n, r1, r2))], np.diag(mu))
    solution = _solve(builder.build(), settings)
    return -solution.value, solution


# =============================================================================
# SMOOTH ENTROPIES
# =============================================================================

def _require_normalized(rho: State, name: str) -> None:
    if abs(rho.trace - 1.0) > 1e-9:
        raise PreconditionError(f"{name} needs a normalized state (trace {rho.trace:.12g})")


def _clamped_state(layout: SystemLayout, matrix: np.ndarray) -> State:
    m = linalg.project_psd(matrix)
    trace = float(np.real(np.trace(m)))
    if trace > 1.0:
        m = m / trace
    return State(layout, m)


def smooth_hmin(query: EntropyQuery, settings: SolveSettings = DEFAULT_SETTINGS) -> EntropyResult:
    """Hmin^ε(A|B): minimize tr σ over (ρ̃, σ, Y) with

        I⊗σ − ρ̃ >= 0,  tr ρ̃ <= 1,  [[ρ̃, Y], [Y†, Λ]] >= 0,  Re tr(V†Y) >= √(1 − ε²)

    for the support decomposition ρ = VΛV†. ε = 0 is the non-smooth entropy.
    """
    tol = settings.tolerances
    rho = query.marginal()
    _require_normalized(rho, "smooth-hmin")
    eps = query.epsilon
    eps.require_below_norm(rho)

    if eps.value == 0.0:
        base = hmin(query, settings)
        base.quantity = "smooth-hmin"
        base.smoothed_state = rho
        base.ball_slack = 0.0
        return base

    d_a, d_b = query.dims
    d = d_a * d_b
    values, vectors = linalg.support(rho.matrix, tol.replace(rank=tol.sdp_rank))
    r = values.size
    n = d + r

    builder = sdp.ProblemBuilder("smooth_hmin")
    builder.add_block("Z", n)
    builder.add_block("sigma", d_b)
    builder.set_objective("sigma", np.eye(d_b))
    builder.add_operator_equality([("Z", sdp.principal_submatrix(n, d, r))], np.diag(values))
    builder.add_operator_inequality(
        [("Z", sdp.principal_submatrix(n, 0, d)),
         ("sigma", sdp.scaled_map(sdp.identity_tensor(d_a, d_b), -1.0))],
        np.zeros((d, d)), "<=")
    builder.add_inequality({"Z": linalg.embed_top_left(np.eye(d), n)}, 1.0, "<=")
    builder.add_inequality({"Z": _offdiagonal_coupling(d, r, vectors)}, math.sqrt(1.0 - eps.value ** 2), ">=")
    solution = _solve(builder.build(), settings)

    sigma = solution.primal_X["sigma"]
    smoothed = _clamped_state(rho.layout, solution.primal_X["Z"][:d, :d])
    conic = max(0.0, -float(linalg.eigvalsh(
        linalg.hermitian_part(np.kron(np.eye(d_a), sigma) - smoothed.matrix), tol)[-1]))
    ball = in_ball(smoothed, rho, eps, tolerances=tol)
    residual = max(conic, max(0.0, -ball.slack))
    if conic > tol.witness or ball.slack < -tol.ball_slack:
        raise NumericalFailure(
            f"smoothing witness invalid (conic violation {conic:.3e}, ball slack {ball.slack:.3e})",
            residual=residual)

    opt = solution.primal_value
    log_opt, degenerate = _log2(opt, tol)
    return EntropyResult(
        quantity="smooth-hmin",
        value=-log_opt,
        optimizer_sigma=_sigma_state(sigma, query.conditioning_layout()),
        smoothed_state=smoothed,
        sdp_gap=solution.gap,
        witness_residual=residual,
        sigma_trace=opt,
        ball_slack=ball.slack,
        degenerate=degenerate,
        iterations=solution.iterations,
    )


def _lift_to_conditioning(phi_abc: PureState, query: EntropyQuery, rho_ac: State, tilde_ac: State,
                          tolerances: Tolerances) -> State:
    """Ball member ρ̄_AB whose Hmax(A|B) is at most −Hmin(A|C) of ρ̃_AC.

    Matches ρ̃_AC to the purification ρ_ABC (purifier B), enlarging B first if
    it is smaller than rank(ρ̃_AC), and projects the enlarged factor back onto B.
    """
    conditioning = list(query.conditioning)
    if not conditioning:
        raise LayoutError("smooth-hmax witness lifting needs a conditioning system")
    d_b = phi_abc.layout.dim_of(conditioning)
    needed = tilde_ac.rank(tolerances)
    if needed <= d_b:
        theta = uhlmann_match(rho_ac, tilde_ac, phi_abc, tolerances)
        return theta.to_state().marginal(list(query.labels))

    big = fresh_label(phi_abc.layout, "B")
    source = phi_abc.layout.select(conditioning)
    embedding = embedding_isometry(SystemLayout(((big, d_b),)), SystemLayout(((big, needed),))).matrix
    phi = phi_abc.apply_local(embedding, conditioning, SystemLayout(((big, needed),)))
    theta = uhlmann_match(rho_ac, tilde_ac, phi, tolerances)
    theta = theta.apply_local(embedding.conj().T, [big], source)
    return theta.to_state().marginal(list(query.labels))


def smooth_hmax(query: EntropyQuery, settings: SolveSettings = DEFAULT_SETTINGS,
                witness: bool = True) -> EntropyResult:
    """Hmax^ε(A|B) = −Hmin^ε(A|C) on the canonical purification ρ_ABC.

    With ``witness`` the smoothed state is lifted back to a ball member ρ̄_AB
    and its σ_B comes from the hmax program of ρ̄_AB.
    """
    tol = settings.tolerances
    rho = query.marginal()
    _require_normalized(rho, "smooth-hmax")
    query.epsilon.require_below_norm(rho)

    purifier = fresh_label(rho.layout, "C")
    phi_abc = purify(rho, purifier, tolerances=tol)
    dual_query = EntropyQuery(phi_abc.to_state(), query.target, (purifier,), query.epsilon)
    inner = smooth_hmin(dual_query, settings)

    result = EntropyResult(
        quantity="smooth-hmax",
        value=-inner.value,
        optimizer_sigma=None,
        smoothed_state=None,
        sdp_gap=inner.sdp_gap,
        witness_residual=inner.witness_residual,
        sigma_trace=None,
        ball_slack=None,
        degenerate=inner.degenerate,
        iterations=inner.iterations,
    )
    if not witness or not query.conditioning:
        return result

    rho_ac = dual_query.marginal()
    lifted = _lift_to_conditioning(phi_abc, query, rho_ac, inner.smoothed_state, tol)
    ball = in_ball(lifted, rho, query.epsilon, tolerances=tol)
    check = hmax(query.with_state(lifted).with_epsilon(0.0), settings)
    # the lifted member can only do better than the smooth optimum
    excess = max(0.0, check.value - result.value)
    if ball.slack < -tol.ball_slack:
        raise NumericalFailure(f"lifted smooth-hmax witness left the ball (slack {ball.slack:.3e})",
                               residual=-ball.slack)
    result.smoothed_state = lifted
    result.optimizer_sigma = check.optimizer_sigma
    result.sigma_trace = 1.0
    result.ball_slack = ball.slack
    result.witness_residual = max(result.witness_residual, excess)
    result.iterations += check.iterations
    return result


def compute(quantity: str, query: EntropyQuery, settings: SolveSettings = DEFAULT_SETTINGS) -> EntropyResult:
    """Dispatch on the quantity name ("hmin", "hmax", "smooth-hmin", "smooth-hmax")"""
    if quantity == "hmin":
        return hmin(query, settings)
    if quantity == "hmax":
        return hmax(query, settings)
    if quantity == "smooth-hmin":
        return smooth_hmin(query, settings)
    if quantity == "smooth-hmax":
        return smooth_hmax(query, settings)
    raise PreconditionError(f"unknown entropy quantity {quantity!r}; expected one of {QUANTITIES}")


# =============================================================================
# BOUNDS AND CONTINUITY
# =============================================================================

@dataclass
class BoundsReport:
    """Signed margins (>= 0 means the inequality holds)"""

    margins: Dict[str, float]
    hmin: float
    hmax: float
    trace: float
    tolerance: float = 1e-7

    @property
    def holds(self) -> bool:
        return all(m >= -self.tolerance for m in self.margins.values())

    def violations(self) -> List[str]:
        return [name for name, m in self.margins.items() if m < -self.tolerance]


def _schmidt_rank(vector: np.ndarray, d_a: int, d_b: int, cutoff: float = 1e-10) -> int:
    s = np.linalg.svd(vector.reshape(d_a, d_b), compute_uv=False)
    return int(np.sum(s > cutoff * max(1.0, float(s[0]))))


def hmin_hmax_bounds_check(query: EntropyQuery, settings: SolveSettings = DEFAULT_SETTINGS) -> BoundsReport:
    """Dimension bounds of both entropies, the sub-normalized ordering, and the
    spectral bound Φ(ρ) <= Σ_{λ_i > 0} λ_i · SchmidtRank(φ_i)."""
    rho = query.marginal()
    d_a, d_b = query.dims
    d_min = min(d_a, d_b)
    log_tr = math.log2(rho.trace)
    h_min = hmin(query.with_epsilon(0.0), settings)
    h_max = hmax(query.with_epsilon(0.0), settings)

    values, vectors = linalg.herm_eig(rho.matrix, tolerances=settings.tolerances)
    spectral = sum(float(lam) * _schmidt_rank(vectors[:, i], d_a, d_b)
                   for i, lam in enumerate(values) if lam > settings.tolerances.psd_clamp)
    phi_value = h_min.sigma_trace

    margins = {
        "hmin-lower": (h_min.value + log_tr) + math.log2(d_min),
        "hmin-upper": math.log2(d_a) - (h_min.value + log_tr),
        "hmax-lower": (h_max.value - log_tr) + math.log2(d_min),
        "hmax-upper": math.log2(d_a) - (h_max.value - log_tr),
        "ordering": (h_max.value - log_tr) - (h_min.value + log_tr),
        "phi-spectral": spectral - phi_value,
    }
    return BoundsReport(margins, h_min.value, h_max.value, rho.trace)


@dataclass(frozen=True)
class ContinuityBound:
    lhs: float
    rhs: float
    delta: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else 0.0


def continuity_bound(rho: State, tau: State, target: Labels, conditioning: Labels,
                     settings: SolveSettings = DEFAULT_SETTINGS) -> ContinuityBound:
    """|Hmin(ρ) − Hmin(τ)| against d_A·d_min·δ / (ln 2 · min{tr ρ, tr τ}), δ = D̄(ρ, τ)"""
    q_rho = EntropyQuery.of(rho, target, conditioning)
    q_tau = EntropyQuery.of(tau, target, conditioning)
    a = q_rho.marginal()
    b = q_tau.marginal()
    delta = gen_trace_distance(a, b, settings.tolerances)
    d_a, d_b = q_rho.dims
    lhs = abs(hmin(q_rho, settings).value - hmin(q_tau, settings).value)
    rhs = d_a * min(d_a, d_b) * delta / (math.log(2.0) * min(a.trace, b.trace))
    return ContinuityBound(lhs, rhs, delta)


def tightness_pair(d_a: int, d_extra: int, delta: float) -> Tuple[State, State]:
    """ρ = I/d_A ⊗ ρ_B and τ = ρ + δψ with B = A′ ⊕ B′.

    ψ is maximally entangled between A and the A′ ⊂ B block; ρ_B is maximally
    mixed on B′ with trace 1 − δ so that τ is normalized.
    """
    if not 0.0 < delta < 1.0:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")
    if d_extra < 1:
        raise PreconditionError("the B′ block needs dimension >= 1")
    d_b = d_a + d_extra
    layout = SystemLayout((("A", d_a), ("B", d_b)))
    rho_b = np.zeros((d_b, d_b), dtype=np.complex128)
    rho_b[d_a:, d_a:] = (1.0 - delta) * np.eye(d_extra) / d_extra
    rho = np.kron(np.eye(d_a) / d_a, rho_b)

    psi = np.zeros((d_a, d_b), dtype=np.complex128)
    psi[:, :d_a] = np.eye(d_a) / math.sqrt(d_a)
    psi = psi.reshape(-1)
    tau = rho + delta * np.outer(psi, psi.conj())
    return State(layout, rho), State(layout, tau)


# =============================================================================
# NESTED ORACLE FOR SMOOTH HMAX
# =============================================================================

@dataclass
class OracleResult:
    value: float
    warm_start_value: float
    smooth_value: float
    evaluations: int
    best_state: Optional[State]


def _givens(v: np.ndarray, pairs: Sequence[Tuple[int, int]], angles: np.ndarray) -> np.ndarray:
    v = v.copy()
    for (i, j), (theta, phase) in zip(pairs, angles.reshape(-1, 2)):
        c, s = math.cos(theta), math.sin(theta)
        vi, vj = v[i], v[j]
        v[i] = c * vi - np.exp(-1j * phase) * s * vj
        v[j] = np.exp(1j * phase) * s * vi + c * vj
    return v


def maxepsball_oracle(query: EntropyQuery, budget: int = 500, restarts: int = 3, rotations: int = 8,
                      seed: int = 0, settings: SolveSettings = DEFAULT_SETTINGS) -> OracleResult:
    """min over the ε-ball of Hmax, searched directly.

    Ball members are marginals of ϑ = αφ + βχ, where φ purifies ρ_AB,
    α >= √(1 − ε²), α² + β² <= 1 and χ ⊥ φ is a Givens-rotated direction. The
    search starts at the lifted smooth-hmax witness and runs Powell's method
    with random restarts; each evaluation is one hmax solve.
    """
    tol = settings.tolerances
    rho = query.marginal()
    _require_normalized(rho, "maxepsball oracle")
    eps = query.epsilon.value
    smooth = smooth_hmax(query, settings, witness=True)
    if eps == 0.0 or smooth.smoothed_state is None:
        return OracleResult(smooth.value, smooth.value, smooth.value, 0, smooth.smoothed_state)

    warm_state = smooth.smoothed_state
    label = fresh_label(rho.layout, "R")
    d_r = max(rho.rank(tol), warm_state.rank(tol), 1)
    phi_vec = purify(rho, label, d_r, tol)
    theta0 = uhlmann_match(rho, warm_state, phi_vec, tol)

    v_phi = phi_vec.amplitudes
    v0 = theta0.amplitudes
    rng = make_rng(seed)
    alpha0 = float(np.real(np.vdot(v_phi, v0)))
    residual = v0 - alpha0 * v_phi
    beta0 = float(np.linalg.norm(residual))
    if beta0 > 1e-12:
        chi0 = residual / beta0
    else:
        z = rng.normal(size=v_phi.size) + 1j * rng.normal(size=v_phi.size)
        z = z - np.vdot(v_phi, z) * v_phi
        chi0 = z / np.linalg.norm(z)

    a_min = math.sqrt(1.0 - eps ** 2)
    clip = 1e-9
    p0 = scipy.special.logit(np.clip((alpha0 - a_min) / (1.0 - a_min), clip, 1.0 - clip))
    q0 = scipy.special.logit(np.clip(beta0 / max(math.sqrt(max(0.0, 1.0 - alpha0 ** 2)), 1e-300),
                                     clip, 1.0 - clip))

    all_pairs = [(i, j) for i in range(v_phi.size) for j in range(i + 1, v_phi.size)]
    evaluations = 0
    best = {"value": math.inf, "state": None}

    def candidate(x: np.ndarray, pairs) -> State:
        alpha = a_min + (1.0 - a_min) * scipy.special.expit(x[0])
        beta = math.sqrt(max(0.0, 1.0 - alpha ** 2)) * scipy.special.expit(x[1])
        chi = _givens(chi0, pairs, x[2:])
        chi = chi - np.vdot(v_phi, chi) * v_phi
        norm = np.linalg.norm(chi)
        chi = chi / norm if norm > 1e-12 else chi0
        vec = PureState(phi_vec.layout, alpha * v_phi + beta * chi)
        return vec.to_state().marginal(list(query.labels))

    def objective(x: np.ndarray, pairs) -> float:
        nonlocal evaluations
        evaluations += 1
        state = candidate(x, pairs)
        try:
            value = hmax(EntropyQuery(state, query.target, query.conditioning), settings).value
        except NumericalFailure:
            return 1e6
        if value < best["value"]:
            best["value"], best["state"] = value, state
        return value

    warm_value = objective(np.array([p0, q0]), [])
    per_restart = max(1, (budget - 1) // max(1, restarts))
    for restart in range(restarts):
        k = min(rotations, len(all_pairs))
        chosen = [all_pairs[i] for i in rng.choice(len(all_pairs), size=k, replace=False)] if k else []
        x0 = np.concatenate([[p0, q0], np.zeros(2 * k)])
        if restart > 0:
            x0 = x0 + np.concatenate([rng.normal(0.0, 0.5, 2), rng.normal(0.0, 0.3, 2 * k)])
        scipy.optimize.minimize(objective, x0, args=(chosen,), method="Powell",
                                options={"maxfev": per_restart, "xtol": 1e-4, "ftol": 1e-10})
        if evaluations >= budget:
            break

    _log.debug(f"maxepsball oracle: {evaluations} evaluations, warm {warm_value:.9f}, best {best['value']:.9f}")
    return OracleResult(best["value"], warm_value, smooth.value, evaluations, best["state"])
