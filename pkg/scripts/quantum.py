#!/usr/bin/env python3
"""
Quantum state and channel model.

Multipartite layouts, sub-normalized states, pure states, channels in Kraus
form, isometries, purification and embeddings, plus the seeded random
generators that feed the verification suites.
"""

import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from numpy.random import Generator, Philox, SeedSequence

import linalg
from entropy_lib import (
    TOLERANCES,
    Tolerances,
    ContractViolation,
    LayoutError,
    NotPSDError,
    InsufficientDimensionError,
    PreconditionError,
)


# =============================================================================
# LAYOUTS
# =============================================================================

_LABEL_PATTERN = re.compile(r'^[A-Za-z][A-Za-z0-9_\']{0,15}$')


@dataclass(frozen=True)
class SystemLayout:
    """Ordered labeled tensor factors, e.g. (("A", 2), ("B", 3))"""

    factors: Tuple[Tuple[str, int], ...] = ()

    def __post_init__(self):
        factors = tuple((str(label), int(dim)) for label, dim in self.factors)
        object.__setattr__(self, "factors", factors)
        labels = [label for label, _ in factors]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate factor labels in {labels}")
        for label, dim in factors:
            if not _LABEL_PATTERN.match(label):
                raise LayoutError(f"invalid factor label {label!r}")
            if dim < 1:
                raise LayoutError(f"factor {label} has dimension {dim} < 1")

    @classmethod
    def of(cls, *pairs: Tuple[str, int], **dims: int) -> "SystemLayout":
        """SystemLayout.of(("A", 2), ("B", 2)) or SystemLayout.of(A=2, B=2)"""
        return cls(tuple(pairs) + tuple(dims.items()))

    @classmethod
    def parse(cls, profile: str) -> "SystemLayout":
        """Parse "A:2,B:3" or "2,3" (labels A, B, C, ... assigned in order)"""
        parts = [p.strip() for p in profile.split(",") if p.strip()]
        if not parts:
            raise LayoutError(f"empty layout profile {profile!r}")
        factors = []
        for i, part in enumerate(parts):
            if ":" in part:
                label, dim = part.split(":", 1)
            else:
                label, dim = chr(ord("A") + i), part
            try:
                factors.append((label.strip(), int(dim)))
            except ValueError:
                raise LayoutError(f"bad dimension in layout profile {profile!r}")
        return cls(tuple(factors))

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(label for label, _ in self.factors)

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(dim for _, dim in self.factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims)) if self.factors else 1

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown factor label {label!r} (layout {self})")

    def dim_of(self, labels: Iterable[str]) -> int:
        out = 1
        for label in labels:
            out *= self.dims[self.index(label)]
        return out

    def select(self, labels: Iterable[str]) -> "SystemLayout":
        return SystemLayout(tuple((label, self.dims[self.index(label)]) for label in labels))

    def without(self, labels: Iterable[str]) -> "SystemLayout":
        drop = set(labels)
        for label in drop:
            self.index(label)
        return SystemLayout(tuple(f for f in self.factors if f[0] not in drop))

    def tensor(self, other: "SystemLayout") -> "SystemLayout":
        return SystemLayout(self.factors + other.factors)

    def with_dims(self, dims: Dict[str, int]) -> "SystemLayout":
        for label in dims:
            self.index(label)
        return SystemLayout(tuple((label, int(dims.get(label, dim))) for label, dim in self.factors))

    def relabel(self, mapping: Dict[str, str]) -> "SystemLayout":
        return SystemLayout(tuple((mapping.get(label, label), dim) for label, dim in self.factors))

    def permutation_to(self, labels: Sequence[str]) -> List[int]:
        """Factor positions that bring this layout into the order ``labels``"""
        if sorted(labels) != sorted(self.labels):
            raise LayoutError(f"{tuple(labels)} is not a reordering of {self.labels}")
        return [self.index(label) for label in labels]

    def __str__(self) -> str:
        return ",".join(f"{label}:{dim}" for label, dim in self.factors) or "<trivial>"


# =============================================================================
# RANDOMNESS
# =============================================================================

def make_rng(seed: Union[int, Generator, None] = None, *stream: int) -> Generator:
    """Counter-based (Philox) generator for ``seed`` and an optional stream key.

    ``make_rng(seed, suite_key, trial)`` gives independent, reproducible streams
    per trial regardless of execution order.
    """
    if isinstance(seed, Generator):
        return seed
    if seed is None:
        seed = 0
    sequence = SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return Generator(Philox(sequence))


def _randnz(shape: Tuple[int, ...], rng: Generator, norm: float = np.sqrt(0.5)) -> np.ndarray:
    """Standard complex normal variates"""
    return (rng.normal(size=shape) + 1j * rng.normal(size=shape)) * norm


def _haar_unitary(n: int, rng: Generator) -> np.ndarray:
    z = _randnz((n, n), rng)
    q, r = scipy.linalg.qr(z)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases


# =============================================================================
# OPERATORS AND STATES
# =============================================================================

class Operator:
    """Hermitian matrix tagged with a SystemLayout"""

    def __init__(self, layout: SystemLayout, matrix, tolerances: Tolerances = TOLERANCES):
        matrix = linalg.require_hermitian(matrix, tolerances)
        if matrix.shape != (layout.total_dim, layout.total_dim):
            raise LayoutError(
                f"matrix shape {matrix.shape} does not match layout {layout} "
                f"(dimension {layout.total_dim})")
        matrix.setflags(write=False)
        self._layout = layout
        self._matrix = matrix

    @property
    def layout(self) -> SystemLayout:
        return self._layout

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._layout.total_dim

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self._matrix)))

    def eigenvalues(self) -> np.ndarray:
        return linalg.eigvalsh(self._matrix)

    def reorder(self, labels: Sequence[str]) -> "Operator":
        order = self._layout.permutation_to(labels)
        matrix = linalg.permute_systems(self._matrix, self._layout.dims, order)
        return type(self)._rebuild(self, self._layout.select(labels), matrix)

    def partial_trace(self, labels: Iterable[str]) -> "Operator":
        matrix, layout = linalg.partial_trace(self._matrix, self._layout, labels)
        return type(self)._rebuild(self, layout, matrix)

    def marginal(self, keep: Sequence[str]) -> "Operator":
        """Trace out everything except ``keep`` and order factors as ``keep``"""
        drop = [label for label in self._layout.labels if label not in set(keep)]
        return self.partial_trace(drop).reorder(keep)

    def relabel(self, mapping: Dict[str, str]) -> "Operator":
        return type(self)._rebuild(self, self._layout.relabel(mapping), self._matrix)

    @classmethod
    def _rebuild(cls, original, layout: SystemLayout, matrix) -> "Operator":
        return cls(layout, matrix)

    def __add__(self, other: "Operator") -> "Operator":
        _require_same_layout(self, other)
        return Operator(self._layout, self._matrix + other._matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        _require_same_layout(self, other)
        return Operator(self._layout, self._matrix - other._matrix)

    def scaled(self, factor: float) -> "Operator":
        return Operator(self._layout, factor * self._matrix)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(layout={self._layout}, trace={self.trace:.6g})"


def _require_same_layout(a, b) -> None:
    if a.layout != b.layout:
        raise LayoutError(f"layout mismatch: {a.layout} vs {b.layout}")


class State(Operator):
    """Sub-normalized density operator: PSD, 0 < tr <= 1"""

    def __init__(self, layout: SystemLayout, matrix, tolerances: Tolerances = TOLERANCES):
        matrix = linalg.require_hermitian(matrix, tolerances)
        values, vectors = linalg.herm_eig(matrix, tolerances=tolerances)
        if values.size and values[-1] < -tolerances.state_psd:
            raise NotPSDError(f"state has eigenvalue {values[-1]:.3e} below -{tolerances.state_psd:g}")
        if values.size and values[-1] < 0.0:
            matrix = linalg.hermitian_part(linalg.reconstruct(np.clip(values, 0.0, None), vectors))
        trace = float(np.real(np.trace(matrix)))
        if not trace > 0.0:
            raise PreconditionError("state must have positive trace")
        if trace > 1.0 + tolerances.trace_slack:
            raise PreconditionError(f"state trace {trace:.15g} exceeds 1")
        super().__init__(layout, matrix, tolerances)

    @classmethod
    def _rebuild(cls, original, layout, matrix):
        return cls(layout, matrix)

    @classmethod
    def from_operator(cls, op: Operator) -> "State":
        return cls(op.layout, op.matrix)

    def is_normalized(self, tol: float = 1e-9) -> bool:
        return abs(self.trace - 1.0) <= tol

    def normalized(self) -> "State":
        return State(self.layout, self.matrix / self.trace)

    def scaled(self, factor: float) -> "State":
        return State(self.layout, factor * self.matrix)

    def rank(self, tolerances: Tolerances = TOLERANCES) -> int:
        return linalg.rank(self.matrix, tolerances)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def mix(self, other: "State", weight: float) -> "State":
        """(1 - weight) * self + weight * other"""
        _require_same_layout(self, other)
        return State(self.layout, (1.0 - weight) * self.matrix + weight * other.matrix)


class PureState:
    """Vector |φ> with 0 < <φ|φ> <= 1; as a State its matrix is |φ><φ|"""

    def __init__(self, layout: SystemLayout, amplitudes, tolerances: Tolerances = TOLERANCES):
        amplitudes = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        if amplitudes.size != layout.total_dim:
            raise LayoutError(
                f"{amplitudes.size} amplitudes do not match layout {layout} "
                f"(dimension {layout.total_dim})")
        norm_squared = float(np.real(np.vdot(amplitudes, amplitudes)))
        if not norm_squared > 0.0:
            raise PreconditionError("pure state must be non-zero")
        if norm_squared > 1.0 + tolerances.trace_slack:
            raise PreconditionError(f"pure state norm squared {norm_squared:.15g} exceeds 1")
        amplitudes.setflags(write=False)
        self._layout = layout
        self._amplitudes = amplitudes

    @property
    def layout(self) -> SystemLayout:
        return self._layout

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amplitudes

    @property
    def norm_squared(self) -> float:
        return float(np.real(np.vdot(self._amplitudes, self._amplitudes)))

    @property
    def trace(self) -> float:
        return self.norm_squared

    @property
    def matrix(self) -> np.ndarray:
        return np.outer(self._amplitudes, self._amplitudes.conj())

    def to_state(self) -> State:
        return State(self._layout, self.matrix)

    def overlap(self, other: "PureState") -> complex:
        _require_same_layout(self, other)
        return complex(np.vdot(self._amplitudes, other._amplitudes))

    def reorder(self, labels: Sequence[str]) -> "PureState":
        order = self._layout.permutation_to(labels)
        amplitudes = linalg.permute_vector(self._amplitudes, self._layout.dims, order)
        return PureState(self._layout.select(labels), amplitudes)

    def marginal(self, keep: Sequence[str]) -> State:
        return self.to_state().marginal(keep)

    def apply_local(self, matrix, labels: Sequence[str], output: SystemLayout) -> "PureState":
        """Apply an operator (output_dim x input_dim) to the labeled factors.

        The factors are replaced in place by ``output``'s factors.
        """
        rest = [label for label in self._layout.labels if label not in set(labels)]
        ordered = self.reorder(rest + list(labels))
        d_rest = self._layout.dim_of(rest)
        d_in = self._layout.dim_of(labels)
        matrix = linalg.as_cmatrix(matrix)
        if matrix.shape[1] != d_in or matrix.shape[0] != output.total_dim:
            raise LayoutError(f"operator shape {matrix.shape} does not map {d_in} -> {output.total_dim}")
        psi = ordered.amplitudes.reshape(d_rest, d_in) @ matrix.T
        layout = self._layout.select(rest).tensor(output)
        out = PureState(layout, psi.reshape(-1))
        return out.reorder(_replaced_order(self._layout.labels, labels, output.labels))

    def __repr__(self) -> str:
        return f"PureState(layout={self._layout}, norm_squared={self.norm_squared:.6g})"


def _replaced_order(original: Sequence[str], replaced: Sequence[str], new: Sequence[str]) -> List[str]:
    """Original label order with ``replaced`` swapped for ``new`` at the first replaced slot"""
    replaced_set = set(replaced)
    out: List[str] = []
    inserted = False
    for label in original:
        if label in replaced_set:
            if not inserted:
                out.extend(new)
                inserted = True
        else:
            out.append(label)
    if not inserted:
        out.extend(new)
    return out


# =============================================================================
# CHANNELS AND ISOMETRIES
# =============================================================================

@dataclass(frozen=True)
class Channel:
    """Completely positive trace non-increasing map in Kraus form"""

    input_layout: SystemLayout
    output_layout: SystemLayout
    kraus: Tuple[np.ndarray, ...]
    trace_preserving: bool = True
    tolerances: Tolerances = field(default=TOLERANCES, compare=False, repr=False)

    def __post_init__(self):
        kraus = tuple(linalg.as_cmatrix(k) for k in self.kraus)
        if not kraus:
            raise ContractViolation("channel needs at least one Kraus operator")
        shape = (self.output_layout.total_dim, self.input_layout.total_dim)
        for k in kraus:
            if k.shape != shape:
                raise LayoutError(f"Kraus operator shape {k.shape}, expected {shape}")
            k.setflags(write=False)
        object.__setattr__(self, "kraus", kraus)

        gram = sum(k.conj().T @ k for k in kraus)
        top = float(linalg.eigvalsh(linalg.hermitian_part(gram))[0])
        if top > 1.0 + self.tolerances.channel:
            raise ContractViolation(f"channel increases trace (largest eigenvalue of ΣK†K = {top:.12g})")
        if self.trace_preserving:
            error = float(np.max(np.abs(gram - np.eye(shape[1]))))
            if error > self.tolerances.channel:
                raise ContractViolation(f"channel flagged trace preserving but ΣK†K deviates from I by {error:.3e}")

    @classmethod
    def identity(cls, layout: SystemLayout) -> "Channel":
        return cls(layout, layout, (np.eye(layout.total_dim),), True)

    @classmethod
    def depolarizing(cls, layout: SystemLayout) -> "Channel":
        """Full depolarization ρ ↦ tr(ρ) I/d"""
        d = layout.total_dim
        kraus = []
        for i in range(d):
            for j in range(d):
                k = np.zeros((d, d), dtype=np.complex128)
                k[i, j] = 1.0 / np.sqrt(d)
                kraus.append(k)
        return cls(layout, layout, tuple(kraus), True)

    @classmethod
    def partial_trace(cls, layout: SystemLayout, traced: Sequence[str]) -> "Channel":
        """Channel tracing out ``traced``; the remaining factors keep their order"""
        kept = layout.without(traced)
        order = kept.labels + tuple(traced)
        perm = _permutation_operator(layout, order)
        d_keep = kept.total_dim
        d_traced = layout.dim_of(traced)
        kraus = []
        for j in range(d_traced):
            bra = np.zeros((1, d_traced))
            bra[0, j] = 1.0
            kraus.append(np.kron(np.eye(d_keep), bra) @ perm)
        return cls(layout, kept, tuple(kraus), True)

    @property
    def kraus_rank(self) -> int:
        return len(self.kraus)

    def apply_matrix(self, matrix: np.ndarray) -> np.ndarray:
        out = sum(k @ matrix @ k.conj().T for k in self.kraus)
        return linalg.hermitian_part(out)


def _permutation_operator(layout: SystemLayout, order: Sequence[str]) -> np.ndarray:
    """Unitary P with P|x_1..x_n> = |x_order(1)..x_order(n)>"""
    d = layout.total_dim
    identity = np.eye(d)
    columns = [linalg.permute_vector(identity[:, i], layout.dims, layout.permutation_to(order))
               for i in range(d)]
    return np.stack(columns, axis=1)


@dataclass(frozen=True)
class Isometry:
    """Isometry U (m x n, U†U = I_n) from ``source`` to ``target``"""

    matrix: np.ndarray
    source: SystemLayout
    target: SystemLayout
    tolerances: Tolerances = field(default=TOLERANCES, compare=False, repr=False)

    def __post_init__(self):
        u = linalg.as_cmatrix(self.matrix)
        m, n = u.shape
        if (m, n) != (self.target.total_dim, self.source.total_dim):
            raise LayoutError(f"isometry shape {u.shape} does not map {self.source} -> {self.target}")
        if m < n:
            raise InsufficientDimensionError(f"isometry target dimension {m} < source dimension {n}")
        error = linalg.unitarity_error(u)
        if error > self.tolerances.channel * max(1.0, n):
            raise ContractViolation(f"U†U deviates from identity by {error:.3e}")
        u.setflags(write=False)
        object.__setattr__(self, "matrix", u)

    @property
    def projector(self) -> np.ndarray:
        """Projector onto the image of U"""
        return self.matrix @ self.matrix.conj().T

    def as_channel(self) -> Channel:
        return Channel(self.source, self.target, (self.matrix,), True)

    def pull_back_channel(self) -> Channel:
        """ρ ↦ U†ΠρΠU, trace non-increasing map back to the source"""
        return Channel(self.target, self.source, (self.matrix.conj().T,), False)


# =============================================================================
# OPERATIONS
# =============================================================================

def fresh_label(layout: SystemLayout, base: str = "R") -> str:
    """First of base, base1, base2, ... not used in ``layout``"""
    label = base
    k = 0
    while label in layout.labels:
        k += 1
        label = f"{base}{k}"
    return label


def purify(rho: State, purifier_label: str = "R", purifier_dim: Optional[int] = None,
           tolerances: Tolerances = TOLERANCES) -> PureState:
    """Purification Σ √λ_k |k> ⊗ |k>_R of ρ (sub-normalized: ‖φ‖² = tr ρ)"""
    values, vectors = linalg.herm_eig(rho.matrix, tolerances=tolerances)
    r = max(1, rho.rank(tolerances))
    dim = r if purifier_dim is None else int(purifier_dim)
    if dim < r:
        raise InsufficientDimensionError(f"purifier dimension {dim} is below rank {r}")
    amplitudes = np.zeros((rho.dim, dim), dtype=np.complex128)
    weights = np.sqrt(np.clip(values[:r], 0.0, None))
    amplitudes[:, :r] = vectors[:, :r] * weights
    layout = rho.layout.tensor(SystemLayout(((purifier_label, dim),)))
    return PureState(layout, amplitudes.reshape(-1))


def embedding_isometry(source: SystemLayout, target: SystemLayout) -> Isometry:
    """Factor-wise embedding of each basis into the first states of a larger factor"""
    if source.labels != target.labels:
        raise LayoutError(f"embedding needs the same labels in the same order: {source} vs {target}")
    blocks = []
    for (label, d), (_, big) in zip(source.factors, target.factors):
        if big < d:
            raise InsufficientDimensionError(f"cannot embed {label}:{d} into dimension {big}")
        blocks.append(np.eye(big, d))
    return Isometry(linalg.kron_all(blocks), source, target)


def embed(rho: State, target: SystemLayout) -> State:
    """Embed ρ into enlarged factor dimensions (top-left block)"""
    v = embedding_isometry(rho.layout, target).matrix
    return State(target, v @ rho.matrix @ v.conj().T)


def apply_channel(channel: Channel, rho: Operator, labels: Optional[Sequence[str]] = None) -> State:
    """Σ (I⊗K_i) ρ (I⊗K_i)† on the labeled factors.

    The acting factors are replaced by the channel's output factors at the
    position of the first acting factor.
    """
    labels = list(channel.input_layout.labels if labels is None else labels)
    acting = rho.layout.select(labels)
    if acting.dims != channel.input_layout.dims:
        raise LayoutError(f"channel input {channel.input_layout} does not match factors {acting}")
    rest = [label for label in rho.layout.labels if label not in set(labels)]
    clash = set(rest) & set(channel.output_layout.labels)
    if clash:
        raise LayoutError(f"channel output labels {sorted(clash)} collide with untouched factors")

    ordered = linalg.permute_systems(rho.matrix, rho.layout.dims, rho.layout.permutation_to(rest + labels))
    d_rest = rho.layout.dim_of(rest)
    d_in = acting.total_dim
    d_out = channel.output_layout.total_dim
    tensor = ordered.reshape(d_rest, d_in, d_rest, d_in)
    kraus = np.stack(channel.kraus)
    out = np.einsum('kab,xbyc,kdc->xayd', kraus, tensor, kraus.conj(), optimize=True)
    out = out.reshape(d_rest * d_out, d_rest * d_out)

    layout = rho.layout.select(rest).tensor(channel.output_layout)
    final = _replaced_order(rho.layout.labels, labels, channel.output_layout.labels)
    out = linalg.permute_systems(out, layout.dims, layout.permutation_to(final))
    return State(layout.select(final), linalg.hermitian_part(out))


def apply_isometry(isometry: Isometry, rho: State, labels: Optional[Sequence[str]] = None) -> State:
    return apply_channel(isometry.as_channel(), rho, labels)


def pinching(projector, layout: SystemLayout, tolerances: Tolerances = TOLERANCES) -> Channel:
    """ρ ↦ ΠρΠ + Π⊥ρΠ⊥"""
    p = linalg.require_hermitian(projector, tolerances)
    if p.shape != (layout.total_dim, layout.total_dim):
        raise LayoutError(f"projector shape {p.shape} does not match layout {layout}")
    if np.max(np.abs(p @ p - p)) > 1e-10:
        raise ContractViolation("pinching needs an orthogonal projector (Π² = Π)")
    return Channel(layout, layout, (p, np.eye(layout.total_dim) - p), True)


def projective_measurement_map(basis, input_layout: SystemLayout, output_label: str = "X",
                               tolerances: Tolerances = TOLERANCES) -> Channel:
    """A → X channel ρ ↦ Σ_i <b_i|ρ|b_i> |i><i|_X for an orthonormal basis (columns)"""
    b = linalg.as_cmatrix(basis)
    d = input_layout.total_dim
    if b.shape != (d, d):
        raise LayoutError(f"basis shape {b.shape} does not match layout {input_layout}")
    if linalg.unitarity_error(b) > tolerances.channel * max(1.0, d):
        raise ContractViolation("measurement basis is not orthonormal")
    output = SystemLayout(((output_label, d),))
    kraus = []
    for i in range(d):
        k = np.zeros((d, d), dtype=np.complex128)
        k[i, :] = b[:, i].conj()
        kraus.append(k)
    return Channel(input_layout, output, tuple(kraus), True)


# =============================================================================
# ANALYTIC STATES
# =============================================================================

def basis_state(layout: SystemLayout, index: int = 0) -> PureState:
    amplitudes = np.zeros(layout.total_dim, dtype=np.complex128)
    amplitudes[index] = 1.0
    return PureState(layout, amplitudes)


def maximally_entangled(a: SystemLayout, b: SystemLayout) -> PureState:
    """Σ_i |i>|i> / √d over the smaller of the two spaces"""
    d = min(a.total_dim, b.total_dim)
    amplitudes = np.zeros((a.total_dim, b.total_dim), dtype=np.complex128)
    for i in range(d):
        amplitudes[i, i] = 1.0 / np.sqrt(d)
    return PureState(a.tensor(b), amplitudes.reshape(-1))


def maximally_mixed(layout: SystemLayout, trace: float = 1.0) -> State:
    return State(layout, trace * np.eye(layout.total_dim) / layout.total_dim)


def product(*states: Union[State, PureState]) -> State:
    layout = SystemLayout()
    matrix = np.ones((1, 1), dtype=np.complex128)
    for s in states:
        layout = layout.tensor(s.layout)
        matrix = np.kron(matrix, s.matrix)
    return State(layout, matrix)


# =============================================================================
# RANDOM GENERATION
# =============================================================================

def random_pure(layout: SystemLayout, seed: Union[int, Generator, None] = None) -> PureState:
    """Haar-distributed pure state (normalized complex Gaussian vector)"""
    rng = make_rng(seed)
    v = _randnz((layout.total_dim,), rng)
    return PureState(layout, v / np.linalg.norm(v))


def random_state(layout: SystemLayout, rank: Optional[int] = None,
                 seed: Union[int, Generator, None] = None,
                 min_scale: Optional[float] = None) -> State:
    """Marginal of a Haar pure state on layout ⊗ C^rank.

    With ``min_scale`` the state is sub-normalized by a uniform factor in (min_scale, 1].
    """
    rng = make_rng(seed)
    r = layout.total_dim if rank is None else int(rank)
    if not 1 <= r:
        raise ContractViolation(f"rank must be positive, got {r}")
    ancilla = SystemLayout(((fresh_label(layout, "anc"), r),))
    psi = random_pure(layout.tensor(ancilla), rng)
    rho = linalg.partial_trace_dims(psi.matrix, [layout.total_dim, r], [1])
    rho = rho / np.real(np.trace(rho))
    if min_scale is not None:
        if not 0.0 <= min_scale < 1.0:
            raise ContractViolation(f"min_scale must lie in [0, 1), got {min_scale}")
        rho = rho * (1.0 - rng.uniform(0.0, 1.0 - min_scale))
    return State(layout, rho)


def random_isometry(n: int, m: int, seed: Union[int, Generator, None] = None,
                    source: Optional[SystemLayout] = None,
                    target: Optional[SystemLayout] = None) -> Isometry:
    """First n columns of an m x m Haar unitary"""
    if m < n:
        raise InsufficientDimensionError(f"isometry needs m >= n, got m={m}, n={n}")
    rng = make_rng(seed)
    u = _haar_unitary(m, rng)[:, :n]
    source = source or SystemLayout((("S", n),))
    target = target or SystemLayout((("T", m),))
    return Isometry(u, source, target)


def random_unitary(layout: SystemLayout, seed: Union[int, Generator, None] = None) -> Isometry:
    d = layout.total_dim
    return random_isometry(d, d, seed, layout, layout)


def random_projector(d: int, rank: int, rng: Generator) -> np.ndarray:
    v = _haar_unitary(d, rng)[:, :rank]
    return v @ v.conj().T


def random_channel(in_layout: SystemLayout, out_layout: SystemLayout, env_dim: int = 2,
                   seed: Union[int, Generator, None] = None,
                   trace_preserving: bool = True) -> Channel:
    """Stinespring form of a Haar-random isometry C^d_in → C^d_out ⊗ C^env.

    The trace non-increasing variant precomposes with a random projector.
    """
    rng = make_rng(seed)
    d_in = in_layout.total_dim
    d_out = out_layout.total_dim
    if d_out * env_dim < d_in:
        raise InsufficientDimensionError(
            f"Stinespring dilation needs d_out * env >= d_in ({d_out} * {env_dim} < {d_in})")
    v = _haar_unitary(d_out * env_dim, rng)[:, :d_in]
    v = v.reshape(d_out, env_dim, d_in)
    kraus = [v[:, e, :] for e in range(env_dim)]
    if not trace_preserving:
        p = random_projector(d_in, int(rng.integers(1, d_in + 1)), rng)
        kraus = [k @ p for k in kraus]
    return Channel(in_layout, out_layout, tuple(kraus), trace_preserving)
