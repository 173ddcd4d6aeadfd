#!/usr/bin/env python3
"""
Dense complex-Hermitian linear-algebra kernels.

Matrices are plain ``numpy`` arrays of dtype complex128 (row-major). Tensor
factor ordering is significant: nothing here reorders factors unless asked to
through ``permute_systems``.
"""

import math
from typing import TYPE_CHECKING, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from entropy_lib import (
    TOLERANCES,
    Tolerances,
    ContractViolation,
    LayoutError,
    NotPSDError,
    NumericalFailure,
    EntropyLogger,
)

if TYPE_CHECKING:
    from quantum import SystemLayout

CMatrix = np.ndarray

_log = EntropyLogger("smooth_entropy.linalg")


# =============================================================================
# VALIDATION
# =============================================================================

def as_cmatrix(m) -> CMatrix:
    """Coerce to a 2-d complex128 array"""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ContractViolation(f"expected a non-empty 2-d matrix, got shape {arr.shape}")
    return arr


def hermiticity_error(m: CMatrix) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def is_hermitian(m, tolerances: Tolerances = TOLERANCES) -> bool:
    m = as_cmatrix(m)
    if m.shape[0] != m.shape[1]:
        return False
    scale = 1.0 + float(np.max(np.abs(m)))
    return hermiticity_error(m) <= tolerances.hermitian * scale


def require_hermitian(m, tolerances: Tolerances = TOLERANCES) -> CMatrix:
    """Return ``m`` as an exactly Hermitian matrix or raise ContractViolation"""
    m = as_cmatrix(m)
    if m.shape[0] != m.shape[1]:
        raise ContractViolation(f"Hermitian matrix must be square, got shape {m.shape}")
    if not is_hermitian(m, tolerances):
        raise ContractViolation(
            f"matrix is not Hermitian (max asymmetry {hermiticity_error(m):.3e})")
    return hermitian_part(m)


def hermitian_part(m: CMatrix) -> CMatrix:
    return 0.5 * (m + m.conj().T)


# =============================================================================
# EIGENDECOMPOSITION
# =============================================================================

def _sorted_descending(values: np.ndarray, vectors: CMatrix) -> Tuple[np.ndarray, CMatrix]:
    order = np.argsort(values)[::-1]
    return values[order], vectors[:, order]


def _jacobi_rotation(a: CMatrix, p: int, q: int) -> Optional[CMatrix]:
    """2x2 unitary that zeroes a[p, q]; columns act on (p, q)"""
    apq = a[p, q]
    magnitude = abs(apq)
    if magnitude == 0.0:
        return None
    phase = apq / magnitude
    app = a[p, p].real
    aqq = a[q, q].real
    tau = (aqq - app) / (2.0 * magnitude)
    if tau == 0.0:
        t = 1.0
    else:
        t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
    c = 1.0 / math.sqrt(1.0 + t * t)
    s = t * c
    # basis e_p, conj(phase) e_q makes the pair real symmetric
    return np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]],
                    dtype=np.complex128)


def jacobi_eig(m, max_sweeps: Optional[int] = None,
               tolerances: Tolerances = TOLERANCES) -> Tuple[np.ndarray, CMatrix]:
    """Cyclic Jacobi eigensolver for complex Hermitian matrices.

    Returns eigenvalues in descending order and the unitary of eigenvectors.
    Raises NumericalFailure when the off-diagonal mass does not drop below the
    residual tolerance within ``max_sweeps`` sweeps.
    """
    a = require_hermitian(m, tolerances).copy()
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    sweeps = tolerances.jacobi_sweeps if max_sweeps is None else max_sweeps
    scale = max(np.linalg.norm(a), 1.0)
    target = 0.1 * tolerances.eig_residual * scale

    off = 0.0
    for sweep in range(sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= target:
            _log.debug(f"jacobi converged after {sweep} sweeps (n={n})")
            values = np.real(np.diag(a)).copy()
            return _sorted_descending(values, v)
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) <= 1e-300:
                    continue
                g = _jacobi_rotation(a, p, q)
                if g is None:
                    continue
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ g

    off = np.linalg.norm(a - np.diag(np.diag(a)))
    if off <= target:
        values = np.real(np.diag(a)).copy()
        return _sorted_descending(values, v)
    raise NumericalFailure(
        f"Jacobi eigensolver did not converge in {sweeps} sweeps",
        residual=float(off), sweeps=sweeps)


def herm_eig(m, method: str = "lapack",
             tolerances: Tolerances = TOLERANCES) -> Tuple[np.ndarray, CMatrix]:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending"""
    if method == "jacobi":
        return jacobi_eig(m, tolerances=tolerances)
    if method != "lapack":
        raise ContractViolation(f"unknown eigensolver method {method!r}")
    h = require_hermitian(m, tolerances)
    try:
        values, vectors = np.linalg.eigh(h)
    except np.linalg.LinAlgError as e:
        raise NumericalFailure(f"eigendecomposition failed: {e}", residual=float("nan"))
    return values[::-1].copy(), vectors[:, ::-1].copy()


def eigvalsh(m, tolerances: Tolerances = TOLERANCES) -> np.ndarray:
    """Eigenvalues in descending order"""
    h = require_hermitian(m, tolerances)
    return np.linalg.eigvalsh(h)[::-1]


def reconstruct(values: np.ndarray, vectors: CMatrix) -> CMatrix:
    return (vectors * values) @ vectors.conj().T


# =============================================================================
# SPECTRAL FUNCTIONS
# =============================================================================

def positive_part_trace(m, tolerances: Tolerances = TOLERANCES) -> float:
    """tr{M}_+ : sum of the strictly positive eigenvalues"""
    values = eigvalsh(m, tolerances)
    values = np.where(np.abs(values) < tolerances.psd_clamp, 0.0, values)
    return float(np.sum(values[values > 0.0]))


def project_psd(m, tolerances: Tolerances = TOLERANCES) -> CMatrix:
    """Clamp negative eigenvalues to zero and reassemble"""
    values, vectors = herm_eig(m, tolerances=tolerances)
    return hermitian_part(reconstruct(np.clip(values, 0.0, None), vectors))


def matrix_sqrt(m, tolerances: Tolerances = TOLERANCES, relative_floor: float = 0.0) -> CMatrix:
    """Principal square root of a PSD Hermitian matrix.

    Eigenvalues below ``relative_floor`` times the largest one count as zero.
    """
    values, vectors = herm_eig(m, tolerances=tolerances)
    if values.size and values[-1] < -tolerances.sqrt_psd:
        raise NotPSDError(
            f"matrix_sqrt needs a PSD matrix, smallest eigenvalue {values[-1]:.3e}")
    values = np.clip(values, 0.0, None)
    if values.size and relative_floor > 0.0:
        values[values < relative_floor * values[0]] = 0.0
    return hermitian_part(reconstruct(np.sqrt(values), vectors))


def trace_norm(m) -> float:
    """Schatten 1-norm (sum of singular values)"""
    m = as_cmatrix(m)
    try:
        return float(np.sum(np.linalg.svd(m, compute_uv=False)))
    except np.linalg.LinAlgError as e:
        raise NumericalFailure(f"singular value decomposition failed: {e}",
                               residual=float("nan"))


def kron(a, b) -> CMatrix:
    return np.kron(as_cmatrix(a), as_cmatrix(b))


def kron_all(matrices: Iterable) -> CMatrix:
    out = np.ones((1, 1), dtype=np.complex128)
    for m in matrices:
        out = np.kron(out, as_cmatrix(m))
    return out


# =============================================================================
# TENSOR FACTORS
# =============================================================================

def _check_square_dims(m: CMatrix, dims: Sequence[int]) -> None:
    total = int(np.prod(dims)) if len(dims) else 1
    if m.shape != (total, total):
        raise LayoutError(f"matrix shape {m.shape} does not match factor dims {tuple(dims)}")


def partial_trace_dims(m, dims: Sequence[int], traced: Sequence[int]) -> CMatrix:
    """Trace out the factors at positions ``traced`` of a matrix over ``dims``"""
    m = as_cmatrix(m)
    dims = [int(d) for d in dims]
    _check_square_dims(m, dims)
    traced = sorted(set(int(i) for i in traced))
    for i in traced:
        if not 0 <= i < len(dims):
            raise LayoutError(f"factor index {i} out of range for {len(dims)} factors")

    tensor = m.reshape(dims + dims)
    remaining = len(dims)
    for i in reversed(traced):
        tensor = np.trace(tensor, axis1=i, axis2=i + remaining)
        remaining -= 1
    kept = [d for i, d in enumerate(dims) if i not in traced]
    size = int(np.prod(kept)) if kept else 1
    return tensor.reshape(size, size)


def partial_trace(m, layout: "SystemLayout", traced: Iterable[str]) -> Tuple[CMatrix, "SystemLayout"]:
    """Trace out the labeled factors; returns the reduced matrix and layout"""
    traced = list(traced)
    positions = [layout.index(label) for label in traced]
    reduced = partial_trace_dims(m, layout.dims, positions)
    return reduced, layout.without(traced)


def permute_systems(m, dims: Sequence[int], order: Sequence[int]) -> CMatrix:
    """Reorder tensor factors: new factor k is old factor ``order[k]``"""
    m = as_cmatrix(m)
    dims = [int(d) for d in dims]
    _check_square_dims(m, dims)
    if sorted(order) != list(range(len(dims))):
        raise LayoutError(f"{tuple(order)} is not a permutation of {len(dims)} factors")
    n = len(dims)
    tensor = m.reshape(dims + dims)
    axes = list(order) + [n + k for k in order]
    total = m.shape[0]
    return tensor.transpose(axes).reshape(total, total)


def permute_vector(v, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    dims = [int(d) for d in dims]
    if v.size != int(np.prod(dims)):
        raise LayoutError(f"vector length {v.size} does not match factor dims {tuple(dims)}")
    return v.reshape(dims).transpose(list(order)).reshape(-1)


def embed_top_left(m, size: int, offset: int = 0) -> CMatrix:
    """Place ``m`` as the diagonal block starting at ``offset`` of a zero matrix"""
    m = as_cmatrix(m)
    out = np.zeros((size, size), dtype=np.complex128)
    k = m.shape[0]
    out[offset:offset + k, offset:offset + k] = m
    return out


def frobenius_residual(a, b) -> float:
    return float(np.linalg.norm(as_cmatrix(a) - as_cmatrix(b)))


def unitarity_error(v: CMatrix) -> float:
    n = v.shape[1]
    return float(np.linalg.norm(v.conj().T @ v - np.eye(n)))


def support(m, tolerances: Tolerances = TOLERANCES) -> Tuple[np.ndarray, CMatrix]:
    """Positive eigenvalues and their eigenvectors (V, Λ with m ≈ VΛV†)"""
    values, vectors = herm_eig(m, tolerances=tolerances)
    cutoff = tolerances.rank * max(1.0, float(np.max(np.abs(values))) if values.size else 1.0)
    keep = values > cutoff
    return values[keep], vectors[:, keep]


def rank(m, tolerances: Tolerances = TOLERANCES) -> int:
    values, _ = support(m, tolerances)
    return int(values.size)


def random_hermitian(n: int, rng: np.random.Generator) -> CMatrix:
    """Gaussian Hermitian matrix (GUE-like), used by kernel tests"""
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return hermitian_part(g)


def random_hermitians(sizes: Sequence[int], rng: np.random.Generator) -> List[CMatrix]:
    return [random_hermitian(n, rng) for n in sizes]
