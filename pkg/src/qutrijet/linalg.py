"""Complex dense linear algebra foundation.

Thin, contract-checked wrappers around numpy for the small fixed
dimensions used throughout (3, 9, 3^n): products, adjoints, a
Gram-Schmidt QR with a deterministic phase convention, and
unitarity/hermiticity predicates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ATOL = 1e-12
DEPENDENCE_TOL = 1e-10


def as_matrix(a) -> np.ndarray:
    """Coerce to a 2-d complex array and reject non-finite entries."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains NaN or Inf entries")
    return m


def as_vector(v) -> np.ndarray:
    m = np.asarray(v, dtype=complex)
    if m.ndim != 1:
        raise ValueError(f"expected a vector, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("vector contains NaN or Inf entries")
    return m


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return a @ b


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def is_unitary(a, tol: float = ATOL) -> bool:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError("unitarity is defined for square matrices only")
    d = adjoint(a) @ a - np.eye(a.shape[0])
    return bool(np.abs(d).max() < tol)


def is_hermitian(a, tol: float = ATOL) -> bool:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError("hermiticity is defined for square matrices only")
    return bool(np.abs(a - adjoint(a)).max() < tol)


def phase_aligned_distance(a, b) -> float:
    """min over alpha of ||a - e^{i alpha} b||, the ray distance.

    The minimizing phase is analytic (alpha = arg<b|a>); the distance is
    then taken on the aligned difference vector rather than through the
    sqrt(||a||^2 + ||b||^2 - 2|<b|a>|) identity, which loses half the
    significant digits near zero.
    """
    a = as_vector(a)
    b = as_vector(b)
    ov = np.vdot(b, a)
    if abs(ov) < 1e-300:
        return float(np.sqrt(np.linalg.norm(a) ** 2 + np.linalg.norm(b) ** 2))
    return float(np.linalg.norm(a - (ov / abs(ov)) * b))


def align_phase(a, b) -> np.ndarray:
    """Return b multiplied by the phase that best matches it to a."""
    a = as_vector(a)
    b = as_vector(b)
    ov = np.vdot(b, a)
    if abs(ov) < 1e-300:
        return b.copy()
    return b * (ov / abs(ov))


@dataclass(frozen=True)
class QRResult:
    """QR factors plus the indices of any columns that had to be
    replaced by canonical-basis fallbacks (rank deficiency)."""

    q: np.ndarray
    r: np.ndarray
    completed_columns: tuple[int, ...] = field(default=())


def qr_decompose(a) -> QRResult:
    """QR via modified Gram-Schmidt with diag(r) real nonnegative.

    The diagonal of r holds residual norms, which fixes the column
    phases deterministically. A rank-deficient column is replaced by
    the first canonical basis vector with a nonvanishing residual and
    flagged in the result; its r diagonal entry is zero so q @ r still
    reconstructs the input.
    """
    a = as_matrix(a)
    n, m = a.shape
    if n != m:
        raise ValueError("qr_decompose expects a square matrix")
    if np.linalg.norm(a[:, 0]) < DEPENDENCE_TOL:
        raise ValueError("first column is numerically zero")

    q = np.zeros((n, n), dtype=complex)
    r = np.zeros((n, n), dtype=complex)
    completed = []
    for k in range(n):
        v = a[:, k].copy()
        for j in range(k):
            r[j, k] = np.vdot(q[:, j], v)
            v -= r[j, k] * q[:, j]
        nv = np.linalg.norm(v)
        if nv < DEPENDENCE_TOL:
            # rank-deficient column: complete the basis, keep q@r == a
            r[k, k] = 0.0
            v = _canonical_fallback(q, k, n)
            completed.append(k)
        else:
            r[k, k] = nv
            v = v / nv
        q[:, k] = v
    return QRResult(q=q, r=r, completed_columns=tuple(completed))


def _canonical_fallback(q: np.ndarray, k: int, n: int) -> np.ndarray:
    for idx in range(n):
        v = np.zeros(n, dtype=complex)
        v[idx] = 1.0
        for j in range(k):
            v -= np.vdot(q[:, j], v) * q[:, j]
        nv = np.linalg.norm(v)
        if nv > 0.5:  # a canonical vector mostly outside the current span
            return v / nv
    for idx in range(n):  # fall back to any usable residual
        v = np.zeros(n, dtype=complex)
        v[idx] = 1.0
        for j in range(k):
            v -= np.vdot(q[:, j], v) * q[:, j]
        nv = np.linalg.norm(v)
        if nv > DEPENDENCE_TOL:
            return v / nv
    raise ValueError("could not complete an orthonormal basis")


def gram_schmidt(u1, u2, u3) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormalize three independent 3-vectors, in order.

    Rejects inputs whose projection residual drops below 1e-10
    (numerical linear dependence).
    """
    us = [as_vector(u1), as_vector(u2), as_vector(u3)]
    for u in us:
        if u.shape != (3,):
            raise ValueError("gram_schmidt expects vectors of dimension 3")
    es: list[np.ndarray] = []
    for i, u in enumerate(us):
        v = u.copy()
        for e in es:
            v -= np.vdot(e, v) * e
        nv = np.linalg.norm(v)
        if nv < DEPENDENCE_TOL:
            raise ValueError(f"input vector {i + 1} is linearly dependent on its predecessors")
        es.append(v / nv)
    return es[0], es[1], es[2]
