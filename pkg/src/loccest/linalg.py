"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
Multi-partite operators follow a single ordering convention: the leftmost
tensor factor owns the most significant block of the row/column index, i.e.
``kron(a, b)[i*db + k, j*db + l] == a[i, j] * b[k, l]``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ValidationError

HERMITIAN_TOL = 1e-9
JACOBI_TOL = 1e-12
_MAX_SWEEPS = 100


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValidationError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def allclose(a, b, atol: float) -> bool:
    """Entrywise comparison with an explicit absolute tolerance."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a.shape == b.shape and bool(np.max(np.abs(a - b), initial=0.0) <= atol)


def hermiticity_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T), initial=0.0))


def tensor_product(*mats) -> np.ndarray:
    """Kronecker product, first argument most significant."""
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, as_matrix(m))
    return out


class Eigh(NamedTuple):
    values: np.ndarray  # descending
    vectors: np.ndarray | None  # columns, matching ``values``


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """Annihilate a[p, q] of the Hermitian matrix ``a`` in place."""
    apq = a[p, q]
    mag = abs(apq)
    phase = apq / mag
    # Phase-fix the (p, q) pair to a real symmetric 2x2 block, then do the
    # classical real Jacobi rotation on it.
    theta = 0.5 * np.arctan2(2.0 * mag, (a[q, q] - a[p, p]).real)
    c = np.cos(theta)
    s = np.sin(theta)
    # J acts on columns p, q:  col_p' = c col_p - s conj(phase) col_q ...
    jpp = c
    jpq = s * phase
    jqp = -s * np.conj(phase)
    jqq = c
    # Columns: A <- A J
    colp = a[:, p].copy()
    colq = a[:, q]
    a[:, p] = colp * jpp + colq * jqp
    a[:, q] = colp * jpq + colq * jqq
    # Rows: A <- J^H A
    rowp = a[p, :].copy()
    rowq = a[q, :]
    a[p, :] = np.conj(jpp) * rowp + np.conj(jqp) * rowq
    a[q, :] = np.conj(jpq) * rowp + np.conj(jqq) * rowq
    a[p, q] = 0.0
    a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real
    if v is not None:
        colp = v[:, p].copy()
        colq = v[:, q]
        v[:, p] = colp * jpp + colq * jqp
        v[:, q] = colp * jpq + colq * jqq


def hermitian_eigs(m, vectors: bool = False, hermitian_tol: float = HERMITIAN_TOL,
                   tol: float = JACOBI_TOL) -> Eigh:
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    m : array_like
        Square Hermitian matrix.
    vectors : bool
        Also accumulate the unitary of eigenvectors.
    hermitian_tol : float
        Largest tolerated ``max|M - M^H|`` entry.
    tol : float
        Sweeps stop once the off-diagonal Frobenius mass falls below
        ``tol * max(1, ||M||_F)``.

    Returns
    -------
    Eigh
        Real eigenvalues sorted in descending order and, on request, the
        matching eigenvectors as columns.
    """
    a = as_matrix(m)
    n, ncols = a.shape
    if n != ncols:
        raise ValidationError(f"matrix is not square: {a.shape}")
    defect = hermiticity_defect(a)
    if defect > hermitian_tol:
        raise ValidationError(f"matrix is not Hermitian (defect {defect:.3g})")
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex) if vectors else None

    scale = max(1.0, float(np.linalg.norm(a)))
    threshold = tol * scale
    for _ in range(_MAX_SWEEPS):
        off = float(np.linalg.norm(a[~np.eye(n, dtype=bool)]))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) > 1e-300:
                    _rotate(a, v, p, q)
    else:  # pragma: no cover - Jacobi converges quadratically
        raise RuntimeError("Jacobi eigensolver did not converge")

    values = np.real(np.diag(a)).copy()
    order = np.argsort(values)[::-1]
    values = values[order]
    if v is not None:
        v = v[:, order]
    return Eigh(values, v)


def eigvalsh(m, **kw) -> np.ndarray:
    return hermitian_eigs(m, **kw).values


def trace_norm(m, hermitian_tol: float = HERMITIAN_TOL) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.sum(np.abs(eigvalsh(m, hermitian_tol=hermitian_tol))))


def matrix_power_trace(m: np.ndarray, k: int) -> complex:
    """tr[M^k] by repeated multiplication."""
    if k < 1:
        raise ValidationError("power must be a positive integer")
    acc = m
    for _ in range(k - 1):
        acc = acc @ m
    return complex(np.trace(acc))
