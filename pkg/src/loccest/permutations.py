"""Cyclic shift operators and controlled unitaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ValidationError

MAX_SIDE = 4096


@dataclass(frozen=True, eq=False)
class ShiftOperator:
    """Permutation matrix of the cyclic shift on k copies of C^d.

    ``V |phi_1>|phi_2>...|phi_k> = |phi_k>|phi_1>...|phi_{k-1}>``.
    """

    k: int
    d: int
    perm: np.ndarray  # image index of every basis index

    @property
    def side(self) -> int:
        return self.d ** self.k

    @property
    def matrix(self) -> np.ndarray:
        m = np.zeros((self.side, self.side), dtype=complex)
        m[self.perm, np.arange(self.side)] = 1.0
        return m

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        out = np.empty_like(vec)
        out[self.perm] = vec
        return out


def shift_permutation(k: int, d: int) -> np.ndarray:
    """Index map (i_1, ..., i_k) -> (i_k, i_1, ..., i_{k-1})."""
    idx = np.arange(d ** k).reshape((d,) * k)
    # perm[i_1..i_k] = flat index of (i_k, i_1, ..., i_{k-1})
    return np.moveaxis(idx, 0, -1).ravel().astype(np.int64)


def shift_operator(k: int, d: int) -> ShiftOperator:
    k, d = int(k), int(d)
    if k < 1:
        raise ValidationError("copy count must be at least 1")
    if d < 2:
        raise ValidationError("dimension must be at least 2")
    if d ** k > MAX_SIDE:
        raise ValidationError(f"d^k = {d ** k} exceeds the cap of {MAX_SIDE}")
    return ShiftOperator(k, d, shift_permutation(k, d))


def swap(d: int) -> ShiftOperator:
    return shift_operator(2, d)


def is_unitary(u: np.ndarray, tol: float) -> bool:
    u = linalg.as_matrix(u)
    if u.shape[0] != u.shape[1]:
        return False
    return linalg.allclose(u.conj().T @ u, np.eye(u.shape[0]), tol)


def controlled_u(u, tol: float = 1e-10) -> np.ndarray:
    """|0><0| (x) I + |1><1| (x) U, control qubit most significant."""
    u = linalg.as_matrix(np.asarray(u))
    if not is_unitary(u, tol):
        raise ValidationError("controlled_u requires a unitary")
    n = u.shape[0]
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    out[:n, :n] = np.eye(n)
    out[n:, n:] = u
    return out
