"""Density operators, reduced states and a few canonical states.

Subsystem ordering: ``dims[0]`` is the most significant index block, so a
state on ``dims=(dA, dB)`` is indexed as ``rho[a*dB + b, a2*dB + b2]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import linalg
from .errors import ValidationError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, unit-trace, positive semidefinite matrix with tensor structure.

    The validation thresholds are keyword arguments so that noisy or
    sampled matrices can be admitted deliberately. The stored matrix is
    read-only.
    """

    matrix: np.ndarray
    dims: tuple[int, ...]
    hermitian_tol: float = field(default=HERMITIAN_TOL, repr=False)
    trace_tol: float = field(default=TRACE_TOL, repr=False)
    psd_tol: float = field(default=PSD_TOL, repr=False)

    def __post_init__(self):
        m = linalg.as_matrix(self.matrix).copy()
        dims = tuple(int(d) for d in (self.dims if self.dims is not None else (m.shape[0],)))
        if m.shape[0] != m.shape[1]:
            raise ValidationError(f"density matrix must be square, got {m.shape}")
        if any(d < 1 for d in dims) or int(np.prod(dims)) != m.shape[0]:
            raise ValidationError(f"dims {dims} do not factor a side of {m.shape[0]}")
        defect = linalg.hermiticity_defect(m)
        if defect > self.hermitian_tol:
            raise ValidationError(f"not Hermitian (defect {defect:.3g})")
        tr = np.trace(m)
        if abs(tr - 1.0) > self.trace_tol:
            raise ValidationError(f"trace {tr.real:.12g} differs from 1")
        lo = linalg.eigvalsh(m, hermitian_tol=max(self.hermitian_tol, linalg.HERMITIAN_TOL))[-1]
        if lo < -self.psd_tol:
            raise ValidationError(f"not positive semidefinite (min eigenvalue {lo:.3g})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def isclose(self, other, atol: float) -> bool:
        other_m = other.matrix if isinstance(other, DensityOperator) else other
        return linalg.allclose(self.matrix, other_m, atol)

    def eigenvalues(self) -> np.ndarray:
        return linalg.eigvalsh(self.matrix)

    def to_dict(self) -> dict:
        return matrix_to_dict(self.matrix, self.dims)

    @classmethod
    def from_dict(cls, payload: dict, **tols) -> "DensityOperator":
        m, dims = matrix_from_dict(payload)
        return cls(m, dims, **tols)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str, **tols) -> "DensityOperator":
        return cls.from_dict(json.loads(text), **tols)


def matrix_to_dict(m: np.ndarray, dims: Sequence[int]) -> dict:
    m = np.asarray(m)
    return {"dims": [int(d) for d in dims],
            "re": np.real(m).tolist(),
            "im": np.imag(m).tolist()}


def matrix_from_dict(payload: dict) -> tuple[np.ndarray, tuple[int, ...]]:
    try:
        dims = tuple(int(d) for d in payload["dims"])
        re = np.asarray(payload["re"], dtype=float)
        im = np.asarray(payload["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix payload: {exc}") from exc
    if re.ndim != 2 or re.shape[0] != re.shape[1]:
        raise ValidationError(f"matrix payload is not square: {re.shape}")
    if im.shape != re.shape:
        raise ValidationError("re/im shapes differ")
    if int(np.prod(dims)) != re.shape[0]:
        raise ValidationError(f"dims {list(dims)} do not match side {re.shape[0]}")
    return re + 1j * im, dims


def _as_state(rho) -> DensityOperator:
    if not isinstance(rho, DensityOperator):
        raise ValidationError("expected a DensityOperator")
    return rho


def _check_subsystems(dims: Sequence[int], idx: Iterable[int]) -> list[int]:
    idx = sorted(set(int(i) for i in idx))
    for i in idx:
        if i < 0 or i >= len(dims):
            raise ValidationError(f"subsystem index {i} out of range for dims {tuple(dims)}")
    return idx


def tensor(*states: DensityOperator) -> DensityOperator:
    mats = [_as_state(s).matrix for s in states]
    dims = tuple(d for s in states for d in s.dims)
    return DensityOperator(linalg.tensor_product(*mats), dims)


def partial_trace_matrix(m: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    dims = list(dims)
    keep = _check_subsystems(dims, keep)
    if not keep:
        raise ValidationError("keep must name at least one subsystem")
    n = len(dims)
    t = np.asarray(m).reshape(dims + dims)
    # einsum labels: row axes 0..n-1, column axes n..2n-1; traced axes share labels
    row = list(range(n))
    col = [i if i not in keep else n + i for i in range(n)]
    out = [i for i in keep] + [n + i for i in keep]
    reduced = np.einsum(t, row + col, out)
    side = int(np.prod([dims[i] for i in keep]))
    return reduced.reshape(side, side)


def partial_trace(rho: DensityOperator, keep) -> DensityOperator:
    """Reduced state on the subsystems listed in ``keep``."""
    rho = _as_state(rho)
    if isinstance(keep, (int, np.integer)):
        keep = [keep]
    keep = _check_subsystems(rho.dims, keep)
    reduced = partial_trace_matrix(rho.matrix, rho.dims, keep)
    return DensityOperator(reduced, tuple(rho.dims[i] for i in keep))


def partial_transpose_matrix(m: np.ndarray, dims: Sequence[int], subsystem: int) -> np.ndarray:
    dims = list(dims)
    (s,) = _check_subsystems(dims, [subsystem])
    n = len(dims)
    t = np.asarray(m).reshape(dims + dims)
    axes = list(range(2 * n))
    axes[s], axes[n + s] = axes[n + s], axes[s]
    side = int(np.prod(dims))
    return t.transpose(axes).reshape(side, side)


def partial_transpose(rho, subsystem: int, dims: Sequence[int] | None = None) -> np.ndarray:
    """Transpose one tensor factor.

    The result is returned as a raw Hermitian matrix because it need not be
    positive. Accepts a :class:`DensityOperator` or a bare matrix with
    ``dims``.
    """
    if isinstance(rho, DensityOperator):
        m, dims = rho.matrix, rho.dims
    else:
        m = linalg.as_matrix(rho)
        if dims is None:
            raise ValidationError("dims are required for a bare matrix")
    return partial_transpose_matrix(m, dims, subsystem)


def moment_direct(rho: DensityOperator, k: int) -> float:
    """tr[rho^k] by repeated matrix multiplication."""
    rho = _as_state(rho)
    val = linalg.matrix_power_trace(rho.matrix, int(k))
    if abs(val.imag) > 1e-12:
        raise ValidationError(f"moment has imaginary residue {val.imag:.3g}")
    return val.real


# -- canonical states ------------------------------------------------------

def pure(psi, dims: Sequence[int] | None = None) -> DensityOperator:
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    return DensityOperator(np.outer(psi, psi.conj()), dims if dims is not None else (psi.size,))


def max_entangled_vector(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex).ravel() / np.sqrt(d)


def max_entangled_state(d: int) -> DensityOperator:
    """Projector onto (1/sqrt d) sum_i |ii>, with ``dims=(d, d)``."""
    if int(d) < 2:
        raise ValidationError("dimension must be at least 2")
    d = int(d)
    return pure(max_entangled_vector(d), (d, d))


def maximally_mixed(dims) -> DensityOperator:
    if isinstance(dims, (int, np.integer)):
        dims = (int(dims),)
    n = int(np.prod(dims))
    return DensityOperator(np.eye(n, dtype=complex) / n, tuple(dims))


BELL_VECTORS = {
    "phi+": np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2),
    "phi-": np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2),
    "psi+": np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2),
    "psi-": np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2),
}


def singlet() -> DensityOperator:
    return pure(BELL_VECTORS["psi-"], (2, 2))


def werner(p: float) -> DensityOperator:
    """p |psi-><psi-| + (1 - p) I/4."""
    m = p * singlet().matrix + (1.0 - p) * np.eye(4) / 4
    return DensityOperator(m, (2, 2))


def random_density(dims, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Ginibre-ensemble density matrix (Hilbert-Schmidt measure for full rank)."""
    if isinstance(dims, (int, np.integer)):
        dims = (int(dims),)
    n = int(np.prod(dims))
    r = n if rank is None else int(rank)
    g = rng.normal(size=(n, r)) + 1j * rng.normal(size=(n, r))
    m = g @ g.conj().T
    m = 0.5 * (m + m.conj().T)
    return DensityOperator(m / np.trace(m).real, tuple(dims))


def random_pure(dims, rng: np.random.Generator) -> DensityOperator:
    return random_density(dims, rng, rank=1)
