"""Linear maps on operators in Choi form, SPAs and their LOCC split.

Choi convention: ``choi = (I (x) L)(P+)`` with ``P+`` the *normalized*
maximally entangled projector on ``d_in x d_in``; the input factor is most
significant. A trace-preserving map therefore has ``tr choi = 1`` and
``d_in * tr_out(choi) = I``. The "lambda" of a map is minus the smallest
eigenvalue of this normalized Choi matrix (1/d for the transposition), and
the SPA mixing weight is ``alpha = d^2 lambda / (d^2 lambda + 1)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import NotPositiveError, ValidationError
from .states import (DensityOperator, matrix_from_dict, matrix_to_dict, max_entangled_vector,
                     partial_trace_matrix)

TP_TOL = 1e-8
CP_TOL = 1e-10
KRAUS_CUTOFF = 1e-10


@dataclass(frozen=True, eq=False)
class QuantumMap:
    choi: np.ndarray
    d_in: int
    d_out: int
    weight: float = 1.0
    name: str = field(default="", compare=False)
    tp_flag: bool = field(init=False)

    def __post_init__(self):
        c = linalg.as_matrix(self.choi).copy()
        side = int(self.d_in) * int(self.d_out)
        if c.shape != (side, side):
            raise ValidationError(f"Choi matrix {c.shape} does not match {self.d_in}x{self.d_out}")
        if linalg.hermiticity_defect(c) > 1e-9:
            raise ValidationError("Choi matrix must be Hermitian (Hermiticity-preserving map)")
        c = 0.5 * (c + c.conj().T)
        c.setflags(write=False)
        object.__setattr__(self, "choi", c)
        object.__setattr__(self, "d_in", int(self.d_in))
        object.__setattr__(self, "d_out", int(self.d_out))
        marginal = self.d_in * partial_trace_matrix(c, (self.d_in, self.d_out), [0])
        object.__setattr__(self, "tp_flag", linalg.allclose(marginal, np.eye(self.d_in), TP_TOL))

    def choi_eigenvalues(self) -> np.ndarray:
        return linalg.eigvalsh(self.choi)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return apply_to_matrix(self, x)

    def to_dict(self) -> dict:
        d = matrix_to_dict(self.choi, (self.d_in, self.d_out))
        d.update(d_in=self.d_in, d_out=self.d_out, weight=self.weight, tp_flag=self.tp_flag)
        if self.name:
            d["name"] = self.name
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "QuantumMap":
        m, _ = matrix_from_dict(d)
        qm = cls(m, int(d["d_in"]), int(d["d_out"]), float(d.get("weight", 1.0)), d.get("name", ""))
        if "tp_flag" in d and bool(d["tp_flag"]) != qm.tp_flag:
            raise ValidationError("tp_flag in payload disagrees with the Choi matrix")
        return qm

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "QuantumMap":
        return cls.from_dict(json.loads(text))


# -- constructors ----------------------------------------------------------

def _p_plus(d: int) -> np.ndarray:
    v = max_entangled_vector(d)
    return np.outer(v, v.conj())


def identity_map(d: int) -> QuantumMap:
    return QuantumMap(_p_plus(d), d, d, name=f"identity({d})")


def depolarizing(d: int) -> QuantumMap:
    """Sends every state to I/d."""
    return QuantumMap(np.eye(d * d, dtype=complex) / (d * d), d, d, name=f"depolarizing({d})")


def transposition(d: int) -> QuantumMap:
    """Choi matrix is the swap divided by d; eigenvalues +-1/d."""
    from .permutations import swap

    return QuantumMap(swap(d).matrix / d, d, d, name=f"transposition({d})")


def negation(d: int) -> QuantumMap:
    return QuantumMap(-_p_plus(d), d, d, name=f"negation({d})")


def from_kraus(kraus, d_in: int | None = None) -> QuantumMap:
    ops = [linalg.as_matrix(k) for k in kraus]
    if not ops:
        raise ValidationError("empty Kraus list")
    d_out, d_in0 = ops[0].shape
    if any(k.shape != (d_out, d_in0) for k in ops):
        raise ValidationError("Kraus operators must share one shape")
    if d_in is not None and d_in != d_in0:
        raise ValidationError("Kraus operators do not act on the declared input dimension")
    v = max_entangled_vector(d_in0)
    choi = np.zeros((d_in0 * d_out,) * 2, dtype=complex)
    for k in ops:
        w = np.kron(np.eye(d_in0), k) @ v
        choi += np.outer(w, w.conj())
    return QuantumMap(choi, d_in0, d_out, name="kraus")


def choi_of(spec, d: int | None = None) -> QuantumMap:
    """Build a map from a name (``"transposition"``, ``"depolarizing"``,
    ``"identity"``, ``"negation"``) plus dimension, or from a Kraus list."""
    builders = {"transposition": transposition, "depolarizing": depolarizing,
                "identity": identity_map, "negation": negation}
    if isinstance(spec, str):
        if spec not in builders:
            raise ValidationError(f"unknown map {spec!r}")
        if d is None or int(d) < 1:
            raise ValidationError("a positive dimension is required")
        return builders[spec](int(d))
    return from_kraus(spec, d)


def kraus_of(m: QuantumMap, cutoff: float = KRAUS_CUTOFF) -> list[np.ndarray]:
    """Kraus operators of a completely positive map from its Choi matrix."""
    eig = linalg.hermitian_eigs(m.choi * m.d_in, vectors=True)
    if eig.values[-1] < -cutoff:
        raise ValidationError("map is not completely positive")
    ops = []
    for val, vec in zip(eig.values, eig.vectors.T):
        if val > cutoff:
            # vec[i*d_out + a] = <i|<a| ; K[a, i] = sqrt(val) * vec
            ops.append(np.sqrt(val) * vec.reshape(m.d_in, m.d_out).T)
    return ops


def combine(terms, name: str = "") -> QuantumMap:
    """Linear combination ``sum c_i L_i`` of maps with equal dimensions."""
    terms = list(terms)
    first = terms[0][1]
    choi = sum(c * m.choi for c, m in terms)
    return QuantumMap(choi, first.d_in, first.d_out, name=name)


def tensor_maps(a: QuantumMap, b: QuantumMap) -> QuantumMap:
    """A (x) B acting on (A_in B_in) -> (A_out B_out)."""
    c = np.kron(a.choi, b.choi)  # ordering (Ai Ao Bi Bo)
    dims = [a.d_in, a.d_out, b.d_in, b.d_out]
    t = c.reshape(dims + dims).transpose(0, 2, 1, 3, 4, 6, 5, 7)
    side = a.d_in * b.d_in * a.d_out * b.d_out
    name = f"{a.name}(x){b.name}" if a.name and b.name else ""
    return QuantumMap(t.reshape(side, side), a.d_in * b.d_in, a.d_out * b.d_out,
                      a.weight * b.weight, name)


# -- application -----------------------------------------------------------

def apply_to_matrix(m: QuantumMap, x, dims=None, subsystem: int | None = None) -> np.ndarray:
    """Raw map output via Choi contraction; no positivity or trace checks."""
    x = linalg.as_matrix(np.asarray(x))
    c4 = m.choi.reshape(m.d_in, m.d_out, m.d_in, m.d_out)
    if subsystem is None:
        if x.shape != (m.d_in, m.d_in):
            raise ValidationError(f"map expects {m.d_in}-dim input, got {x.shape}")
        return m.d_in * np.einsum("ij,iajb->ab", x, c4)
    dims = list(dims)
    s = int(subsystem)
    if not 0 <= s < len(dims):
        raise ValidationError(f"subsystem {s} out of range for dims {dims}")
    if dims[s] != m.d_in:
        raise ValidationError(f"subsystem {s} has dimension {dims[s]}, map expects {m.d_in}")
    n = len(dims)
    t = x.reshape(dims + dims)
    t = np.moveaxis(t, [s, n + s], [0, 1])
    out = m.d_in * np.tensordot(c4, t, axes=([0, 2], [0, 1]))  # (a, b, rest...)
    out = np.moveaxis(out, [0, 1], [s, n + s])
    new_dims = dims.copy()
    new_dims[s] = m.d_out
    side = int(np.prod(new_dims))
    return out.reshape(side, side)


def output_dims(m: QuantumMap, dims, subsystem: int | None):
    if subsystem is None:
        return (m.d_out,)
    new = list(dims)
    new[int(subsystem)] = m.d_out
    return tuple(new)


def apply_map(m: QuantumMap, rho: DensityOperator, subsystem: int | None = None):
    """Apply ``m`` to ``rho`` (or to one of its factors).

    Returns ``(state, success_prob)``. Non trace-preserving maps are read
    as post-selected operations: the output is renormalized and the success
    probability is ``weight * trace``. A non-positive output raises
    :class:`NotPositiveError` carrying the raw matrix.
    """
    out = apply_to_matrix(m, rho.matrix, rho.dims, subsystem)
    out = 0.5 * (out + out.conj().T)
    dims = output_dims(m, rho.dims, subsystem)
    tr = float(np.trace(out).real)
    if m.tp_flag:
        success = 1.0
    else:
        if tr <= 1e-14:
            raise ValidationError(f"map output has trace {tr:.3g}: post-selection always fails")
        success = m.weight * tr
        out = out / tr
    lo = linalg.eigvalsh(out)[-1]
    if lo < -1e-9:
        raise NotPositiveError(f"map output is not positive (min eigenvalue {lo:.3g})", out)
    return DensityOperator(out, dims), success


def min_choi_eig(m: QuantumMap) -> float:
    """lambda = max(0, -min eig(choi)) for the normalized Choi matrix."""
    return max(0.0, -float(m.choi_eigenvalues()[-1]))


def is_cp(m: QuantumMap, tol: float = 1e-9) -> bool:
    return bool(m.choi_eigenvalues()[-1] >= -tol)


def is_positive_on(m: QuantumMap, rho: DensityOperator, tol: float = 1e-9) -> bool:
    return bool(linalg.eigvalsh(apply_to_matrix(m, rho.matrix))[-1] >= -tol)


# -- structural physical approximation ------------------------------------

@dataclass(frozen=True)
class SpaResult:
    map: QuantumMap
    alpha: float
    lam: float

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "lambda": self.lam, "map": self.map.to_dict()}


def spa_alpha(lam: float, d: int) -> float:
    return d * d * lam / (d * d * lam + 1.0)


def mix_with_depolarizing(m: QuantumMap, alpha: float) -> QuantumMap:
    dep = QuantumMap(np.eye(m.d_in * m.d_out) / (m.d_in * m.d_out), m.d_in, m.d_out)
    name = f"spa[{m.name}]" if m.name else ""
    return combine([(alpha, dep), (1.0 - alpha, m)], name=name)


def spa(m: QuantumMap) -> SpaResult:
    """Mix ``m`` with depolarizing noise at the smallest weight making it CP."""
    if not m.tp_flag or m.weight != 1.0:
        raise ValidationError("SPA is defined here for trace-preserving maps only")
    if m.d_in != m.d_out:
        raise ValidationError("SPA requires d_in == d_out")
    lam = min_choi_eig(m)
    if lam == 0.0:
        return SpaResult(m, 0.0, 0.0)
    alpha = spa_alpha(lam, m.d_in)
    return SpaResult(mix_with_depolarizing(m, alpha), alpha, lam)


@dataclass(frozen=True)
class LoccTerm:
    probability: float
    alice: QuantumMap
    bob: QuantumMap


@dataclass(frozen=True)
class LoccDecomposition:
    """``SPA(I (x) L) = sum_k p_k A_k (x) B_k`` with CP local maps."""

    terms: tuple[LoccTerm, ...]
    alpha: float
    beta: float
    lam: float
    d: int

    def feasibility(self) -> tuple[float, float]:
        """Slacks of beta >= (1-alpha) lam d^2 and alpha >= beta d^2."""
        d2 = self.d ** 2
        return (self.beta - (1.0 - self.alpha) * self.lam * d2, self.alpha - self.beta * d2)

    def as_map(self) -> QuantumMap:
        return combine([(t.probability, tensor_maps(t.alice, t.bob)) for t in self.terms])

    def apply(self, rho: DensityOperator) -> np.ndarray:
        """Convex mixture of the local term outputs, as a raw matrix."""
        out = np.zeros_like(rho.matrix)
        for t in self.terms:
            x = apply_to_matrix(t.alice, rho.matrix, rho.dims, 0)
            x = apply_to_matrix(t.bob, x, output_dims(t.alice, rho.dims, 0), 1)
            out = out + t.probability * x
        return out

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha, "beta": self.beta, "lambda": self.lam, "d": self.d,
            "terms": [{"probability": t.probability, "alice": t.alice.to_dict(),
                       "bob": t.bob.to_dict()} for t in self.terms],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LoccDecomposition":
        terms = tuple(LoccTerm(float(t["probability"]), QuantumMap.from_dict(t["alice"]),
                               QuantumMap.from_dict(t["bob"])) for t in d["terms"])
        return cls(terms, float(d["alpha"]), float(d["beta"]), float(d["lambda"]), int(d["d"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def locc_parameters(lam: float, d: int) -> tuple[float, float]:
    """Smallest (alpha, beta) satisfying both feasibility inequalities."""
    d2, d4 = d ** 2, d ** 4
    return lam * d4 / (lam * d4 + 1.0), lam * d2 / (lam * d4 + 1.0)


def locc_spa(lambda_map: QuantumMap, d: int | None = None) -> LoccDecomposition:
    """Split the SPA of ``I (x) L`` into two products of local CP maps.

    Term 1 is ``I (x) L~`` with ``L~ = [(1-alpha) L + beta D] / (1-alpha+beta)``;
    term 2 is ``T~ (x) D`` with ``T~ = [alpha D - beta I] / (alpha - beta)``.
    """
    d = lambda_map.d_in if d is None else int(d)
    if lambda_map.d_in != d or lambda_map.d_out != d:
        raise ValidationError("map dimension does not match d")
    if not lambda_map.tp_flag:
        raise ValidationError("map must be trace preserving")
    lam = min_choi_eig(lambda_map)
    if lam <= 0.0:
        raise ValidationError("map is already completely positive; use it directly")
    alpha, beta = locc_parameters(lam, d)
    dep, ident = depolarizing(d), identity_map(d)
    w1, w2 = 1.0 - alpha + beta, alpha - beta
    lam_t = combine([((1.0 - alpha) / w1, lambda_map), (beta / w1, dep)], name="lambda~")
    theta = combine([(alpha / w2, dep), (-beta / w2, ident)], name="theta~")
    dec = LoccDecomposition((LoccTerm(w1, ident, lam_t), LoccTerm(w2, theta, dep)),
                            alpha, beta, lam, d)
    s1, s2 = dec.feasibility()
    if s1 < -1e-12 or s2 < -1e-12:  # pragma: no cover - impossible at the minimal values
        raise RuntimeError(f"infeasible LOCC parameters (slacks {s1:.3g}, {s2:.3g})")
    for t in dec.terms:
        for part in (t.alice, t.bob):
            if not is_cp(part, CP_TOL):
                raise RuntimeError(f"component {part.name or 'map'} is not CP")
    return dec


def composite_spa(lambda_map: QuantumMap) -> SpaResult:
    """SPA of ``I (x) L`` on the d^2-dimensional bipartite input."""
    return spa(tensor_maps(identity_map(lambda_map.d_in), lambda_map))
