"""Exact and sampled statistics of the controlled-shift interferometers.

A single interferometer with a controlled-U coupling shifts its fringes by
``v exp(i alpha) = tr[U rho]``. Two labs each running one on their halves of
``rho_AB^{(x)k}`` (with U the k-copy shift) obtain correlated bits i, j whose
joint distribution is

    P_ij = 1/4 (1 + (-1)^i tr rho_A^k + (-1)^j tr rho_B^k + (-1)^(i+j) tr rho_AB^k)

and ``P00 - P01 - P10 + P11`` recovers ``tr rho_AB^k``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from . import linalg, rng
from .errors import ValidationError
from .permutations import MAX_SIDE, shift_operator
from .states import DensityOperator, moment_direct, partial_trace

PROB_TOL = 1e-12
SUM_TOL = 1e-10
OUTCOMES = ("00", "01", "10", "11")


@dataclass(frozen=True)
class VisibilityReading:
    v: float
    alpha: float


@dataclass(frozen=True)
class ProbTable:
    p00: float
    p01: float
    p10: float
    p11: float

    def __post_init__(self):
        vals = self.as_array()
        if np.any(vals < -PROB_TOL):
            raise ValidationError(f"negative probability in {vals}")
        if abs(vals.sum() - 1.0) > SUM_TOL:
            raise ValidationError(f"probabilities sum to {vals.sum()!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.p00, self.p01, self.p10, self.p11])

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ProbTable":
        return cls(*(float(d[f"p{o}"]) for o in OUTCOMES))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ProbTable":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ShotRecord:
    n00: int
    n01: int
    n10: int
    n11: int
    seed: int
    shots: int

    def __post_init__(self):
        counts = self.counts()
        if np.any(counts < 0):
            raise ValidationError("counts must be non-negative")
        if int(counts.sum()) != self.shots:
            raise ValidationError(f"counts sum to {counts.sum()}, not {self.shots}")
        rng.check_seed(self.seed)

    def counts(self) -> np.ndarray:
        return np.array([self.n00, self.n01, self.n10, self.n11], dtype=np.int64)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seed"] = str(self.seed)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ShotRecord":
        return cls(*(int(d[f"n{o}"]) for o in OUTCOMES), seed=int(d["seed"]), shots=int(d["shots"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ShotRecord":
        return cls.from_dict(json.loads(text))


class Estimate(NamedTuple):
    moment: float
    std_error: float


def visibility(u, rho: DensityOperator) -> VisibilityReading:
    """Fringe visibility and Pancharatnam phase for a controlled-U coupling."""
    u = linalg.as_matrix(np.asarray(u))
    m = rho.matrix if isinstance(rho, DensityOperator) else linalg.as_matrix(rho)
    if u.shape != m.shape:
        raise ValidationError(f"U is {u.shape} but the state is {m.shape}")
    z = complex(np.sum(u * m.T))  # tr[U rho]
    v = abs(z)
    alpha = float(np.angle(z)) if v >= 1e-12 else 0.0
    if alpha == -np.pi:
        alpha = np.pi
    return VisibilityReading(v, alpha)


def _check_bipartite(rho_ab: DensityOperator, k: int) -> tuple[int, int]:
    if not isinstance(rho_ab, DensityOperator) or len(rho_ab.dims) != 2:
        raise ValidationError("expected a bipartite DensityOperator")
    if int(k) < 1:
        raise ValidationError("copy count must be at least 1")
    if rho_ab.dim ** int(k) > MAX_SIDE:
        raise ValidationError(f"(dA dB)^k = {rho_ab.dim ** int(k)} exceeds {MAX_SIDE}")
    return rho_ab.dims


def local_moments(rho_ab: DensityOperator, k: int) -> tuple[float, float, float]:
    """(tr rho_A^k, tr rho_B^k, tr rho_AB^k)."""
    _check_bipartite(rho_ab, k)
    a = moment_direct(partial_trace(rho_ab, [0]), k)
    b = moment_direct(partial_trace(rho_ab, [1]), k)
    return a, b, moment_direct(rho_ab, k)


def _table(va: float, vb: float, vab: float) -> ProbTable:
    p = [0.25 * (1 + sa * va + sb * vb + sa * sb * vab)
         for sa in (1, -1) for sb in (1, -1)]
    return ProbTable(*(max(x, 0.0) if x > -PROB_TOL else x for x in p))


def joint_probs(rho_ab: DensityOperator, k: int) -> ProbTable:
    """Exact joint outcome distribution of the two local interferometers."""
    return _table(*local_moments(rho_ab, k))


def joint_probs_dense(rho_ab: DensityOperator, k: int) -> ProbTable:
    """Same table from the full ``rho^{(x)k}`` and local shift operators.

    Exponential in k; kept as an independent cross-check for small cases.
    """
    da, db = _check_bipartite(rho_ab, k)
    k = int(k)
    big = rho_ab.matrix
    for _ in range(k - 1):
        big = np.kron(big, rho_ab.matrix)
    # reorder factors (A1 B1 A2 B2 ...) -> (A1 .. Ak B1 .. Bk)
    dims = [da, db] * k
    t = big.reshape(dims + dims)
    order = list(range(0, 2 * k, 2)) + list(range(1, 2 * k, 2))
    t = t.transpose(order + [2 * k + i for i in order])
    side = (da * db) ** k
    big = t.reshape(side, side)
    va = shift_operator(k, da).matrix
    vb = shift_operator(k, db).matrix
    ia, ib = np.eye(da ** k), np.eye(db ** k)
    p = []
    for sa in (1, -1):
        for sb in (1, -1):
            proj = np.kron(ia + sa * va, ib + sb * vb)
            p.append(0.25 * np.trace(big @ proj).real)
    return ProbTable(*(max(x, 0.0) if x > -PROB_TOL else x for x in p))


def moment_from_probs(p: ProbTable) -> float:
    """<sigma_z (x) sigma_z> = P00 - P01 - P10 + P11."""
    val = p.p00 - p.p01 - p.p10 + p.p11
    return float(np.clip(val, -1.0, 1.0))


def local_visibilities(rho_ab: DensityOperator, k: int) -> tuple[float, float]:
    """Visibilities each lab sees on its own: tr rho_A^k and tr rho_B^k."""
    p = joint_probs(rho_ab, k)
    va = p.p00 + p.p01 - p.p10 - p.p11
    vb = p.p00 - p.p01 + p.p10 - p.p11
    return va, vb


def sample_outcomes(p: ProbTable, shots: int, seed: int, workers: int = 1) -> np.ndarray:
    """Per-shot joint outcome codes 0..3 (``2*i + j``)."""
    if int(shots) < 1:
        raise ValidationError("shots must be at least 1")
    return rng.categorical(p.as_array(), int(shots), rng.check_seed(seed), workers=workers)


def sample_shots(p: ProbTable, shots: int, seed: int, workers: int = 1) -> ShotRecord:
    """Multinomial draw over the four joint outcomes.

    The counts depend only on ``(p, shots, seed)``; ``workers`` only changes
    how many shot blocks are generated concurrently.
    """
    codes = sample_outcomes(p, shots, seed, workers=workers)
    counts = np.bincount(codes, minlength=4)
    return ShotRecord(*(int(c) for c in counts), seed=int(seed), shots=int(shots))


def estimate_from_counts(r: ShotRecord) -> Estimate:
    """Plug-in estimate of ``tr rho^k`` and its standard error.

    The standard error is the sample standard deviation (ddof=1) of the +-1
    parity sequence divided by sqrt(shots). The estimate is clipped to
    [-1, 1] as a post-processing step.
    """
    n = r.shots
    if n < 2:
        raise ValidationError("need at least two shots for a standard error")
    plus = r.n00 + r.n11
    minus = r.n01 + r.n10
    mean = (plus - minus) / n
    var = max(0.0, (n - n * mean * mean) / (n - 1))
    return Estimate(float(np.clip(mean, -1.0, 1.0)), float(np.sqrt(var / n)))
