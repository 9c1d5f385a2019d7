"""Entanglement detection, negativity and channel indicators."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import linalg, rng
from .errors import NotBellDiagonalError, NotMaximallyCorrelatedError, ValidationError
from .maps import QuantumMap, apply_to_matrix, composite_spa, is_cp, locc_spa
from .spectrum import (Interferometric, MomentVector, entropy, min_eigenvalue_bootstrap,
                       sampled_moments, spectrum_from_moments, spectrum_from_state)
from .states import BELL_VECTORS, DensityOperator, partial_trace, partial_transpose

EXACT_TOL = 1e-9
SIGMA_FACTOR = 3.0
BELL_OFFDIAG_TOL = 1e-8


@dataclass(frozen=True)
class EntanglementVerdict:
    min_eig: float
    threshold: float
    entangled: bool
    margin: float  # threshold - min_eig
    tolerance: float
    lam: float
    alpha: float
    beta: float
    std_error: float = 0.0
    spectrum: tuple = ()
    route: str = "exact"

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("min_eig", "threshold", "entangled", "margin",
                                           "tolerance", "alpha", "beta", "std_error", "route")}
        d["lambda"] = self.lam
        d["spectrum"] = list(self.spectrum)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class ChannelReport:
    jam_state: DensityOperator = field(repr=False)
    max_eig: float
    capacity_possible: bool | None
    negativity: float
    ppt: bool  # negativity == 0: the PPT necessary test for capacity fails

    def to_dict(self) -> dict:
        return {"jam_state": self.jam_state.to_dict(), "max_eig": self.max_eig,
                "capacity_possible": self.capacity_possible, "negativity": self.negativity,
                "ppt": self.ppt}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def detection_threshold(lam: float, d: int) -> float:
    """Lower bound d^2 lambda / (d^4 lambda + 1) on SPA outputs of separable states."""
    return d * d * lam / (d ** 4 * lam + 1.0)


def spa_output(rho_ab: DensityOperator, lambda_map: QuantumMap, locc: bool = False) -> DensityOperator:
    """State produced by the SPA of ``I (x) L`` acting on ``rho_ab``."""
    if locc:
        out = locc_spa(lambda_map).apply(rho_ab)
    else:
        out = apply_to_matrix(composite_spa(lambda_map).map, rho_ab.matrix)
    return DensityOperator(0.5 * (out + out.conj().T), rho_ab.dims)


def detect_entanglement(rho_ab: DensityOperator, lambda_map: QuantumMap,
                        via="exact") -> EntanglementVerdict:
    """Compare the least eigenvalue of the SPA output with the separable bound.

    ``via`` is ``"exact"`` or an :class:`Interferometric` setting; in the
    latter case the SPA is applied through its LOCC decomposition and the
    spectrum is estimated from sampled moments. The decision tolerance is
    1e-9 on the exact route and three bootstrap standard errors otherwise.
    """
    d = lambda_map.d_in
    if len(rho_ab.dims) != 2 or rho_ab.dims != (d, d):
        raise ValidationError(f"expected a {d}x{d} bipartite state, got dims {rho_ab.dims}")
    if not lambda_map.tp_flag:
        raise ValidationError("map must be trace preserving")
    comp = composite_spa(lambda_map)
    lam = comp.lam  # computed on the d^2-dimensional composite, not assumed
    threshold = detection_threshold(lam, d)
    alpha = comp.alpha
    beta = alpha / d ** 2
    if via == "exact":
        out = spa_output(rho_ab, lambda_map)
        est = spectrum_from_state(out, "exact")
        sigma, tol, route = 0.0, EXACT_TOL, "exact"
    else:
        if not isinstance(via, Interferometric):
            raise ValidationError(f"unknown route {via!r}")
        out = spa_output(rho_ab, lambda_map, locc=lam > 0)
        k_max = max(via.k_max, out.dim)
        mv, meas = sampled_moments(out, k_max, via.shots, via.seed)
        if via.shots is None:
            est = spectrum_from_moments(MomentVector(mv.values[:out.dim]), strict=True,
                                        measurements=meas)
            sigma = 0.0
        else:
            est = spectrum_from_moments(mv, strict=False, measurements=meas)
            sigma = min_eigenvalue_bootstrap(mv, out.dim, rng.split_seed(via.seed, 0xB007))
        tol = max(EXACT_TOL, SIGMA_FACTOR * sigma)
        route = "interferometric"
    min_eig = float(est.eigenvalues[-1])
    margin = threshold - min_eig
    return EntanglementVerdict(min_eig, threshold, bool(min_eig < threshold - tol), margin, tol,
                               lam, alpha, beta, sigma, tuple(est.eigenvalues.tolist()), route)


def has_maximally_mixed_marginal(rho_ab: DensityOperator, tol: float = 1e-8) -> bool:
    for s in (0, 1):
        red = partial_trace(rho_ab, [s]).matrix
        if linalg.allclose(red, np.eye(red.shape[0]) / red.shape[0], tol):
            return True
    return False


def negativity(rho_ab: DensityOperator, warn: bool = False) -> float:
    """log2 of the trace norm of the partial transpose on the second factor.

    The quantity is computed for every bipartite state. With ``warn`` a
    ``UserWarning`` is emitted when neither marginal is maximally mixed,
    the class of states for which it is advertised as an entanglement
    estimate.
    """
    if len(rho_ab.dims) != 2:
        raise ValidationError("negativity needs a bipartite state")
    if warn and not has_maximally_mixed_marginal(rho_ab):
        warnings.warn("no maximally mixed marginal; negativity is outside its stated class")
    pt = partial_transpose(rho_ab, 1)
    return max(0.0, float(np.log2(linalg.trace_norm(pt))))


def jamiolkowski_state(channel: QuantumMap) -> DensityOperator:
    """Choi state ``(I (x) L) P+`` of a channel."""
    if channel.d_in != channel.d_out:
        raise ValidationError("channel must map C^d to C^d")
    if not channel.tp_flag:
        raise ValidationError("channel is not trace preserving")
    if not is_cp(channel):
        raise ValidationError("channel is not completely positive")
    return DensityOperator(channel.choi, (channel.d_in, channel.d_out))


def capacity_indicator(channel: QuantumMap, single_qubit: bool = True) -> ChannelReport:
    """Spectral capacity test on the Choi state plus the PPT necessary test.

    For a qubit channel, capacity is possible exactly when the largest
    eigenvalue of the Choi state exceeds 1/2. Zero negativity of the Choi
    state rules out nonzero capacity for any dimension.
    """
    if single_qubit and channel.d_in != 2:
        raise ValidationError("the 1/2 eigenvalue criterion applies to qubit channels only")
    jam = jamiolkowski_state(channel)
    max_eig = float(jam.eigenvalues()[0])
    neg = negativity(jam)
    possible = bool(max_eig > 0.5 + EXACT_TOL) if single_qubit else None
    return ChannelReport(jam, max_eig, possible, neg, bool(neg <= EXACT_TOL))


def _product_vectors_in_span(v1: np.ndarray, v2: np.ndarray):
    """Product vectors in span{v1, v2} of C^2 (x) C^2 (up to two, normalized)."""
    m1, m2 = v1.reshape(2, 2), v2.reshape(2, 2)
    # det(m1 + t m2) = a t^2 + b t + c
    a = np.linalg.det(m2)
    c = np.linalg.det(m1)
    b = m1[0, 0] * m2[1, 1] + m2[0, 0] * m1[1, 1] - m1[0, 1] * m2[1, 0] - m2[0, 1] * m1[1, 0]
    out = []
    if abs(c) < 1e-10:
        out.append(m1)
    if abs(a) < 1e-10:
        out.append(m2)
        if abs(b) > 1e-10:
            out.append(m1 - (c / b) * m2)
    else:
        for t in np.roots([a, b, c]):
            out.append(m1 + t * m2)
    vecs = []
    for m in out[:2]:
        u, s, vh = np.linalg.svd(m)
        vecs.append((u[:, 0], vh[0].conj(), s))
    return vecs


def is_maximally_correlated(rho: DensityOperator, tol: float = 1e-8) -> bool:
    """Rank <= 2, both marginals I/2, support spanned by |a0 b0>, |a1 b1>
    with <a0|a1> = <b0|b1> = 0."""
    if rho.dims != (2, 2):
        return False
    for s in (0, 1):
        if not linalg.allclose(partial_trace(rho, [s]).matrix, np.eye(2) / 2, tol):
            return False
    eig = linalg.hermitian_eigs(rho.matrix, vectors=True)
    if eig.values[2] > tol:
        return False
    if eig.values[1] <= tol:
        return True  # pure with maximally mixed marginals: a maximally entangled state
    found = _product_vectors_in_span(eig.vectors[:, 0], eig.vectors[:, 1])
    if len(found) < 2:
        return False
    (a0, b0, s0), (a1, b1, s1) = found
    if s0[1] > 1e-6 * s0[0] or s1[1] > 1e-6 * s1[0]:
        return False
    return abs(np.vdot(a0, a1)) < 1e-6 and abs(np.vdot(b0, b1)) < 1e-6


def maxcorr_distillable(rho: DensityOperator, check: bool = True) -> float:
    """One-way distillable entanglement 1 - S(rho), in bits."""
    if check and not is_maximally_correlated(rho):
        raise NotMaximallyCorrelatedError("state is not a maximally correlated two-qubit state")
    return 1.0 - entropy(linalg.eigvalsh(rho.matrix))


BELL_BASIS = np.column_stack([BELL_VECTORS[k] for k in ("phi+", "phi-", "psi+", "psi-")])


def bell_diagonal_spectrum_measures(rho: DensityOperator, tol: float = BELL_OFFDIAG_TOL):
    """Bell-basis spectrum (descending) and negativity of a Bell-diagonal state.

    The negativity is computed from the partial transpose and cross-checked
    against the spectral formula ``log2(2 max(lambda_max, 1/2))``.
    """
    if rho.dims != (2, 2):
        raise NotBellDiagonalError("Bell-diagonal states are two-qubit states")
    m = BELL_BASIS.conj().T @ rho.matrix @ BELL_BASIS
    off = m - np.diag(np.diag(m))
    if np.max(np.abs(off)) > tol:
        raise NotBellDiagonalError(f"off-diagonal Bell-basis mass {np.max(np.abs(off)):.3g}")
    spectrum = np.sort(np.real(np.diag(m)))[::-1]
    neg = negativity(rho)
    spectral = float(np.log2(2.0 * max(spectrum[0], 0.5)))
    if abs(neg - spectral) > 1e-8:  # pragma: no cover - identity for Bell-diagonal states
        raise RuntimeError(f"negativity {neg} disagrees with spectral value {spectral}")
    return spectrum, neg


def dephasing(coherence: float) -> QuantumMap:
    """Qubit channel multiplying off-diagonal entries by ``coherence``."""
    from .maps import from_kraus

    q = 0.5 * (1.0 - coherence)
    return from_kraus([np.sqrt(1 - q) * np.eye(2), np.sqrt(q) * np.diag([1.0, -1.0])])


def random_channel(d: int, gen: np.random.Generator, n_kraus: int | None = None) -> QuantumMap:
    """Random channel from a Haar-ish isometry (Ginibre + QR)."""
    from .maps import from_kraus

    r = n_kraus or d * d
    g = gen.normal(size=(r * d, d)) + 1j * gen.normal(size=(r * d, d))
    q, _ = np.linalg.qr(g)
    return from_kraus([q[i * d:(i + 1) * d, :] for i in range(r)])


__all__ = [
    "EntanglementVerdict", "ChannelReport", "detect_entanglement", "detection_threshold",
    "spa_output", "negativity", "jamiolkowski_state", "capacity_indicator",
    "maxcorr_distillable", "is_maximally_correlated", "bell_diagonal_spectrum_measures",
    "has_maximally_mixed_marginal", "dephasing", "random_channel",
]
