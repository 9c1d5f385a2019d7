"""Spectrum reconstruction from power sums ``p_k = tr[rho^k]``.

Newton's identities turn p_1..p_n into elementary symmetric polynomials;
the eigenvalues are then the roots of
``x^n - e_1 x^{n-1} + e_2 x^{n-2} - ... + (-1)^n e_n``, computed as companion
matrix eigenvalues. Sampled moments usually leave the set of valid spectra,
so the roots are projected back onto the probability simplex and, for
sampled input, refined by a constrained least-squares fit to the moments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import linalg, rng
from .errors import InconsistentMomentsError, ValidationError
from .interferometer import estimate_from_counts, joint_probs, moment_from_probs, sample_shots
from .states import DensityOperator, moment_direct

IMAG_DISCARD = 1e-6
IMAG_ERROR = 1e-4
MIN_CLUSTER = 1e-6
MAX_CLUSTER = 1e-3
MAX_PATTERN_DIM = 6  # partitions of n grow quickly; larger n uses a free fit


@dataclass(frozen=True)
class MomentVector:
    """``values[k-1] = tr[rho^k]`` for k = 1..n; ``std_errors`` optional."""

    values: np.ndarray
    std_errors: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.std_errors is not None:
            object.__setattr__(self, "std_errors", np.asarray(self.std_errors, dtype=float))

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class SpectrumEstimate:
    eigenvalues: np.ndarray  # descending
    residual: float
    projected: bool
    raw_roots: np.ndarray = field(repr=False)
    measurements: tuple = field(default=(), repr=False)  # (k, shots) actually used

    @property
    def dimension(self) -> int:
        return self.eigenvalues.size

    def to_dict(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "residual": self.residual,
            "projected": self.projected,
            "raw_roots": {"re": np.real(self.raw_roots).tolist(),
                          "im": np.imag(self.raw_roots).tolist()},
            "measurements": [list(m) for m in self.measurements],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpectrumEstimate":
        roots = np.asarray(d["raw_roots"]["re"]) + 1j * np.asarray(d["raw_roots"]["im"])
        return cls(np.asarray(d["eigenvalues"], dtype=float), float(d["residual"]),
                   bool(d["projected"]), roots, tuple(tuple(m) for m in d.get("measurements", ())))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def power_sums(eigenvalues, n: int | None = None) -> np.ndarray:
    lam = np.asarray(eigenvalues, dtype=float)
    n = lam.size if n is None else n
    return np.array([np.sum(lam ** k) for k in range(1, n + 1)])


def moments_to_elementary(m) -> np.ndarray:
    """Newton's identities: k e_k = sum_{i=1..k} (-1)^(i-1) e_{k-i} p_i."""
    p = np.asarray(m.values if isinstance(m, MomentVector) else m, dtype=float)
    n = p.size
    e = np.zeros(n + 1)
    e[0] = 1.0
    for k in range(1, n + 1):
        acc = 0.0
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * e[k - i] * p[i - 1]
        e[k] = acc / k
    return e[1:]


def companion(e: np.ndarray) -> np.ndarray:
    """Companion matrix of x^n - e1 x^{n-1} + e2 x^{n-2} - ..."""
    n = e.size
    coeffs = np.array([(-1) ** k * e[k] for k in range(n)])
    c = np.zeros((n, n))
    c[0, :] = coeffs
    c[1:, :-1] = np.eye(n - 1)
    return c


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = 1}."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _merge_clusters(roots: np.ndarray) -> np.ndarray:
    """Average roots that split off a multiple root through rounding.

    A root of multiplicity m perturbed by rounding spreads on a circle of
    radius ~eps^(1/m); the cluster mean stays accurate to O(eps). Clusters
    are formed with a radius tied to the largest imaginary part seen, and
    never below 1e-6 (a double root splits by ~sqrt(eps) along the real axis).
    """
    radius = min(MAX_CLUSTER, max(MIN_CLUSTER, 10.0 * float(np.max(np.abs(roots.imag), initial=0.0))))
    order = np.argsort(roots.real)
    r = roots[order]
    out = np.empty(r.size)
    start = 0
    for i in range(1, r.size + 1):
        if i == r.size or abs(r[i] - r[i - 1]) > radius:
            out[start:i] = np.mean(r[start:i]).real
            start = i
    return out


def _finish(lam: np.ndarray, target: np.ndarray, raw: np.ndarray, measurements=()) -> SpectrumEstimate:
    proj = project_simplex(lam)
    projected = bool(np.max(np.abs(proj - lam)) > 1e-12)
    proj = np.sort(proj)[::-1]
    residual = float(np.max(np.abs(power_sums(proj, target.size) - target)))
    return SpectrumEstimate(proj, residual, projected, raw, tuple(measurements))


def elementary_to_spectrum(e, n: int | None = None, strict: bool = True) -> SpectrumEstimate:
    """Roots of the characteristic polynomial, projected onto the simplex.

    With ``strict`` any root whose imaginary part exceeds 1e-4 raises
    :class:`InconsistentMomentsError`; otherwise only real parts are kept.
    """
    e = np.asarray(e, dtype=float)
    n = e.size if n is None else int(n)
    if e.size != n:
        raise ValidationError(f"expected {n} elementary polynomials, got {e.size}")
    raw = np.linalg.eigvals(companion(e))
    worst = float(np.max(np.abs(raw.imag), initial=0.0))
    if strict and worst > IMAG_ERROR:
        raise InconsistentMomentsError(f"complex root with |Im| = {worst:.3g}")
    lam = _merge_clusters(raw)
    target = _moments_from_elementary(e)
    return _finish(lam, target, raw)


def _moments_from_elementary(e: np.ndarray) -> np.ndarray:
    # inverse Newton: p_k = (-1)^(k-1) k e_k + sum_{i=1}^{k-1} (-1)^(i-1) e_i p_{k-i}
    n = e.size
    p = np.zeros(n)
    for k in range(1, n + 1):
        acc = (-1) ** (k - 1) * k * e[k - 1]
        for i in range(1, k):
            acc += (-1) ** (i - 1) * e[i - 1] * p[k - i - 1]
        p[k - 1] = acc
    return p


def fit_spectrum(moments, n: int, start=None, weights=None) -> np.ndarray:
    """Least-squares spectrum on the simplex matching the given power sums.

    ``moments[k-1]`` is the estimate of ``tr rho^k``; any number of orders
    may be supplied. Used to repair sampled moments, whose roots are
    typically complex near degenerate eigenvalues.
    """
    m = np.asarray(moments, dtype=float)
    ks = np.arange(1, m.size + 1)
    w = np.ones(m.size) if weights is None else np.asarray(weights, dtype=float)

    def cost(lam):
        r = np.array([np.sum(lam ** k) for k in ks]) - m
        return float(np.sum(w * r * r))

    def grad(lam):
        r = np.array([np.sum(lam ** k) for k in ks]) - m
        return np.array([np.sum(2 * w * r * ks * li ** (ks - 1)) for li in lam])

    starts = [np.full(n, 1.0 / n)]
    if start is not None:
        starts.insert(0, project_simplex(start))
    cons = ({"type": "eq", "fun": lambda x: np.sum(x) - 1.0, "jac": lambda x: np.ones_like(x)},)
    best = None
    for x0 in starts:
        res = minimize(cost, x0, jac=grad, method="SLSQP", bounds=[(0.0, 1.0)] * n,
                       constraints=cons, options={"ftol": 1e-16, "maxiter": 500})
        x = project_simplex(res.x)
        if best is None or cost(x) < cost(best):
            best = x
    return np.sort(best)[::-1]


def multiplicity_patterns(n: int, largest: int | None = None):
    """Integer partitions of n, largest part first."""
    if n == 0:
        yield ()
        return
    for part in range(min(n, largest or n), 0, -1):
        for rest in multiplicity_patterns(n - part, part):
            yield (part,) + rest


def _fit_pattern(p: np.ndarray, sigma: np.ndarray, mult: tuple, starts) -> tuple[float, np.ndarray]:
    """Weighted fit of distinct values ``v`` with fixed multiplicities; returns (chi2, v)."""
    mult = np.asarray(mult, dtype=float)
    ks = np.arange(2, p.size + 1)
    w = 1.0 / np.maximum(sigma[1:], 1e-12) ** 2

    def cost(v):
        r = np.array([np.sum(mult * v ** k) for k in ks]) - p[1:]
        return float(np.sum(w * r * r))

    def grad(v):
        r = np.array([np.sum(mult * v ** k) for k in ks]) - p[1:]
        return np.array([np.sum(2 * w * r * ks * mult[g] * v[g] ** (ks - 1))
                         for g in range(v.size)])

    cons = ({"type": "eq", "fun": lambda v: float(mult @ v) - 1.0, "jac": lambda v: mult},)
    best = None
    for x0 in starts:
        res = minimize(cost, x0, jac=grad, method="SLSQP", bounds=[(0.0, 1.0)] * mult.size,
                       constraints=cons, options={"ftol": 1e-14, "maxiter": 500})
        v = np.clip(res.x, 0.0, 1.0)
        v = v / float(mult @ v)
        c = cost(v)
        if best is None or c < best[0]:
            best = (c, v)
    return best


def select_degeneracy(p, sigma, n: int, start=None) -> np.ndarray:
    """Spectrum from noisy moments with the eigenvalue multiplicities chosen by AIC.

    Every multiplicity pattern (integer partition of n) is fitted by
    weighted least squares on the simplex; the pattern minimizing
    ``chi2 + 2 * (distinct values - 1)`` wins. Degenerate spectra are then
    recovered without the spurious splitting a free fit produces.
    """
    p = np.asarray(p, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    best = None
    for mult in multiplicity_patterns(n):
        g = len(mult)
        m = np.asarray(mult, dtype=float)
        ramp = np.linspace(2.0, 1.0, g)
        starts = [np.full(g, 1.0 / n), ramp / (m @ ramp), ramp[::-1] / (m @ ramp[::-1])]
        if start is not None and g == n:
            starts.insert(0, project_simplex(start))
        chi2, v = _fit_pattern(p, sigma, mult, starts)
        score = chi2 + 2.0 * (g - 1)
        if best is None or score < best[0]:
            best = (score, np.repeat(v, mult))
    return np.sort(best[1])[::-1]


def spectrum_from_moments(m, strict: bool = True, measurements=()) -> SpectrumEstimate:
    """Newton + companion inversion, optionally followed by a moment fit.

    ``strict=True`` is the exact-moment path. ``strict=False`` is the
    sampled path: complex roots are tolerated and the spectrum is fitted to
    all supplied moments. With standard errors the multiplicities are
    picked by :func:`select_degeneracy`, otherwise a free simplex fit is used.
    """
    mv = m if isinstance(m, MomentVector) else MomentVector(m)
    n = getattr(m, "dimension", None) or mv.n
    p = mv.values
    if p.size < n:
        raise ValidationError(f"need {n} moments, got {p.size}")
    e = moments_to_elementary(p[:n])
    est = elementary_to_spectrum(e, n, strict=strict)
    if strict:
        residual = float(np.max(np.abs(power_sums(est.eigenvalues, p.size) - p)))
        return SpectrumEstimate(est.eigenvalues, residual, est.projected, est.raw_roots,
                                tuple(measurements))
    if mv.std_errors is not None and np.any(mv.std_errors[1:] > 0) and n <= MAX_PATTERN_DIM:
        lam = select_degeneracy(p, mv.std_errors, n, start=est.eigenvalues)
    else:
        lam = fit_spectrum(p, n, start=est.eigenvalues)
    residual = float(np.max(np.abs(power_sums(lam, p.size) - p)))
    projected = est.projected or bool(np.max(np.abs(lam - np.sort(est.raw_roots.real)[::-1])) > 1e-12)
    return SpectrumEstimate(lam, residual, projected, est.raw_roots, tuple(measurements))


@dataclass(frozen=True)
class Interferometric:
    """Sampling settings: moments k = 2..k_max with ``shots`` runs each.

    ``shots=None`` uses the exact outcome probabilities (no sampling noise).
    """

    k_max: int
    shots: int | None
    seed: int = 0


def sampled_moments(rho: DensityOperator, k_max: int, shots: int | None, seed: int):
    """Moment estimates and standard errors for k = 1..k_max (k = 1 is exact)."""
    values = [1.0]
    errors = [0.0]
    measurements = []
    for k in range(2, int(k_max) + 1):
        table = joint_probs(rho, k)
        if shots is None:
            values.append(moment_from_probs(table))
            errors.append(0.0)
            measurements.append((k, None))
            continue
        est = estimate_from_counts(sample_shots(table, shots, rng.split_seed(seed, k)))
        values.append(est.moment)
        errors.append(est.std_error)
        measurements.append((k, int(shots)))
    return MomentVector(np.array(values), np.array(errors)), measurements


def spectrum_from_state(rho: DensityOperator, via="exact") -> SpectrumEstimate:
    """Eigenvalues of a density operator through its power sums.

    ``via`` is ``"exact"`` (moments by matrix powers) or an
    :class:`Interferometric` setting, which estimates each moment with the
    two-lab interferometer and sampled shots.
    """
    n = rho.dim
    if via == "exact":
        p = np.array([moment_direct(rho, k) for k in range(1, n + 1)])
        return spectrum_from_moments(p, strict=True, measurements=[(k, None) for k in range(2, n + 1)])
    if not isinstance(via, Interferometric):
        raise ValidationError(f"unknown estimation route {via!r}")
    if via.k_max < n:
        raise ValidationError(f"k_max={via.k_max} is below the dimension {n}")
    mv, measurements = sampled_moments(rho, via.k_max, via.shots, via.seed)
    if via.shots is None:
        return spectrum_from_moments(MomentVector(mv.values[:n]), strict=True, measurements=measurements)
    return spectrum_from_moments(mv, strict=False, measurements=measurements)


def purity(rho: DensityOperator) -> float:
    return moment_direct(rho, 2)


def entropy(s) -> float:
    """Von Neumann entropy in bits, with 0 log 0 = 0."""
    lam = np.asarray(s.eigenvalues if isinstance(s, SpectrumEstimate) else s, dtype=float)
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log2(lam)))


def min_eigenvalue_bootstrap(mv: MomentVector, n: int, seed: int, replicates: int = 64) -> float:
    """Spread of the fitted minimal eigenvalue under Gaussian moment noise."""
    if mv.std_errors is None or not np.any(mv.std_errors > 0):
        return 0.0
    gen = np.random.Generator(rng.block_stream(seed, 0))
    mins = []
    for _ in range(replicates):
        noisy = mv.values + gen.normal(size=mv.n) * mv.std_errors
        noisy[0] = 1.0
        mins.append(spectrum_from_moments(MomentVector(noisy, mv.std_errors), strict=False)
                    .eigenvalues[-1])
    return float(np.std(mins, ddof=1))


def hermitian_spectrum(rho: DensityOperator) -> np.ndarray:
    return linalg.eigvalsh(rho.matrix)
