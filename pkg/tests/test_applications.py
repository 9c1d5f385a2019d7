import json
import warnings

import numpy as np
import pytest

from loccest import applications as app, maps, states
from loccest.errors import NotBellDiagonalError, NotMaximallyCorrelatedError, ValidationError
from loccest.spectrum import Interferometric

from conftest import werner_pt_eigs, werner_spectrum

T2 = maps.transposition(2)


def werner_spa_min_eig(p):
    """(8/9) I/4 + (1/9) rho^T_B, smallest eigenvalue from the analytic PT spectrum."""
    return 2 / 9 + (1 / 9) * np.min(werner_pt_eigs(p))


def binary_entropy(p):
    return -p * np.log2(p) - (1 - p) * np.log2(1 - p)


def bell(name):
    return np.outer(states.BELL_VECTORS[name], states.BELL_VECTORS[name].conj())


def test_threshold():
    assert app.detection_threshold(0.5, 2) == pytest.approx(2 / 9)
    v = app.detect_entanglement(states.singlet(), T2)
    assert v.threshold == pytest.approx(2 / 9, abs=1e-12)
    assert v.lam == pytest.approx(0.5, abs=1e-12)
    assert v.alpha == pytest.approx(8 / 9, abs=1e-12)


def test_singlet_detected():
    v = app.detect_entanglement(states.singlet(), T2)
    assert v.min_eig == pytest.approx(1 / 6, abs=1e-10)
    assert v.entangled
    assert v.margin == pytest.approx(2 / 9 - 1 / 6, abs=1e-10)


@pytest.mark.parametrize("p", [0.0, 0.2, 0.5, 0.8, 1.0])
def test_werner_spa_output_matches_oracle(p):
    v = app.detect_entanglement(states.werner(p), T2)
    assert v.min_eig == pytest.approx(werner_spa_min_eig(p), abs=1e-10)


def test_werner_flip_exact():
    assert not app.detect_entanglement(states.werner(1 / 3 - 0.01), T2).entangled
    assert app.detect_entanglement(states.werner(1 / 3 + 0.01), T2).entangled


def test_no_false_positives_on_products(gen):
    for _ in range(200):
        rho = states.tensor(states.random_density(2, gen), states.random_density(2, gen))
        v = app.detect_entanglement(rho, T2)
        assert not v.entangled
        assert v.min_eig >= 2 / 9 - 1e-9


def test_locc_route_matches_exact_output(gen):
    rho = states.random_density((2, 2), gen)
    a = app.spa_output(rho, T2).matrix
    b = app.spa_output(rho, T2, locc=True).matrix
    assert np.max(np.abs(a - b)) <= 1e-12


def test_interferometric_agrees_for_large_margin():
    v = app.detect_entanglement(states.singlet(), T2, Interferometric(4, 10 ** 5, 0))
    assert v.route == "interferometric"
    assert v.std_error > 0
    exact = app.detect_entanglement(states.singlet(), T2)
    if abs(exact.margin) > 5 * v.std_error:
        assert v.entangled == exact.entangled
    prod = states.tensor(states.pure([1, 0]), states.pure([1, 1]))
    v = app.detect_entanglement(prod, T2, Interferometric(4, 10 ** 5, 0))
    assert not v.entangled


def test_interferometric_exact_probabilities():
    v = app.detect_entanglement(states.singlet(), T2, Interferometric(4, None))
    assert v.min_eig == pytest.approx(1 / 6, abs=1e-7)


def test_detect_rejects():
    with pytest.raises(ValidationError):
        app.detect_entanglement(states.maximally_mixed((3, 3)), T2)
    with pytest.raises(ValidationError):
        app.detect_entanglement(states.singlet(), maps.negation(2))
    with pytest.raises(ValidationError):
        app.detect_entanglement(states.singlet(), T2, via="tomography")


def test_verdict_json():
    d = json.loads(app.detect_entanglement(states.singlet(), T2).to_json())
    assert {"min_eig", "threshold", "entangled", "margin", "lambda", "alpha", "beta"} <= set(d)


def test_negativity_values(gen):
    assert app.negativity(states.singlet()) == pytest.approx(1.0, abs=1e-10)
    prod = states.tensor(states.random_density(2, gen), states.random_density(3, gen))
    assert app.negativity(prod) == pytest.approx(0.0, abs=1e-12)
    assert app.negativity(states.werner(1 / 3)) == pytest.approx(0.0, abs=1e-12)
    expected = np.log2(np.sum(np.abs(werner_pt_eigs(0.5))))
    assert expected == pytest.approx(np.log2(1.25))
    assert app.negativity(states.werner(0.5)) == pytest.approx(expected, abs=1e-10)


def test_negativity_zero_iff_ppt(gen):
    for _ in range(100):
        rho = states.random_density((2, 2), gen)
        mixed = states.DensityOperator(0.3 * rho.matrix + 0.7 * np.eye(4) / 4, (2, 2))
        for r in (rho, mixed):
            ppt = np.linalg.eigvalsh(states.partial_transpose(r, 1))[0] >= -1e-12
            assert (app.negativity(r) <= 1e-12) == ppt


def test_negativity_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        app.negativity(states.singlet(), warn=True)
    with pytest.warns(UserWarning):
        app.negativity(states.tensor(states.pure([1, 0]), states.pure([1, 0])), warn=True)


def test_jamiolkowski_states():
    assert app.jamiolkowski_state(maps.identity_map(2)).isclose(states.max_entangled_state(2), atol=1e-15)
    assert app.jamiolkowski_state(maps.depolarizing(2)).isclose(np.eye(4) / 4, atol=1e-15)
    deph = app.jamiolkowski_state(app.dephasing(0.5))
    np.testing.assert_allclose(deph.eigenvalues(), [0.75, 0.25, 0, 0], atol=1e-12)
    with pytest.raises(ValidationError):
        app.jamiolkowski_state(T2)
    with pytest.raises(ValidationError):
        app.jamiolkowski_state(maps.negation(2))


def test_half_weight_pauli_z_kraus():
    # sqrt(1/2) I, sqrt(1/2) Z removes all coherence
    ch = maps.from_kraus([np.sqrt(0.5) * np.eye(2), np.sqrt(0.5) * np.diag([1, -1])])
    np.testing.assert_allclose(app.jamiolkowski_state(ch).eigenvalues(), [0.5, 0.5, 0, 0], atol=1e-12)


def test_capacity_indicator():
    r = app.capacity_indicator(maps.identity_map(2))
    assert r.max_eig == pytest.approx(1.0) and r.capacity_possible
    assert r.negativity == pytest.approx(1.0, abs=1e-10)
    r = app.capacity_indicator(maps.depolarizing(2))
    assert r.max_eig == pytest.approx(0.25) and not r.capacity_possible
    assert r.negativity == pytest.approx(0.0, abs=1e-12) and r.ppt
    r = app.capacity_indicator(app.dephasing(0.5))
    assert r.max_eig == pytest.approx(0.75) and r.capacity_possible
    jam = app.jamiolkowski_state(app.dephasing(0.5))
    brute = np.log2(np.sum(np.abs(np.linalg.eigvalsh(states.partial_transpose(jam, 1)))))
    assert r.negativity == pytest.approx(brute, abs=1e-10)
    with pytest.raises(ValidationError):
        app.capacity_indicator(maps.identity_map(3))
    assert app.capacity_indicator(maps.identity_map(3), single_qubit=False).capacity_possible is None
    assert set(json.loads(r.to_json())) >= {"jam_state", "max_eig", "capacity_possible", "negativity"}


def test_zero_negativity_is_ppt_on_random_channels(gen):
    for i in range(100):
        ch = app.random_channel(2, gen, n_kraus=int(gen.integers(1, 5)))
        noisy = maps.combine([(1 - i / 100, ch), (i / 100, maps.depolarizing(2))])
        r = app.capacity_indicator(noisy)
        pt_min = np.linalg.eigvalsh(states.partial_transpose(r.jam_state, 1))[0]
        assert (r.negativity <= 1e-9) == (pt_min >= -1e-9)
        assert r.ppt == (r.negativity <= 1e-9)


def test_maxcorr_distillable(gen):
    assert app.maxcorr_distillable(states.pure(states.BELL_VECTORS["psi+"], (2, 2))) == pytest.approx(1.0, abs=1e-9)
    half = states.DensityOperator(0.5 * bell("psi+") + 0.5 * bell("psi-"), (2, 2))
    assert app.maxcorr_distillable(half) == pytest.approx(0.0, abs=1e-9)
    mix = states.DensityOperator(0.9 * bell("psi+") + 0.1 * bell("psi-"), (2, 2))
    assert app.maxcorr_distillable(mix) == pytest.approx(1 - binary_entropy(0.9), abs=1e-9)
    assert 1 - binary_entropy(0.9) == pytest.approx(0.531, abs=1e-3)
    u = np.linalg.qr(gen.normal(size=(2, 2)) + 1j * gen.normal(size=(2, 2)))[0]
    w = np.linalg.qr(gen.normal(size=(2, 2)) + 1j * gen.normal(size=(2, 2)))[0]
    uw = np.kron(u, w)
    rotated = states.DensityOperator(uw @ mix.matrix @ uw.conj().T, (2, 2))
    assert app.is_maximally_correlated(rotated)
    assert app.maxcorr_distillable(rotated) == pytest.approx(1 - binary_entropy(0.9), abs=1e-8)


def test_any_two_bell_states_are_maximally_correlated():
    # equal mixture of psi+ and phi+ is (|++><++| + |--><--|)/2
    rho = states.DensityOperator(0.5 * bell("psi+") + 0.5 * bell("phi+"), (2, 2))
    assert app.is_maximally_correlated(rho)
    assert app.maxcorr_distillable(rho) == pytest.approx(0.0, abs=1e-9)


def test_maxcorr_rejects():
    for rho in (states.werner(0.5), states.maximally_mixed((2, 2)),
                states.tensor(states.pure([1, 0]), states.pure([1, 0])),
                states.DensityOperator(0.5 * bell("psi+") + 0.5 * np.diag([1.0, 0, 0, 0]), (2, 2))):
        with pytest.raises(NotMaximallyCorrelatedError):
            app.maxcorr_distillable(rho)
    assert app.maxcorr_distillable(states.werner(0.5), check=False) == pytest.approx(
        1 - (-np.sum(werner_spectrum(0.5) * np.log2(werner_spectrum(0.5)))))


@pytest.mark.parametrize("p", [0.0, 0.2, 1 / 3, 0.5, 0.9, 1.0])
def test_bell_diagonal_werner(p):
    spec, neg = app.bell_diagonal_spectrum_measures(states.werner(p))
    np.testing.assert_allclose(spec, werner_spectrum(p), atol=1e-12)
    assert neg == pytest.approx(np.log2(np.sum(np.abs(werner_pt_eigs(p)))), abs=1e-10)
    assert (spec[0] > 0.5 + 1e-12) == (p > 1 / 3 + 1e-12)


def test_bell_diagonal_named():
    spec, neg = app.bell_diagonal_spectrum_measures(states.singlet())
    np.testing.assert_allclose(spec, [1, 0, 0, 0], atol=1e-12)
    assert neg == pytest.approx(1.0)
    spec, neg = app.bell_diagonal_spectrum_measures(states.maximally_mixed((2, 2)))
    np.testing.assert_allclose(spec, [0.25] * 4, atol=1e-12)
    assert neg == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(NotBellDiagonalError):
        app.bell_diagonal_spectrum_measures(states.tensor(states.pure([1, 1]), states.pure([1, 0])))
    with pytest.raises(NotBellDiagonalError):
        app.bell_diagonal_spectrum_measures(states.maximally_mixed((2, 3)))
