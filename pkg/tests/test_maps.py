import json

import numpy as np
import pytest

from loccest import linalg, maps, states
from loccest.errors import NotPositiveError, ValidationError
from loccest.maps import LoccDecomposition, QuantumMap


def pt_b(m, da, db):
    return m.reshape(da, db, da, db).transpose(0, 3, 2, 1).reshape(da * db, da * db)


def kraus_apply(kraus, x):
    return sum(k @ x @ k.conj().T for k in kraus)


PAULIS = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]


def test_named_choi_matrices():
    np.testing.assert_allclose(maps.depolarizing(2).choi, np.eye(4) / 4)
    p3 = maps.identity_map(3)
    assert p3.tp_flag
    assert np.sum(p3.choi_eigenvalues() > 1e-12) == 1
    assert linalg.allclose(p3.choi, states.max_entangled_state(3).matrix, atol=1e-15)
    t2 = maps.transposition(2)
    assert abs(np.trace(t2.choi) - 1) < 1e-15
    # normalized convention: swap/d, eigenvalues +-1/d
    np.testing.assert_allclose(t2.choi_eigenvalues(), [0.5, 0.5, 0.5, -0.5], atol=1e-12)
    neg = maps.negation(2)
    assert not neg.tp_flag


def test_choi_of_dispatch():
    assert maps.choi_of("transposition", 3).d_in == 3
    m = maps.choi_of([np.eye(2)])
    assert linalg.allclose(m.choi, maps.identity_map(2).choi, atol=1e-15)
    for bad in ("swap", "transposition"):
        with pytest.raises(ValidationError):
            maps.choi_of(bad)
    with pytest.raises(ValidationError):
        maps.choi_of([np.eye(2), np.eye(3)])
    with pytest.raises(ValidationError):
        maps.choi_of([])


def test_depolarizing_output(gen):
    rho = states.random_density(2, gen)
    out, success = maps.apply_map(maps.depolarizing(2), rho)
    assert out.isclose(np.eye(2) / 2, atol=1e-15) and success == 1.0
    again, _ = maps.apply_map(maps.depolarizing(2), out)
    assert again.isclose(out, atol=1e-15)


def test_depolarizing_on_factor(gen):
    rho = states.random_density((2, 3), gen)
    out, _ = maps.apply_map(maps.depolarizing(3), rho, subsystem=1)
    expected = np.kron(states.partial_trace(rho, [0]).matrix, np.eye(3) / 3)
    assert out.isclose(expected, atol=1e-14)


def test_identity_application(gen):
    rho = states.random_density((2, 2), gen)
    out, success = maps.apply_map(maps.identity_map(2), rho, subsystem=0)
    assert out.isclose(rho, atol=1e-14) and success == 1.0


def test_kraus_application_agrees(gen):
    kraus = [np.sqrt(0.7) * PAULIS[0], np.sqrt(0.2) * PAULIS[1], np.sqrt(0.1) * PAULIS[3]]
    m = maps.from_kraus(kraus)
    assert m.tp_flag and maps.is_cp(m)
    rho = states.random_density(2, gen)
    assert linalg.allclose(m(rho.matrix), kraus_apply(kraus, rho.matrix), atol=1e-14)
    back = maps.kraus_of(m)
    assert linalg.allclose(kraus_apply(back, rho.matrix), kraus_apply(kraus, rho.matrix), atol=1e-12)
    assert len(back) == 3


def test_kraus_rectangular(gen):
    v = np.linalg.qr(gen.normal(size=(3, 2)) + 1j * gen.normal(size=(3, 2)))[0]
    m = maps.from_kraus([v])
    assert (m.d_in, m.d_out) == (2, 3) and m.tp_flag
    rho = states.random_density(2, gen)
    assert linalg.allclose(m(rho.matrix), v @ rho.matrix @ v.conj().T, atol=1e-14)


def test_transposition_on_singlet_is_not_positive():
    with pytest.raises(NotPositiveError) as info:
        maps.apply_map(maps.transposition(2), states.singlet(), subsystem=1)
    raw = info.value.matrix
    assert linalg.allclose(raw, states.partial_transpose(states.singlet(), 1), atol=1e-15)
    np.testing.assert_allclose(linalg.eigvalsh(raw), [0.5, 0.5, 0.5, -0.5], atol=1e-12)


def test_apply_map_dimension_checks():
    with pytest.raises(ValidationError):
        maps.apply_map(maps.depolarizing(3), states.singlet(), subsystem=1)
    with pytest.raises(ValidationError):
        maps.apply_map(maps.depolarizing(2), states.singlet(), subsystem=2)
    with pytest.raises(ValidationError):
        maps.apply_map(maps.depolarizing(2), states.singlet())


def test_non_tp_post_selection(gen):
    proj = QuantumMap(maps.from_kraus([np.diag([1.0, 0.0])]).choi, 2, 2, weight=0.5)
    assert not proj.tp_flag
    rho = states.random_density(2, gen)
    out, success = maps.apply_map(proj, rho)
    assert out.isclose(np.diag([1.0, 0.0]), atol=1e-14)
    assert success == pytest.approx(0.5 * rho.matrix[0, 0].real)
    with pytest.raises(ValidationError):
        maps.apply_map(proj, states.pure([0, 1]))


def test_min_choi_eig():
    assert maps.min_choi_eig(maps.depolarizing(3)) == 0.0
    assert maps.min_choi_eig(maps.identity_map(2)) == 0.0
    assert maps.min_choi_eig(maps.transposition(2)) == pytest.approx(0.5, abs=1e-12)
    assert maps.min_choi_eig(maps.transposition(3)) == pytest.approx(1 / 3, abs=1e-12)


def test_is_cp():
    assert maps.is_cp(maps.depolarizing(2))
    assert not maps.is_cp(maps.transposition(2), 1e-9)
    assert maps.is_cp(maps.spa(maps.transposition(2)).map)


@pytest.mark.parametrize("d,lam,alpha", [(2, 0.5, 2 / 3), (3, 1 / 3, 0.75)])
def test_spa_transposition(d, lam, alpha):
    res = maps.spa(maps.transposition(d))
    assert res.lam == pytest.approx(lam, abs=1e-12)
    assert res.alpha == pytest.approx(alpha, abs=1e-12)
    assert res.alpha == pytest.approx(d * d * res.lam / (d * d * res.lam + 1), abs=1e-12)
    lo = res.map.choi_eigenvalues()[-1]
    assert -1e-10 <= lo <= 1e-6
    below = maps.mix_with_depolarizing(maps.transposition(d), res.alpha * (1 - 1e-3))
    assert not maps.is_cp(below)


def test_spa_of_cp_map():
    dep = maps.depolarizing(2)
    res = maps.spa(dep)
    assert res.alpha == 0.0 and res.map is dep


def test_spa_rejects_non_tp():
    with pytest.raises(ValidationError):
        maps.spa(maps.negation(2))


def test_locc_parameters_transposition():
    dec = maps.locc_spa(maps.transposition(2))
    assert dec.alpha == pytest.approx(8 / 9, abs=1e-15)
    assert dec.beta == pytest.approx(2 / 9, abs=1e-15)
    np.testing.assert_allclose([t.probability for t in dec.terms], [1 / 3, 2 / 3], atol=1e-15)
    s1, s2 = dec.feasibility()
    assert abs(s1) <= 1e-12 and abs(s2) <= 1e-12
    for t in dec.terms:
        assert maps.is_cp(t.alice, 1e-10) and maps.is_cp(t.bob, 1e-10)


def test_lambda_tilde_component():
    dec = maps.locc_spa(maps.transposition(2))
    lam_t = dec.terms[0].bob
    expected = ((1 / 9) * maps.transposition(2).choi + (2 / 9) * maps.depolarizing(2).choi) / (1 / 3)
    assert linalg.allclose(lam_t.choi, expected, atol=1e-15)
    assert lam_t.choi_eigenvalues()[-1] >= -1e-12


def test_theta_tilde_component(gen):
    dec = maps.locc_spa(maps.transposition(2))
    theta = dec.terms[1].alice
    expected = ((8 / 9) * maps.depolarizing(2).choi - (2 / 9) * maps.identity_map(2).choi) / (2 / 3)
    assert linalg.allclose(theta.choi, expected, atol=1e-15)
    assert theta.choi_eigenvalues()[-1] >= -1e-12
    for _ in range(20):
        _, success = maps.apply_map(theta, states.random_density(2, gen))
        assert 0 < success <= 1


def test_locc_identity_against_formula(gen):
    dec = maps.locc_spa(maps.transposition(2))
    a = 16 * 0.5 / (16 * 0.5 + 1)
    worst = 0.0
    for _ in range(100):
        rho = states.random_density((2, 2), gen)
        direct = a * np.eye(4) / 4 + (1 - a) * pt_b(rho.matrix, 2, 2)
        worst = max(worst, np.max(np.abs(dec.apply(rho) - direct)))
        assert abs(np.trace(dec.apply(rho)) - 1) <= 1e-10
    assert worst <= 1e-10


def test_composite_spa():
    comp = maps.composite_spa(maps.transposition(2))
    assert comp.lam == pytest.approx(0.5, abs=1e-12)
    assert comp.alpha == pytest.approx(8 / 9, abs=1e-12)
    dec = maps.locc_spa(maps.transposition(2))
    assert linalg.allclose(dec.as_map().choi, comp.map.choi, atol=1e-12)


def test_locc_spa_rejects():
    with pytest.raises(ValidationError):
        maps.locc_spa(maps.depolarizing(2))
    with pytest.raises(ValidationError):
        maps.locc_spa(maps.negation(2))
    with pytest.raises(ValidationError):
        maps.locc_spa(maps.transposition(2), d=3)


def test_locc_transposition_qutrit(gen):
    dec = maps.locc_spa(maps.transposition(3))
    s1, s2 = dec.feasibility()
    assert abs(s1) <= 1e-12 and abs(s2) <= 1e-12
    comp = maps.composite_spa(maps.transposition(3))
    rho = states.random_density((3, 3), gen)
    direct = maps.apply_to_matrix(comp.map, rho.matrix)
    assert np.max(np.abs(dec.apply(rho) - direct)) <= 1e-10


def test_tensor_maps(gen):
    ka = [np.sqrt(0.6) * PAULIS[0], np.sqrt(0.4) * PAULIS[1]]
    kb = [np.sqrt(0.5) * PAULIS[0], np.sqrt(0.5) * PAULIS[2]]
    ab = maps.tensor_maps(maps.from_kraus(ka), maps.from_kraus(kb))
    rho = states.random_density((2, 2), gen).matrix
    kraus = [np.kron(x, y) for x in ka for y in kb]
    assert linalg.allclose(ab(rho), kraus_apply(kraus, rho), atol=1e-14)


def test_serialization(gen):
    dec = maps.locc_spa(maps.transposition(2))
    back = LoccDecomposition.from_dict(json.loads(dec.to_json()))
    rho = states.random_density((2, 2), gen)
    assert np.max(np.abs(back.apply(rho) - dec.apply(rho))) <= 1e-15
    m = maps.transposition(2)
    d = json.loads(m.to_json())
    assert {"dims", "re", "im", "d_in", "d_out", "weight", "tp_flag"} <= set(d)
    assert linalg.allclose(QuantumMap.from_json(m.to_json()).choi, m.choi, atol=0)
    d["tp_flag"] = False
    with pytest.raises(ValidationError):
        QuantumMap.from_dict(d)


def test_rejects_bad_choi():
    with pytest.raises(ValidationError):
        QuantumMap(np.eye(3), 2, 2)
    with pytest.raises(ValidationError):
        QuantumMap(np.triu(np.ones((4, 4))), 2, 2)
