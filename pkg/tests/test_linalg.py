import numpy as np
import pytest
import scipy.linalg

from loccest import linalg
from loccest.errors import ValidationError


def inertia_below(m, x):
    """Number of eigenvalues below x, by Sylvester's law of inertia on LDL^H."""
    _, d, _ = scipy.linalg.ldl(m - x * np.eye(m.shape[0]), hermitian=True)
    return int(np.sum(np.linalg.eigvalsh(d) < 0))  # d is block diagonal with 1x1/2x2 blocks


def bisect_eigs(m, tol=1e-12):
    bound = np.abs(m).sum(axis=1).max() + 1.0
    n = m.shape[0]
    out = []
    for j in range(n):
        lo, hi = -bound, bound
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if inertia_below(m, mid) <= j:
                lo = mid
            else:
                hi = mid
        out.append(0.5 * (lo + hi))
    return np.sort(out)[::-1]


def random_hermitian(gen, n):
    a = gen.normal(size=(n, n)) + 1j * gen.normal(size=(n, n))
    return 0.5 * (a + a.conj().T)


def test_diagonal():
    np.testing.assert_allclose(linalg.eigvalsh(np.diag([0.2, 0.5, 0.3])), [0.5, 0.3, 0.2], atol=1e-15)


def test_pauli_x():
    np.testing.assert_allclose(linalg.eigvalsh([[0, 1], [1, 0]]), [1, -1], atol=1e-14)


def test_against_inertia_bisection(gen):
    m = random_hermitian(gen, 8)
    np.testing.assert_allclose(linalg.eigvalsh(m), bisect_eigs(m), atol=1e-9)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 16])
def test_reconstruction(gen, n):
    m = random_hermitian(gen, n)
    vals, vecs = linalg.hermitian_eigs(m, vectors=True)
    assert np.all(np.diff(vals) <= 0)
    assert np.max(np.abs(vecs @ np.diag(vals) @ vecs.conj().T - m)) <= 1e-9
    assert np.max(np.abs(vecs.conj().T @ vecs - np.eye(n))) <= 1e-10


def test_degenerate_input():
    v = np.linalg.qr(np.arange(16.0).reshape(4, 4) + np.eye(4))[0]
    m = v @ np.diag([0.5, 0.5, 0.25, -0.25]) @ v.T
    np.testing.assert_allclose(linalg.eigvalsh(m), [0.5, 0.5, 0.25, -0.25], atol=1e-12)


def test_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        linalg.eigvalsh([[0, 1], [0, 0]])


def test_tolerance_parameter():
    m = np.array([[1.0, 1e-8], [0.0, 1.0]])
    with pytest.raises(ValidationError):
        linalg.eigvalsh(m)
    assert linalg.eigvalsh(m, hermitian_tol=1e-7).shape == (2,)


def test_trace_norm():
    assert linalg.trace_norm(np.diag([0.5, -0.5])) == pytest.approx(1.0, abs=1e-15)


def test_tensor_product_ordering():
    a = np.diag([1.0, 0.0])
    b = np.diag([0.0, 1.0])
    np.testing.assert_array_equal(linalg.tensor_product(a, b), np.diag([0, 1, 0, 0]))
    np.testing.assert_array_equal(linalg.tensor_product(np.eye(2), np.eye(2)), np.eye(4))
    zz = linalg.tensor_product(np.diag([1, -1]), np.diag([1, -1]))
    ket01 = np.array([0, 1, 0, 0])
    assert ket01 @ zz @ ket01 == -1


def test_allclose_explicit_tolerance():
    assert linalg.allclose(np.eye(2), np.eye(2) + 1e-9, atol=1e-8)
    assert not linalg.allclose(np.eye(2), np.eye(2) + 1e-7, atol=1e-8)
    assert not linalg.allclose(np.eye(2), np.eye(3), atol=1.0)


def test_matrix_power_trace():
    m = np.diag([0.5, 0.25, 0.25])
    assert linalg.matrix_power_trace(m, 3).real == pytest.approx(0.125 + 2 / 64)
    with pytest.raises(ValidationError):
        linalg.matrix_power_trace(m, 0)
