import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotating_cavity.core import (
    BasisState,
    HermitianMatrix,
    Kind,
    NonHermitianInput,
    cluster_levels,
    eigensolve_dense,
    eigenvalues_dense,
    fix_phases,
    matrix_exponential_unitary,
)


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a + a.conj().T


def test_basis_state_photon_number_is_checked():
    BasisState.ground()
    with pytest.raises(ValueError):
        BasisState(Kind.GROUND_ONE_PHOTON, photon_number=0)
    with pytest.raises(ValueError):
        BasisState(Kind.ATOM_EXCITED, photon_number=1)
    with pytest.raises(ValueError):
        BasisState(Kind.ATOM_EXCITED, m=2)


def test_labels_must_be_distinct():
    with pytest.raises(ValueError):
        HermitianMatrix(np.eye(2), (BasisState.ground(), BasisState.ground()))
    h = HermitianMatrix(np.eye(3))
    assert h.dim == 3
    assert len(set(h.basis_labels)) == 3


def test_entries_are_frozen():
    h = HermitianMatrix(np.eye(2))
    with pytest.raises(ValueError):
        h.entries[0, 0] = 5.0


def test_non_hermitian_rejected():
    a = np.array([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(NonHermitianInput):
        eigensolve_dense(a)
    with pytest.raises(NonHermitianInput):
        eigenvalues_dense(HermitianMatrix(a))


def test_two_level_closed_form():
    # [[a, b], [b*, c]] has eigenvalues (a+c)/2 -+ sqrt(((a-c)/2)^2 + |b|^2)
    a, c, b = 0.3, -0.7, 0.2 - 0.4j
    w, _ = eigensolve_dense(np.array([[a, b], [np.conj(b), c]]))
    half = np.hypot((a - c) / 2, abs(b))
    assert np.allclose(w, [(a + c) / 2 - half, (a + c) / 2 + half], atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 12), seed=st.integers(0, 2**32 - 1))
def test_eigensolve_dense_properties(n, seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, n)
    w, v = eigensolve_dense(h)
    assert np.all(np.diff(w) >= 0)
    assert np.allclose(v.conj().T @ v, np.eye(n), atol=1e-12)
    assert np.allclose(h @ v, v * w, atol=1e-11 * max(1.0, np.abs(w).max()))
    assert np.isclose(w.sum(), np.trace(h).real, atol=1e-10)


def test_fix_phases_first_component_real_positive(rng):
    v = np.linalg.qr(rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)))[0]
    f = fix_phases(v * np.exp(1j * rng.uniform(0, 6, 5)))
    assert np.allclose(f[0].imag, 0, atol=1e-15)
    assert np.all(f[0].real > 0)
    assert np.allclose(np.abs(f.conj().T @ v), np.eye(5), atol=1e-12)


def test_transformed_matches_similarity(rng):
    h = HermitianMatrix(random_hermitian(rng, 4))
    u = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
    t = h.transformed(u)
    assert np.allclose(np.linalg.eigvalsh(t.entries), np.linalg.eigvalsh(h.entries))
    assert t.hermiticity_error() == 0.0


def test_matrix_exponential_is_unitary_and_matches_scipy(rng):
    from scipy.linalg import expm

    h = random_hermitian(rng, 6)
    u = matrix_exponential_unitary(h, 0.37)
    assert np.allclose(u.conj().T @ u, np.eye(6), atol=1e-13)
    assert np.allclose(u, expm(-1j * 0.37 * h), atol=1e-12)


def test_cluster_levels():
    assert cluster_levels([], 1e-9) == []
    levels = cluster_levels([1.0, 0.0, 1.0 + 1e-12, 2.0, 0.0], 1e-9)
    assert [m for _, m in levels] == [2, 2, 1]
    assert np.allclose([e for e, _ in levels], [0.0, 1.0, 2.0])
