import json

import numpy as np
import pytest
import scipy.linalg as sla

from qmlarch import linalg as la
from qmlarch.errors import DimensionError, NotUnitaryError, SingularMatrixError

SIZES = [2, 4, 8, 16]


def _rel(x, m):
    return x / max(1.0, np.linalg.norm(m))


def test_qr_identity_is_exact():
    q, r = la.qr_decompose(np.eye(4))
    np.testing.assert_array_equal(q, np.eye(4))
    np.testing.assert_array_equal(r, np.eye(4))


def test_qr_of_unitary_gives_r_identity():
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    q, r = la.qr_decompose(x)
    np.testing.assert_allclose(q, x, atol=1e-15)
    np.testing.assert_allclose(r, np.eye(2), atol=1e-15)


@pytest.mark.parametrize("n", SIZES)
def test_qr_random(n):
    rng = np.random.default_rng(n)
    for _ in range(100):
        m = la.random_complex(n, rng)
        q, r = la.qr_decompose(m)
        assert _rel(np.linalg.norm(q @ r - m), m) <= 1e-12
        assert la.unitarity_residual(q) <= 1e-12
        d = np.diag(r)
        assert np.all(d.imag == 0) and np.all(d.real >= 0)
        assert np.all(np.tril(r, -1) == 0)


def test_qr_matches_scipy_up_to_column_phases(rng):
    m = la.random_complex(8, rng)
    q, r = la.qr_decompose(m)
    q_ref, r_ref = sla.qr(m)
    ph = np.diag(r_ref) / np.abs(np.diag(r_ref))
    np.testing.assert_allclose(q, q_ref * ph, atol=1e-12)


def test_qr_deterministic(rng):
    m = la.random_complex(8, rng)
    a, b = la.qr_decompose(m), la.qr_decompose(m.copy())
    assert a.first.tobytes() == b.first.tobytes()
    assert a.second.tobytes() == b.second.tobytes()


def test_qr_rejects_non_square():
    with pytest.raises(DimensionError):
        la.qr_decompose(np.ones((2, 3)))


def test_schur_diagonal_keeps_order():
    m = np.diag([2, 3j])
    q, t = la.schur_decompose(m)
    np.testing.assert_array_equal(q, np.eye(2))
    np.testing.assert_array_equal(t, m)


def test_schur_of_unitary_is_diagonal(rng):
    u = la.random_unitary(8, rng)
    q, t = la.schur_decompose(u)
    assert np.linalg.norm(t - np.diag(np.diag(t))) <= 1e-10
    np.testing.assert_allclose(np.abs(np.diag(t)), 1.0, atol=1e-10)


@pytest.mark.parametrize("n", SIZES)
def test_schur_random(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(100):
        m = la.random_complex(n, rng)
        q, t = la.schur_decompose(m)
        nm = np.linalg.norm(m)
        assert _rel(np.linalg.norm(q @ t @ q.conj().T - m), m) <= 1e-10
        assert la.unitarity_residual(q) <= 1e-12
        assert np.max(np.abs(np.tril(t, -1)), initial=0) <= 1e-10 * nm


def test_schur_eigenvalues_match_scipy(rng):
    m = la.random_complex(16, rng)
    _, t = la.schur_decompose(m)
    ours = np.sort_complex(np.diag(t))
    ref = np.sort_complex(np.linalg.eigvals(m))
    np.testing.assert_allclose(ours, ref, atol=1e-10)


def test_schur_permutation_matrix_converges():
    # cyclic shift: all eigenvalues on the unit circle, plain QR iteration stalls
    p = np.roll(np.eye(8), 1, axis=0)
    q, t = la.schur_decompose(p)
    assert np.linalg.norm(q @ t @ q.conj().T - p) <= 1e-10


def test_svd_simple_cases():
    w, s, v = la.svd(np.diag([3.0, 1.0]))
    np.testing.assert_array_equal(s, [3.0, 1.0])
    np.testing.assert_allclose(w, np.eye(2))
    np.testing.assert_allclose(v, np.eye(2))
    w, s, v = la.svd(np.zeros((4, 4)))
    np.testing.assert_array_equal(s, np.zeros(4))
    assert la.unitarity_residual(w) <= 1e-12


@pytest.mark.parametrize("n", SIZES)
def test_svd_random(n):
    rng = np.random.default_rng(200 + n)
    for _ in range(100):
        m = la.random_complex(n, rng)
        w, s, v = la.svd(m)
        assert _rel(np.linalg.norm((w * s) @ v.conj().T - m), m) <= 1e-11
        assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
        np.testing.assert_allclose(s, sla.svdvals(m), rtol=1e-12, atol=1e-13)


def test_svd_rectangular_and_rank_deficient(rng):
    a = la.random_complex(5, rng, cols=3)
    w, s, v = la.svd(a)
    assert w.shape == (5, 5) and v.shape == (3, 3)
    recon = w[:, :3] * s @ v.conj().T
    assert np.linalg.norm(recon - a) <= 1e-12
    low = a @ la.random_complex(3, rng, cols=5)  # 5x5 of rank 3
    w, s, v = la.svd(low)
    assert la.unitarity_residual(w) <= 1e-12
    assert np.linalg.norm((w * s) @ v.conj().T - low) <= 1e-11 * np.linalg.norm(low)


def test_polar_trivial_cases(rng):
    u = la.random_unitary(4, rng)
    pu, pp = la.polar_decompose(u)
    np.testing.assert_allclose(pu, u, atol=1e-12)
    np.testing.assert_allclose(pp, np.eye(4), atol=1e-12)
    pu, pp = la.polar_decompose(2 * np.eye(3))
    np.testing.assert_allclose(pu, np.eye(3), atol=1e-14)
    np.testing.assert_allclose(pp, 2 * np.eye(3), atol=1e-14)


def test_polar_matches_svd_oracle():
    m = np.array([[1, 1], [0, 1]], dtype=complex)
    w, _, vh = np.linalg.svd(m)  # independent LAPACK route
    u, p = la.polar_decompose(m)
    np.testing.assert_allclose(u, w @ vh, atol=1e-12)
    assert np.linalg.norm(u @ p - m) <= 1e-10 * np.linalg.norm(m)
    assert np.all(np.linalg.eigvalsh(p) >= 0)


@pytest.mark.parametrize("n", SIZES)
def test_polar_nearest_unitary(n):
    rng = np.random.default_rng(300 + n)
    m = la.random_complex(n, rng)
    u, _ = la.polar_decompose(m)
    d = np.linalg.norm(u - m)
    for _ in range(50):
        assert d <= np.linalg.norm(la.random_unitary(n, rng) - m)


def test_polar_singular():
    with pytest.raises(SingularMatrixError):
        la.polar_decompose(np.array([[1, 1], [1, 1]], dtype=complex))


def test_eig_unitary_known_spectra():
    a = 0.7
    v, ph = la.eig_unitary(np.diag([np.exp(1j * a), np.exp(-1j * a)]))
    np.testing.assert_allclose(sorted(ph), [-a, a], atol=1e-14)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    v, ph = la.eig_unitary(x)
    np.testing.assert_allclose(sorted(ph), [0, np.pi], atol=1e-14)
    for col in v.T:
        # (1, +-1)/sqrt2 up to phase
        np.testing.assert_allclose(np.abs(col), [2 ** -0.5] * 2, atol=1e-14)


def test_eig_unitary_minus_one_maps_to_pi():
    _, ph = la.eig_unitary(-np.eye(3))
    np.testing.assert_array_equal(ph, [np.pi] * 3)


@pytest.mark.parametrize("n", SIZES)
def test_eig_unitary_random(n):
    rng = np.random.default_rng(400 + n)
    for _ in range(100):
        u = la.random_unitary(n, rng)
        v, ph = la.eig_unitary(u)
        assert np.linalg.norm((v * np.exp(1j * ph)) @ v.conj().T - u) <= 1e-10
        d = v.conj().T @ u @ v
        assert np.linalg.norm(d - np.diag(np.diag(d))) <= 1e-10
        assert la.unitarity_residual(v) <= 1e-10
        assert np.all(ph > -np.pi) and np.all(ph <= np.pi)


def test_eig_unitary_rejects_non_unitary():
    with pytest.raises(NotUnitaryError):
        la.eig_unitary(2 * np.eye(2))


def test_dist_up_to_global_phase(rng):
    m = la.random_complex(4, rng)
    assert la.dist_up_to_global_phase(m, m) == 0
    assert la.dist_up_to_global_phase(m, np.exp(0.77j) * m) <= 1e-14
    x = np.array([[0, 1], [1, 0]])
    assert la.dist_up_to_global_phase(np.eye(2), x) == pytest.approx(2.0)
    with pytest.raises(DimensionError):
        la.dist_up_to_global_phase(np.eye(2), np.eye(3))


def test_dist_matches_closed_form(rng):
    a, b = la.random_complex(4, rng), la.random_complex(4, rng)
    closed = np.sqrt(np.linalg.norm(a) ** 2 + np.linalg.norm(b) ** 2 - 2 * abs(np.trace(a.conj().T @ b)))
    assert la.dist_up_to_global_phase(a, b) == pytest.approx(closed, rel=1e-12)


def test_matrix_json_roundtrip(tmp_path, rng):
    m = la.random_complex(4, rng)
    obj = la.matrix_to_json(m)
    assert set(obj) == {"n", "re", "im"} and len(obj["re"]) == 16
    assert obj["re"][1] == m[0, 1].real  # row-major
    path = tmp_path / "m.json"
    la.save_matrix(path, m)
    np.testing.assert_array_equal(la.load_matrix(path), m)
    json.loads(path.read_text())
