import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taylorhood.errors import MetricError
from taylorhood.linalg import (
    GenEig,
    jacobi_eigh,
    off_norm,
    schur_complement,
    sym_gen_eig,
    symmetric_eigh,
)


def spd(rng, n, cond=1e3):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Q @ np.diag(np.geomspace(1.0, cond, n)) @ Q.T


def test_identical_pair_gives_unit_spectrum():
    rng = np.random.default_rng(0)
    G = spd(rng, 12)
    r = sym_gen_eig(G, G)
    np.testing.assert_allclose(r.values, 1.0, atol=1e-10)


def test_diagonal_pair():
    r = sym_gen_eig(np.diag([1.0, 4.0]), np.eye(2))
    np.testing.assert_allclose(r.values, [1.0, 4.0], atol=1e-14)


def test_random_spd_pair_residual():
    rng = np.random.default_rng(1)
    S, G = spd(rng, 50), spd(rng, 50, 1e2)
    r = sym_gen_eig(S, G)
    res = S @ r.vectors - (G @ r.vectors) * r.values
    assert np.abs(res).max() <= 1e-10 * np.linalg.norm(S, 2)
    # G-orthonormal eigenvectors
    np.testing.assert_allclose(r.vectors.T @ G @ r.vectors, np.eye(50), atol=1e-9)


def test_jacobi_matches_lapack():
    rng = np.random.default_rng(2)
    S, G = spd(rng, 30), spd(rng, 30, 10.0)
    a = sym_gen_eig(S, G, method="jacobi").values
    b = sym_gen_eig(S, G, method="lapack").values
    np.testing.assert_allclose(a, b, rtol=1e-10)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(1, 17), seed=st.integers(0, 10**6))
def test_jacobi_diagonalises(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    A = A + A.T
    w, V = jacobi_eigh(A)
    assert np.all(np.diff(w) >= 0)
    scale = max(np.abs(A).max(), 1.0)
    assert np.abs(A @ V - V * w).max() <= 1e-12 * n * scale
    assert np.abs(V.T @ V - np.eye(n)).max() <= 1e-12 * n


def test_jacobi_on_diagonal_input_is_exact():
    w, V = jacobi_eigh(np.diag([3.0, -1.0, 2.0]))
    assert w.tolist() == [-1.0, 2.0, 3.0]
    assert np.array_equal(np.abs(V), np.eye(3)[:, [1, 2, 0]])


def test_off_norm_no_cancellation():
    A = np.diag([1e8, 1.0]) + np.array([[0.0, 1e-6], [1e-6, 0.0]])
    assert off_norm(A) == pytest.approx(np.sqrt(2) * 1e-6, rel=1e-12)
    assert off_norm(np.diag([5.0, 7.0])) == 0.0


def test_unknown_eigen_method():
    with pytest.raises(ValueError):
        symmetric_eigh(np.eye(2), "power")


def test_indefinite_metric_rejected():
    with pytest.raises(MetricError):
        sym_gen_eig(np.eye(2), np.diag([1.0, -1.0]))
    with pytest.raises(MetricError):
        sym_gen_eig(np.eye(2), np.diag([1.0, 0.0]))


def test_deflation_removes_constant_mode():
    n = 6
    L = 2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    L[0, 0] = L[-1, -1] = 1.0  # Neumann Laplacian, kernel = constants
    ones = np.ones(n)
    r = sym_gen_eig(L, L, deflation=ones, inner=np.eye(n))
    np.testing.assert_allclose(r.values, 1.0, atol=1e-12)
    assert np.abs(ones @ r.vectors).max() <= 1e-12
    with pytest.raises(MetricError):
        sym_gen_eig(L, L)


def test_smallest_positive_counts_kernel():
    g = GenEig(np.array([1e-14, 0.25, 2.0]), np.eye(3))
    val, vec, nk = g.smallest_positive()
    assert val == 0.25 and nk == 1
    assert np.array_equal(vec, [0.0, 1.0, 0.0])
    val, vec, nk = GenEig(np.zeros(2), np.eye(2)).smallest_positive()
    assert val == 0.0 and vec is None and nk == 2


def test_schur_complement_routes_agree():
    rng = np.random.default_rng(3)
    A = spd(rng, 40)
    B = rng.standard_normal((40, 15))
    a = schur_complement(A, B, "cholesky")
    b = schur_complement(A, B, "solve")
    assert np.abs(a - b).max() <= 1e-10 * np.abs(a).max()
    with pytest.raises(ValueError):
        schur_complement(A, B, "qr")
