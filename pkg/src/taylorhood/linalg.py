"""Dense symmetric (generalized) eigenproblems and Schur complements.

``sym_gen_eig`` reduces ``S x = lam G x`` to a standard problem by a
Cholesky congruence on the complement of a deflation subspace and then
diagonalizes with a parallel-ordered cyclic Jacobi method (or LAPACK).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, null_space, solve_triangular

from .errors import MetricError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
KERNEL_REL_TOL = 1e-10
METRIC_REL_TOL = 1e-13


def _round_robin(m):
    """Pairings of 0..m-1 (m even) so that every pair meets once per sweep."""
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        rounds.append((np.array(players[: m // 2]), np.array(players[m // 2 :][::-1])))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def off_norm(A) -> float:
    """Frobenius norm of the off-diagonal part (summed directly, no cancellation)."""
    B = np.array(A, dtype=float)
    np.fill_diagonal(B, 0.0)
    return float(np.linalg.norm(B))


def jacobi_eigh(A, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Each sweep visits all index pairs in round-robin order; the n/2
    rotations of a round act on disjoint rows and columns and are applied
    together. Stops once ``off(A) <= tol * ||A||_F``.

    Returns ascending eigenvalues and the orthogonal eigenvector matrix.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    if n <= 1:
        return np.diag(A).copy(), V
    A = 0.5 * (A + A.T)
    target = tol * np.linalg.norm(A)
    m = n + (n % 2)
    if m != n:
        A = np.pad(A, ((0, 1), (0, 1)))
        V = np.pad(V, ((0, 1), (0, 1)))
        V[n, n] = 1.0
    rounds = _round_robin(m)
    sweeps = 0
    while off_norm(A) > target:
        if sweeps >= max_sweeps:
            raise np.linalg.LinAlgError(f"Jacobi iteration did not converge in {sweeps} sweeps")
        for p, q in rounds:
            apq = A[p, q]
            # negligible entries relative to their diagonal pair are dropped
            small = np.abs(apq) <= np.finfo(float).eps * 1e-3 * np.sqrt(np.abs(A[p, p] * A[q, q]))
            A[p[small], q[small]] = 0.0
            A[q[small], p[small]] = 0.0
            active = (apq != 0.0) & ~small
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            diff = A[q, q] - A[p, p]
            # tau = diff / (2 apq), kept finite by working with its reciprocal when large
            big = np.abs(diff) > 1e150 * np.abs(apq)
            tau = np.where(big, 0.0, diff / np.where(big, 1.0, 2.0 * apq))
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            t = np.where(big, apq / np.where(big, diff, 1.0), t)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = Ap * c - Aq * s
            A[:, q] = Ap * s + Aq * c
            A[p, q] = 0.0
            A[q, p] = 0.0
            Vp, Vq = V[:, p].copy(), V[:, q].copy()
            V[:, p] = Vp * c - Vq * s
            V[:, q] = Vp * s + Vq * c
        sweeps += 1
    w = np.diag(A)[:n].copy()
    V = V[:n, :n]
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def symmetric_eigh(A, method="jacobi"):
    if method == "jacobi":
        return jacobi_eigh(A)
    if method == "lapack":
        return np.linalg.eigh(0.5 * (A + A.T))
    raise ValueError(f"unknown eigen method {method!r}")


@dataclass
class GenEig:
    """Solution of ``S x = lam G x`` on the complement of a deflation space.

    ``vectors`` are G-orthonormal columns in the original coordinates.
    """

    values: np.ndarray
    vectors: np.ndarray

    def kernel_mask(self, rel_tol=KERNEL_REL_TOL):
        scale = max(np.abs(self.values).max(initial=0.0), np.finfo(float).tiny)
        return self.values <= rel_tol * scale

    def smallest_positive(self, rel_tol=KERNEL_REL_TOL):
        """``(value, vector, n_kernel)`` for the smallest eigenvalue above the kernel threshold."""
        mask = self.kernel_mask(rel_tol)
        idx = np.flatnonzero(~mask)
        if not len(idx):
            return 0.0, None, int(mask.sum())
        i = idx[0]
        return float(self.values[i]), self.vectors[:, i], int(mask.sum())


def complement_basis(deflation, inner=None, n=None):
    """Orthonormal basis of ``{x : D^T M x = 0}`` (M = identity by default)."""
    if deflation is None:
        return np.eye(n)
    D = np.asarray(deflation, dtype=float)
    if D.ndim == 1:
        D = D[:, None]
    W = D if inner is None else inner @ D
    return null_space(W.T)


def sym_gen_eig(S, G, deflation=None, inner=None, method="jacobi") -> GenEig:
    """Solve ``S x = lam G x`` restricted to the complement of ``deflation``.

    The complement is taken in the ``inner`` product (``G`` if omitted).
    Pass ``inner`` explicitly when ``G`` is only semidefinite and vanishes
    on the deflation space.
    """
    S = np.asarray(S, dtype=float)
    G = np.asarray(G, dtype=float)
    S = 0.5 * (S + S.T)
    G = 0.5 * (G + G.T)
    n = S.shape[0]
    Z = complement_basis(deflation, G if inner is None else inner, n)
    Sr = Z.T @ S @ Z
    Gr = Z.T @ G @ Z
    Gr = 0.5 * (Gr + Gr.T)
    try:
        L = cholesky(Gr, lower=True)
    except np.linalg.LinAlgError as exc:
        raise MetricError("metric is not positive definite on the deflation complement") from exc
    if np.min(np.diag(L)) ** 2 <= METRIC_REL_TOL * np.max(np.diag(Gr)):
        raise MetricError("metric is numerically singular on the deflation complement")
    X = solve_triangular(L, Sr, lower=True)
    C = solve_triangular(L, X.T, lower=True)
    w, U = symmetric_eigh(0.5 * (C + C.T), method)
    vectors = Z @ solve_triangular(L.T, U, lower=False)
    return GenEig(w, vectors)


def schur_complement(A, B, method="cholesky"):
    """``B^T A^{-1} B`` for symmetric positive definite ``A``.

    ``"cholesky"`` forms ``(L^{-1} B)^T (L^{-1} B)`` by triangular solves;
    ``"solve"`` applies a general LU solve to ``B`` and multiplies.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if method == "cholesky":
        L = cholesky(0.5 * (A + A.T), lower=True)
        W = solve_triangular(L, B, lower=True)
        return W.T @ W
    if method == "solve":
        S = B.T @ np.linalg.solve(A, B)
        return 0.5 * (S + S.T)
    raise ValueError(f"unknown Schur complement method {method!r}")
