"""Discrete inf-sup constants and the reference-element semi-norm equivalence.

Every constant is the square root of the smallest positive generalized
eigenvalue of a Schur complement ``B^T A^{-1} B`` against a pressure
metric, with constant pressures deflated in the L2 inner product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import FemSystem
from .errors import DegenerateSystemError, UnsupportedMeshError
from .linalg import KERNEL_REL_TOL, schur_complement, sym_gen_eig, symmetric_eigh
from .tensor_poly import q_basis


@dataclass
class InfSupResult:
    name: str
    value: float
    mode: np.ndarray | None  # minimizing pressure vector, metric-normalized, zero mean
    kernel_dim: int  # eigenvalues below the kernel threshold after deflation
    n_vel: int
    n_pr: int
    eigenvalues: np.ndarray


def _solve(name, S, metric, inner, n_vel, method):
    ones = np.ones(S.shape[0])
    res = sym_gen_eig(S, metric, ones, inner=inner, method=method)
    lam, vec, nker = res.smallest_positive()
    return InfSupResult(name, float(np.sqrt(max(lam, 0.0))), vec, nker, n_vel, S.shape[0], res.values)


def infsup_classical(sys: FemSystem, method="jacobi") -> InfSupResult:
    """beta: velocity H1 norm against the pressure L2 norm."""
    sys.require_velocity()
    S = schur_complement(sys.A_H1, sys.B)
    return _solve("beta", S, sys.M_L2, sys.M_L2, sys.n_vel, method)


def infsup_bp(sys: FemSystem, method="jacobi") -> InfSupResult:
    """gamma: velocity L2 norm against the L2 norm of the pressure gradient."""
    sys.require_velocity()
    S = schur_complement(sys.A_L2, sys.B)
    return _solve("gamma", S, sys.M_grad, sys.M_L2, sys.n_vel, method)


def infsup_meshdep(sys: FemSystem, method="jacobi") -> InfSupResult:
    """delta: velocity H1 norm against the mesh-dependent pressure norm."""
    sys.require_velocity()
    S = schur_complement(sys.A_H1, sys.B)
    return _solve("delta", S, sys.M_h, sys.M_L2, sys.n_vel, method)


LOCAL_NORMS = ("h1", "l2")


def infsup_local(sys: FemSystem, e: int, norms="h1", method="jacobi") -> InfSupResult:
    """Local constant on element ``e``.

    ``norms="h1"`` pairs the local H1 velocity norm with ``h_K |grad q|``;
    ``norms="l2"`` pairs the local L2 velocity norm with ``|grad q|``.
    Local velocities vanish only on the domain boundary; local constants
    are deflated.
    """
    if norms not in LOCAL_NORMS:
        raise ValueError(f"norms must be one of {LOCAL_NORMS}, got {norms!r}")
    em = sys.elements[e]
    keep = sys.local_velocity_mask(e)
    if not keep.any():
        raise DegenerateSystemError(f"element {e} has no velocity dofs off the boundary")
    B = em.B[keep]
    if norms == "h1":
        A = sys.local_A_H1(e)[np.ix_(keep, keep)]
        M = em.h**2 * em.M_grad
    else:
        A = em.A_L2[np.ix_(keep, keep)]
        M = em.M_grad
    S = schur_complement(A, B)
    return _solve(f"local_{norms}", S, M, em.M_L2, int(keep.sum()), method)


def default_interior_faces(d):
    return frozenset((i, 0) for i in range(d))


@dataclass
class SeminormPair:
    """Gram matrices of the two reference semi-norms on Q_{k-1}, in the nodal pressure basis."""

    k: int
    dim: int
    interior_faces: frozenset
    S1: np.ndarray  # partial sum over nodes off the boundary, free directions only
    S2: np.ndarray  # full sum of |grad q|^2 over all nodes


def _check_faces(d, faces):
    for axis, side in faces:
        if not (0 <= axis < d and side in (0, 1)):
            raise ValueError(f"invalid reference face {(axis, side)} in {d}D")
    axes = {axis for axis, _ in faces}
    if len(axes) < d:
        raise UnsupportedMeshError(
            f"need {d} pairwise adjacent interior faces (one per axis), got {sorted(faces)}"
        )


def seminorm_pair(k: int, d: int, interior_faces=None) -> SeminormPair:
    faces = default_interior_faces(d) if interior_faces is None else frozenset(interior_faces)
    _check_faces(d, faces)
    vb, pb = q_basis(k, d), q_basis(k - 1, d)
    idx = vb.indices
    D = pb.grad(vb.nodes)  # (n_nodes, n_pr, d)
    extreme = (idx == 0) | (idx == k)
    side = (idx == k).astype(int)
    on_bdry = np.zeros(len(idx), dtype=bool)
    for axis in range(d):
        for s in (0, 1):
            if (axis, s) not in faces:
                on_bdry |= extreme[:, axis] & (side[:, axis] == s)
    free = (~extreme) & (~on_bdry)[:, None]
    S1 = np.einsum("ai,aji,ali->jl", free.astype(float), D, D)
    S2 = np.einsum("aji,ali->jl", D, D)
    return SeminormPair(k, d, faces, S1, S2)


@dataclass
class SeminormResult:
    k: int
    dim: int
    lambda_min: float
    lambda_max: float
    kernel_dim: int


def seminorm_equivalence(k: int, d: int, interior_faces=None, method="jacobi") -> SeminormResult:
    """Equivalence constants between the two reference semi-norms.

    ``kernel_dim`` counts the null space of the first semi-norm on its
    own; the eigenvalues compare the two on the complement of constants.
    """
    pair = seminorm_pair(k, d, interior_faces)
    w, _ = symmetric_eigh(pair.S1, method)
    kernel_dim = int(np.sum(w <= KERNEL_REL_TOL * max(w.max(), np.finfo(float).tiny)))
    n = pair.S1.shape[0]
    res = sym_gen_eig(pair.S1, pair.S2, np.ones(n), inner=np.eye(n), method=method)
    lam, _, _ = res.smallest_positive()
    return SeminormResult(k, d, float(lam), float(res.values[-1]), kernel_dim)


__all__ = [
    "InfSupResult",
    "SeminormPair",
    "SeminormResult",
    "default_interior_faces",
    "infsup_bp",
    "infsup_classical",
    "infsup_local",
    "infsup_meshdep",
    "seminorm_equivalence",
    "seminorm_pair",
]
