"""Multilinear element maps F: [0,1]^d -> K, their Jacobians and cofactors.

Vertex ordering: a(1)..a(4) run counterclockwise around the face x3 = 0
(the whole element in 2D) starting at the origin, a(5)..a(8) lie above them.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DegenerateElementError, DimensionError, MeshError

KINDS = ("bilinear2d", "trilinear3d", "affine3d")

REF_VERTICES = {
    2: np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float),
    3: np.array(
        [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]],
        dtype=float,
    ),
}

PARALLELEPIPED_TOL = 1e-12


def kind_dim(kind: str) -> int:
    if kind not in KINDS:
        raise ValueError(f"unknown map kind {kind!r}; expected one of {KINDS}")
    return 2 if kind == "bilinear2d" else 3


def cofactor(J) -> np.ndarray:
    """Cofactor matrix from signed minors, vectorized over leading axes."""
    J = np.asarray(J, dtype=float)
    d = J.shape[-1]
    C = np.empty_like(J)
    if d == 2:
        C[..., 0, 0] = J[..., 1, 1]
        C[..., 0, 1] = -J[..., 1, 0]
        C[..., 1, 0] = -J[..., 0, 1]
        C[..., 1, 1] = J[..., 0, 0]
        return C
    if d != 3:
        raise DimensionError(f"cofactor implemented for d in (2, 3), got {d}")
    for i in range(3):
        for j in range(3):
            r = [a for a in range(3) if a != i]
            c = [b for b in range(3) if b != j]
            minor = J[..., r[0], c[0]] * J[..., r[1], c[1]] - J[..., r[1], c[0]] * J[..., r[0], c[1]]
            C[..., i, j] = (-1) ** (i + j) * minor
    return C


def determinant(J) -> np.ndarray:
    J = np.asarray(J, dtype=float)
    if J.shape[-1] == 2:
        return J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    # expansion along the first column, consistent with cofactor()
    return np.einsum("...i,...i->...", J[..., :, 0], cofactor(J)[..., :, 0])


@dataclass(frozen=True)
class JacobianData:
    J: np.ndarray
    detJ: float
    cof: np.ndarray

    def column(self, i):
        """i-th column of J (0-based), i.e. the partial derivative of F along axis i."""
        return self.J[:, i]

    def cof_column(self, j):
        return self.cof[:, j]


def is_parallelepiped(points, tol=PARALLELEPIPED_TOL) -> bool:
    """True iff the eight vertices are the image of the cube under an affine map."""
    a = np.asarray(points, dtype=float)
    if a.shape != (8, 3):
        return False
    base, e1, e2, e3 = a[0], a[1] - a[0], a[3] - a[0], a[4] - a[0]
    expected = base + REF_VERTICES[3] @ np.stack([e1, e2, e3])
    scale = max(1.0, np.abs(a).max())
    return bool(np.abs(expected - a).max() <= tol * scale)


class GeometryMap:
    """Element map given by its vertex images (control points)."""

    def __init__(self, points, kind=None, validate=True):
        points = np.array(points, dtype=float)
        if kind is None:
            kind = "bilinear2d" if points.shape[-1] == 2 else "trilinear3d"
        self.dim = kind_dim(kind)
        if points.shape != (2**self.dim, self.dim):
            raise MeshError(f"{kind} map needs {2**self.dim} control points in R^{self.dim}, got {points.shape}")
        if kind == "affine3d" and validate and not is_parallelepiped(points):
            raise MeshError("affine3d control points do not form a parallelepiped")
        points.setflags(write=False)
        self.kind = kind
        self.points = points

    def __repr__(self):
        return f"GeometryMap(kind={self.kind!r}, points={self.points.tolist()})"

    @property
    def is_affine(self) -> bool:
        if self.kind == "affine3d":
            return True
        if self.dim == 2:
            p = self.points
            return bool(np.allclose(p[2] - p[1], p[3] - p[0], rtol=0, atol=PARALLELEPIPED_TOL * max(1.0, np.abs(p).max())))
        return is_parallelepiped(self.points)

    @property
    def diameter(self) -> float:
        """h_K as the largest distance between two vertices."""
        return max(float(np.linalg.norm(p - q)) for p, q in combinations(self.points, 2))

    def shape_functions(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        ref = REF_VERTICES[self.dim]
        factors = np.where(ref[None, :, :] == 1.0, x[:, None, :], 1.0 - x[:, None, :])
        return np.prod(factors, axis=2)

    def shape_gradients(self, x):
        """Array ``(m, 2^d, d)`` of d N_v / d x_i."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        ref = REF_VERTICES[self.dim]
        factors = np.where(ref[None, :, :] == 1.0, x[:, None, :], 1.0 - x[:, None, :])
        dfac = np.where(ref == 1.0, 1.0, -1.0)
        out = np.empty(factors.shape)
        for i in range(self.dim):
            others = np.prod(np.delete(factors, i, axis=2), axis=2)
            out[:, :, i] = dfac[None, :, i] * others
        return out

    def __call__(self, x):
        return map_eval(self, x)

    def jacobians(self, x) -> np.ndarray:
        """J at points ``(m, d)``; returns ``(m, d, d)`` with ``J[:, a, i] = dF_a/dx_i``."""
        return np.einsum("va,mvi->mai", self.points, self.shape_gradients(x))


def map_eval(G: GeometryMap, x):
    x = np.asarray(x, dtype=float)
    out = G.shape_functions(x) @ G.points
    return out[0] if x.ndim == 1 else out


def jacobian(G: GeometryMap, x) -> JacobianData:
    """Jacobian, determinant and cofactor at a single reference point."""
    J = G.jacobians(np.asarray(x, dtype=float)[None, :])[0]
    det = float(determinant(J))
    if det <= 0.0:
        raise DegenerateElementError(f"det J = {det:.3e} <= 0 at x = {np.asarray(x).tolist()}")
    return JacobianData(J, det, cofactor(J))


def cof_columns_crossproduct(G: GeometryMap, x):
    """Cofactor columns as (d2F x d3F, d3F x d1F, d1F x d2F), 3D only."""
    if G.dim != 3:
        raise DimensionError("cross-product cofactor columns exist only in 3D")
    J = G.jacobians(np.atleast_2d(x))
    d1, d2, d3 = J[..., 0], J[..., 1], J[..., 2]
    cols = (np.cross(d2, d3), np.cross(d3, d1), np.cross(d1, d2))
    if np.asarray(x).ndim == 1:
        return tuple(c[0] for c in cols)
    return cols


def sample_grid(dim, n=5):
    t = np.linspace(0.0, 1.0, n)
    return np.stack(np.meshgrid(*(t,) * dim, indexing="ij"), axis=-1).reshape(-1, dim)


@dataclass(frozen=True)
class ShapeMetrics:
    """Sampled proxies for the shape-regularity constants c1..c4."""

    h: float
    det_min: float  # min |J| / h^d
    det_max: float
    sv_min: float  # min singular value of J / h
    sv_max: float


def shape_regularity_metrics(G: GeometryMap, n=5) -> ShapeMetrics:
    x = sample_grid(G.dim, n)
    J = G.jacobians(x)
    det = determinant(J)
    if det.min() <= 0.0:
        i = int(np.argmin(det))
        raise DegenerateElementError(f"det J = {det[i]:.3e} <= 0 at x = {x[i].tolist()}")
    h = G.diameter
    sv = np.linalg.svd(J, compute_uv=False)
    return ShapeMetrics(h, det.min() / h**G.dim, det.max() / h**G.dim, sv.min() / h, sv.max() / h)


def min_det(G: GeometryMap, n=None) -> float:
    """Smallest det J over a sample grid (default: vertices plus a 5^d grid)."""
    x = sample_grid(G.dim, n or 5)
    return float(determinant(G.jacobians(x)).min())
