"""Taylor-Hood Q_k - Q_{k-1} spaces, the mixed form b and the Gram matrices.

Element integrals of ``b`` are computed on the reference element from

    b_K(v, q) = int_K^ v^ . cof(J) grad q^ dx^ - int_dK^ v^ . cof(J) n^ q^ ds^

with either the (k+1)-point Gauss-Lobatto rule or a (2k+3)-point
Gauss-Legendre rule. Gram matrices always use the Gauss-Legendre rule.
All storage is dense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConditionViolationError, DegenerateSystemError
from .gauss_lobatto import reference_rule, tensor_rule
from .geometry import GeometryMap, cofactor, determinant
from .mesh import Mesh, build_node_table, local_facets
from .tensor_poly import q_basis

GAUSS_LOBATTO = "gauss_lobatto_kp1"
HIGH_ORDER = "reference_high_order"
QUAD_MODES = (GAUSS_LOBATTO, HIGH_ORDER)
B_ROUTES = ("ibp_facets", "ibp_volume", "divergence")


def high_order_points(k):
    return 2 * k + 3


def _rules(k, dim, quad_mode):
    if quad_mode == GAUSS_LOBATTO:
        return tensor_rule(k + 1, dim), tensor_rule(k + 1, dim - 1)
    if quad_mode == HIGH_ORDER:
        n = high_order_points(k)
        return reference_rule(n, dim), reference_rule(n, dim - 1)
    raise ValueError(f"unknown quadrature mode {quad_mode!r}; expected one of {QUAD_MODES}")


def facet_points(facet_pts, axis, side):
    """Lift points of the (d-1)-cube onto the reference facet {x_axis = side}."""
    return np.insert(facet_pts, axis, float(side), axis=1)


@dataclass
class ElementMatrices:
    """Local matrices of one element; velocity dofs are ordered node-major."""

    B: np.ndarray  # full b_K, volume minus facet terms
    B_volume: np.ndarray
    B_div: np.ndarray  # -int q div v
    A_L2: np.ndarray
    A_grad: np.ndarray
    M_L2: np.ndarray
    M_grad: np.ndarray
    h: float


def element_b(G: GeometryMap, k: int, quad_mode=GAUSS_LOBATTO):
    """Return ``(B_volume, B_facets, B_div)`` for one element.

    Rows index velocity dofs ``a * d + c`` (local node ``a``, component ``c``),
    columns local pressure nodes. ``B_volume - B_facets`` and ``B_div``
    both equal b_K on the local basis whenever the rule is exact.
    """
    d = G.dim
    vb, pb = q_basis(k, d), q_basis(k - 1, d)
    nv, npr = len(vb), len(pb)
    rule, frule = _rules(k, d, quad_mode)
    x, w = rule.points, rule.weights
    C = cofactor(G.jacobians(x))
    phi, dphi = vb.eval(x), vb.grad(x)
    psi, dpsi = pb.eval(x), pb.grad(x)

    cof_dpsi = np.einsum("mcd,mjd->mjc", C, dpsi)
    B_vol = np.einsum("m,ma,mjc->acj", w, phi, cof_dpsi).reshape(nv * d, npr)

    B_fac = np.zeros((nv, d, npr))
    for axis, side in local_facets(d):
        xf = facet_points(frule.points, axis, side)
        sign = 2.0 * side - 1.0
        cof_n = sign * cofactor(G.jacobians(xf))[:, :, axis]
        B_fac += np.einsum("m,ma,mc,mj->acj", frule.weights, vb.eval(xf), cof_n, pb.eval(xf))
    B_fac = B_fac.reshape(nv * d, npr)

    cof_dphi = np.einsum("mcd,mad->mac", C, dphi)
    B_div = -np.einsum("m,mj,mac->acj", w, psi, cof_dphi).reshape(nv * d, npr)
    return B_vol, B_fac, B_div


def element_grams(G: GeometryMap, k: int):
    """Velocity L2 / gradient Grams and pressure L2 / gradient Grams."""
    d = G.dim
    vb, pb = q_basis(k, d), q_basis(k - 1, d)
    rule = reference_rule(high_order_points(k), d)
    x, w = rule.points, rule.weights
    J = G.jacobians(x)
    det = determinant(J)
    Jinv = np.linalg.inv(J)
    wd = w * det

    def grams(basis):
        val = basis.eval(x)
        gphys = np.einsum("mid,mai->mad", Jinv, basis.grad(x))
        mass = np.einsum("m,ma,mb->ab", wd, val, val)
        stiff = np.einsum("m,mad,mbd->ab", wd, gphys, gphys)
        return mass, stiff

    vm, vk = grams(vb)
    pm, pk = grams(pb)
    eye = np.eye(d)
    return np.kron(vm, eye), np.kron(vk, eye), pm, pk


def element_matrices(G: GeometryMap, k: int, quad_mode=GAUSS_LOBATTO) -> ElementMatrices:
    B_vol, B_fac, B_div = element_b(G, k, quad_mode)
    A_L2, A_grad, M_L2, M_grad = element_grams(G, k)
    return ElementMatrices(B_vol - B_fac, B_vol, B_div, A_L2, A_grad, M_L2, M_grad, G.diameter)


class FemSystem:
    """Assembled Taylor-Hood system on a mesh.

    Velocity dofs: ``d`` per global order-k node not on the boundary,
    numbered node-major. Pressure dofs: one per global order-(k-1) node.

    Attributes
    ----------
    B : (n_vel, n_pr) with ``b(v, q) = v @ B @ q``
    A_L2, A_grad, A_H1 : velocity Grams (``A_H1 = A_L2 + A_grad`` unless
        ``h1_seminorm`` is set, then ``A_H1 = A_grad``)
    M_L2, M_grad, M_h : pressure Grams, ``M_h = sum_K h_K^2 M_grad|_K``
    ones_p : constant pressure vector
    """

    def __init__(self, mesh: Mesh, k: int, quad_mode=GAUSS_LOBATTO, b_route="ibp_facets", h1_seminorm=False):
        if k < 2:
            raise ValueError(f"Taylor-Hood degree k must be >= 2, got {k}")
        if quad_mode not in QUAD_MODES:
            raise ValueError(f"unknown quadrature mode {quad_mode!r}")
        if b_route not in B_ROUTES:
            raise ValueError(f"unknown b route {b_route!r}; expected one of {B_ROUTES}")
        if quad_mode == GAUSS_LOBATTO and not mesh.gauss_lobatto_exact:
            raise ConditionViolationError(
                "Gauss-Lobatto assembly requested on non-parallelepiped 3D elements; use reference_high_order"
            )
        self.mesh = mesh
        self.k = k
        self.dim = d = mesh.dim
        self.quad_mode = quad_mode
        self.b_route = b_route
        self.h1_seminorm = h1_seminorm

        self.vel_table = build_node_table(mesh, k)
        self.pr_table = build_node_table(mesh, k - 1)
        free = ~self.vel_table.on_boundary
        self.vel_dofs = -np.ones((self.vel_table.n_nodes, d), dtype=int)
        self.vel_dofs[free] = np.arange(free.sum() * d).reshape(-1, d)
        self.n_vel = int(free.sum() * d)
        self.n_pr = self.pr_table.n_nodes
        self.ones_p = np.ones(self.n_pr)

        self.elements = [element_matrices(G, k, quad_mode) for G in mesh.maps]
        self._assemble()

    def __repr__(self):
        return (
            f"FemSystem(k={self.k}, d={self.dim}, n_elements={self.mesh.n_elements}, "
            f"n_vel={self.n_vel}, n_pr={self.n_pr}, quad_mode={self.quad_mode!r})"
        )

    def elem_vel_dofs(self, e) -> np.ndarray:
        """Global velocity dof per local velocity dof of element ``e`` (-1 on the boundary)."""
        return self.vel_dofs[self.vel_table.elem_nodes[e]].reshape(-1)

    def elem_pr_dofs(self, e) -> np.ndarray:
        return self.pr_table.elem_nodes[e]

    def _assemble(self):
        nv, npr = self.n_vel, self.n_pr
        B = np.zeros((nv, npr))
        A_L2 = np.zeros((nv, nv))
        A_grad = np.zeros((nv, nv))
        M_L2 = np.zeros((npr, npr))
        M_grad = np.zeros((npr, npr))
        M_h = np.zeros((npr, npr))
        route = {"ibp_facets": "B", "ibp_volume": "B_volume", "divergence": "B_div"}[self.b_route]
        for e, em in enumerate(self.elements):
            vd = self.elem_vel_dofs(e)
            pd = self.elem_pr_dofs(e)
            keep = vd >= 0
            rows = vd[keep]
            B[np.ix_(rows, pd)] += getattr(em, route)[keep]
            A_L2[np.ix_(rows, rows)] += em.A_L2[np.ix_(keep, keep)]
            A_grad[np.ix_(rows, rows)] += em.A_grad[np.ix_(keep, keep)]
            M_L2[np.ix_(pd, pd)] += em.M_L2
            M_grad[np.ix_(pd, pd)] += em.M_grad
            M_h[np.ix_(pd, pd)] += em.h**2 * em.M_grad
        self.B = B
        self.A_L2 = A_L2
        self.A_grad = A_grad
        self.A_H1 = A_grad.copy() if self.h1_seminorm else A_L2 + A_grad
        self.M_L2 = M_L2
        self.M_grad = M_grad
        self.M_h = M_h

    def local_velocity_mask(self, e) -> np.ndarray:
        """Local velocity dofs of element ``e`` belonging to V_K (not on the boundary)."""
        return self.elem_vel_dofs(e) >= 0

    def local_A_H1(self, e) -> np.ndarray:
        em = self.elements[e]
        return em.A_grad if self.h1_seminorm else em.A_L2 + em.A_grad

    def gram(self, which):
        try:
            return {
                "vel_H1": self.A_H1,
                "vel_L2": self.A_L2,
                "pr_L2": self.M_L2,
                "pr_grad": self.M_grad,
                "pr_meshdep": self.M_h,
            }[which]
        except KeyError:
            raise ValueError(f"unknown norm {which!r}") from None

    def interpolate_pressure(self, f) -> np.ndarray:
        """Nodal interpolant of ``f(x)`` (x of shape ``(m, d)``) in Q_h."""
        return np.asarray(f(self.pr_table.coords), dtype=float)

    def interpolate_velocity(self, f) -> np.ndarray:
        """Nodal interpolant of a vector field in V_h (boundary values dropped)."""
        vals = np.asarray(f(self.vel_table.coords), dtype=float).reshape(-1, self.dim)
        free = self.vel_dofs[:, 0] >= 0
        out = np.zeros(self.n_vel)
        out[self.vel_dofs[free].reshape(-1)] = vals[free].reshape(-1)
        return out

    def require_velocity(self):
        if self.n_vel == 0:
            raise DegenerateSystemError("the mesh has no interior velocity nodes")


def assemble(mesh: Mesh, k: int, quadrature_mode=GAUSS_LOBATTO, **kwargs) -> FemSystem:
    return FemSystem(mesh, k, quadrature_mode, **kwargs)


def norm(sys: FemSystem, which: str, x) -> float:
    G = sys.gram(which)
    x = np.asarray(x, dtype=float)
    if x.shape != (G.shape[0],):
        raise ValueError(f"vector of shape {x.shape} does not match {which} space of size {G.shape[0]}")
    return float(np.sqrt(max(x @ G @ x, 0.0)))


def apply_b(sys: FemSystem, v, q) -> float:
    v = np.asarray(v, dtype=float)
    q = np.asarray(q, dtype=float)
    if v.shape != (sys.n_vel,) or q.shape != (sys.n_pr,):
        raise ValueError(f"expected vectors of sizes ({sys.n_vel},), ({sys.n_pr},); got {v.shape}, {q.shape}")
    return float(v @ sys.B @ q)
