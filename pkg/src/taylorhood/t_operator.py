"""Element-wise pressure-to-velocity map T and its coercivity measurements.

At a velocity node ``a`` of element K with reference point ``â`` the
local map assigns

    v(a) = sum over free axes i of a:  J_i(â) * d_i q^(â)

where the free axes are the reference directions along which ``â`` is not
at an extreme coordinate (all axes for an interior node, the two face
directions for a face-interior node, the edge direction for an
edge-interior node, none for a vertex). Nodes on the domain boundary get
zero. The global map is glued from the element maps; a shared node must
receive the same vector from every element that contains it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .assembly import FemSystem
from .errors import ConditionViolationError, ConsistencyError, UnsupportedMeshError
from .gauss_lobatto import tensor_rule
from .geometry import cofactor, determinant
from .linalg import sym_gen_eig
from .mesh import Mesh, NodeClass, local_facets, validate_t_assumption
from .tensor_poly import q_basis

CONSISTENCY_TOL = 1e-10


def free_axis_mask(sys: FemSystem) -> np.ndarray:
    """``(n_loc, d)`` indicator of the free axes of every local velocity node."""
    tab = sys.vel_table
    mask = np.zeros((len(tab.ref_free_axes), sys.dim))
    for a, axes in enumerate(tab.ref_free_axes):
        mask[a, list(axes)] = 1.0
    return mask


def local_map(sys: FemSystem, e: int) -> np.ndarray:
    """Matrix of T_K on element ``e``: local velocity dofs (node-major) x local pressure nodes.

    Rows of local nodes lying on the domain boundary are zero.
    """
    d, k = sys.dim, sys.k
    G = sys.mesh.maps[e]
    vb, pb = q_basis(k, d), q_basis(k - 1, d)
    J = G.jacobians(vb.nodes)  # (nv, d, d)
    dpsi = pb.grad(vb.nodes)  # (nv, npr, d)
    mask = free_axis_mask(sys)
    mask[sys.vel_table.local_on_boundary(e)] = 0.0
    TK = np.einsum("aci,ai,aji->acj", J, mask, dpsi)
    return TK.reshape(len(vb) * d, len(pb))


@dataclass
class TOperator:
    """Assembled T as a dense ``(n_vel, n_pr)`` matrix plus audit data."""

    sys: FemSystem
    T: np.ndarray
    local: list  # per-element T_K (boundary rows zeroed)
    owner: np.ndarray  # element that first wrote each velocity node (-1: none)
    consistency_gap: float
    node_gaps: dict = field(default_factory=dict)  # global node -> largest relative disagreement

    def apply(self, q) -> np.ndarray:
        return self.T @ np.asarray(q, dtype=float)

    def audit(self, q):
        """Per velocity node: class, coordinates and the assigned vector for pressure ``q``."""
        q = np.asarray(q, dtype=float)
        tab = self.sys.vel_table
        v = self.apply(q)
        rows = []
        for n in range(tab.n_nodes):
            dofs = self.sys.vel_dofs[n]
            vec = np.zeros(self.sys.dim) if dofs[0] < 0 else v[dofs]
            rows.append(
                {
                    "node": n,
                    "class": NodeClass(int(tab.node_class[n])).name,
                    "on_boundary": bool(tab.on_boundary[n]),
                    "owner_element": int(self.owner[n]),
                    "coords": tab.coords[n].tolist(),
                    "vector": vec.tolist(),
                }
            )
        return rows

    def dump_json(self, path, q):
        payload = {"k": self.sys.k, "dim": self.sys.dim, "consistency_gap": self.consistency_gap, "nodes": self.audit(q)}
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")


def check_t_preconditions(mesh: Mesh):
    if mesh.dim == 3 and not mesh.is_affine:
        raise ConditionViolationError("T requires parallelepiped elements in 3D")
    if not validate_t_assumption(mesh):
        raise UnsupportedMeshError("some element has no vertex whose incident facets are all interior")


def build_t(mesh: Mesh, sys: FemSystem, tol=CONSISTENCY_TOL) -> TOperator:
    """Assemble the global T from the element maps.

    The first element touching a node writes its rows; every later element
    is compared against them and a relative disagreement above ``tol``
    raises :class:`ConsistencyError`.
    """
    if sys.mesh is not mesh:
        raise ValueError("the system was assembled on a different mesh")
    check_t_preconditions(mesh)
    d = sys.dim
    tab = sys.vel_table
    T = np.zeros((sys.n_vel, sys.n_pr))
    owner = -np.ones(tab.n_nodes, dtype=int)
    gaps = {}
    locals_ = []
    worst = 0.0
    for e in range(mesh.n_elements):
        TK = local_map(sys, e)
        locals_.append(TK)
        pd = sys.elem_pr_dofs(e)
        for a, n in enumerate(tab.elem_nodes[e]):
            dofs = sys.vel_dofs[n]
            if dofs[0] < 0:
                continue
            block = np.zeros((d, sys.n_pr))
            block[:, pd] = TK[a * d : (a + 1) * d]
            if owner[n] < 0:
                T[dofs] = block
                owner[n] = e
                continue
            old = T[dofs]
            scale = max(np.abs(old).max(), np.abs(block).max())
            gap = float(np.abs(old - block).max() / scale) if scale > 0 else 0.0
            if gap > gaps.get(int(n), 0.0):
                gaps[int(n)] = gap
            worst = max(worst, gap)
            if gap > tol:
                raise ConsistencyError(
                    f"element {e} assigns a different vector at node {n} (relative gap {gap:.3e}) than element {owner[n]}"
                )
    return TOperator(sys, T, locals_, owner, worst, gaps)


@dataclass
class CoercivityResult:
    c_T: float
    C_T: float
    c_TK: np.ndarray
    C_TK: np.ndarray
    kernel_dim: int  # spurious kernel of b(Tq, q) beyond the constants


def _local_problem(sys: FemSystem, top: TOperator, e: int):
    em = sys.elements[e]
    keep = sys.local_velocity_mask(e)
    TK = top.local[e][keep]
    BK = em.B[keep]
    AK = sys.local_A_H1(e)[np.ix_(keep, keep)]
    return TK, BK, AK, em.h**2 * em.M_grad, em.M_L2


def coercivity_check(mesh: Mesh, sys: FemSystem, top: TOperator, method="jacobi") -> CoercivityResult:
    """Measure c_T, C_T globally and per element.

    ``c_T`` is the smallest positive eigenvalue of ``sym(T^T B)`` against
    ``M_h``; ``C_T`` is the square root of the largest eigenvalue of
    ``T^T A_H1 T`` against ``M_h``. Constant pressures are deflated.
    Element values use the element matrices with local constants deflated.
    """
    ones = sys.ones_p
    S = top.T.T @ sys.B
    lo = sym_gen_eig(0.5 * (S + S.T), sys.M_h, ones, inner=sys.M_L2, method=method)
    c_T, _, nker = lo.smallest_positive()
    hi = sym_gen_eig(top.T.T @ sys.A_H1 @ top.T, sys.M_h, ones, inner=sys.M_L2, method=method)
    C_T = float(np.sqrt(max(hi.values[-1], 0.0)))

    c_loc, C_loc = [], []
    for e in range(mesh.n_elements):
        TK, BK, AK, MK, ML2 = _local_problem(sys, top, e)
        ones_k = np.ones(MK.shape[0])
        SK = TK.T @ BK
        r = sym_gen_eig(0.5 * (SK + SK.T), MK, ones_k, inner=ML2, method=method)
        c_loc.append(r.smallest_positive()[0])
        R = sym_gen_eig(TK.T @ AK @ TK, MK, ones_k, inner=ML2, method=method)
        C_loc.append(float(np.sqrt(max(R.values[-1], 0.0))))
    return CoercivityResult(float(c_T), C_T, np.array(c_loc), np.array(C_loc), nker)


@dataclass
class NormalTraceResult:
    max_abs: float
    scale: float

    @property
    def relative(self) -> float:
        return self.max_abs / self.scale if self.scale > 0 else 0.0


def normal_trace_check(mesh: Mesh, sys: FemSystem, top: TOperator) -> NormalTraceResult:
    """Largest ``|v^ . cof(J) n^|`` at boundary Gauss-Lobatto nodes of every element.

    Taken over all pressure basis functions (the columns of T). ``scale``
    is the size of the two factors, ``max|v| * max|cof J|``.
    """
    d, k = sys.dim, sys.k
    vb = q_basis(k, d)
    idx = vb.indices
    worst, scale = 0.0, 0.0
    for e, G in enumerate(mesh.maps):
        vd = sys.elem_vel_dofs(e)
        V = np.zeros((len(vd), sys.n_pr))
        V[vd >= 0] = top.T[vd[vd >= 0]]
        V = V.reshape(len(vb), d, sys.n_pr)
        C = cofactor(G.jacobians(vb.nodes))
        scale = max(scale, np.abs(V).max() * np.abs(C).max())
        for axis, side in local_facets(d):
            on = idx[:, axis] == (k if side else 0)
            sign = 2.0 * side - 1.0
            flux = np.einsum("acj,ac->aj", V[on], sign * C[on][:, :, axis])
            worst = max(worst, float(np.abs(flux).max(initial=0.0)))
    return NormalTraceResult(worst, scale)


def sum_of_squares_rhs(sys: FemSystem, e: int, q_loc) -> float:
    """Gauss-Lobatto sum of ``w |J| sum_{free i} (d_i q^)^2`` over non-boundary nodes of element ``e``."""
    d, k = sys.dim, sys.k
    G = sys.mesh.maps[e]
    vb, pb = q_basis(k, d), q_basis(k - 1, d)
    w = tensor_rule(k + 1, d).weights
    det = determinant(G.jacobians(vb.nodes))
    grad = np.einsum("anj,n->aj", pb.grad(vb.nodes), np.asarray(q_loc, dtype=float))
    mask = free_axis_mask(sys)
    mask[sys.vel_table.local_on_boundary(e)] = 0.0
    return float(np.sum(w * det * np.sum(mask * grad**2, axis=1)))


def sum_of_squares_check(sys: FemSystem, top: TOperator, n_samples=20, seed=0) -> float:
    """Largest relative gap between ``b_K(T_K q, q)`` and its sum-of-squares form.

    ``n_samples`` random local pressures per element, seeded.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for e, em in enumerate(sys.elements):
        TK = top.local[e]
        for _ in range(n_samples):
            q = rng.standard_normal(TK.shape[1])
            lhs = float((TK @ q) @ em.B @ q)
            rhs = sum_of_squares_rhs(sys, e, q)
            worst = max(worst, abs(lhs - rhs) / max(abs(rhs), np.finfo(float).tiny))
    return worst


def nodal_bound_check(sys: FemSystem, top: TOperator, q) -> float:
    """Largest ``|v(a)| - sigma_max(J(â)) |grad q^(â)|`` over all element nodes.

    Non-positive up to roundoff when the bound holds; returned relative to
    the largest right-hand side.
    """
    d, k = sys.dim, sys.k
    vb, pb = q_basis(k, d), q_basis(k - 1, d)
    q = np.asarray(q, dtype=float)
    excess, scale = -np.inf, 0.0
    for e, G in enumerate(sys.mesh.maps):
        ql = q[sys.elem_pr_dofs(e)]
        v = (top.local[e] @ ql).reshape(len(vb), d)
        sig = np.linalg.svd(G.jacobians(vb.nodes), compute_uv=False)[:, 0]
        g = np.linalg.norm(np.einsum("anj,n->aj", pb.grad(vb.nodes), ql), axis=1)
        bound = sig * g
        scale = max(scale, bound.max())
        excess = max(excess, float((np.linalg.norm(v, axis=1) - bound).max()))
    return excess / scale if scale > 0 else excess


def rayleigh_ratio(sys: FemSystem, top: TOperator, q) -> float:
    """``b(Tq, q) / (|Tq|_{H1} |q|_h)`` for one pressure vector."""
    q = np.asarray(q, dtype=float)
    v = top.T @ q
    num = float(v @ sys.B @ q)
    den = np.sqrt(max(v @ sys.A_H1 @ v, 0.0) * max(q @ sys.M_h @ q, 0.0))
    return num / den if den > 0 else 0.0


__all__ = [
    "CONSISTENCY_TOL",
    "TOperator",
    "CoercivityResult",
    "NormalTraceResult",
    "build_t",
    "check_t_preconditions",
    "coercivity_check",
    "local_map",
    "normal_trace_check",
    "nodal_bound_check",
    "rayleigh_ratio",
    "sum_of_squares_check",
    "sum_of_squares_rhs",
]
