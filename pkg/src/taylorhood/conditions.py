"""Numerical test of the integrand degree condition behind exact Gauss-Lobatto assembly.

For ``b_K`` to be integrated exactly by the (k+1)-point Gauss-Lobatto rule
the volume integrand ``v^ . cof(J) grad q^`` must lie in Q_{2k-1} of the
reference cube and each facet integrand ``v^ . cof(J) n^ q^`` in Q_{2k-1}
of the facet. Bilinear quadrilaterals and parallelepipeds satisfy this;
general trilinear hexahedra do not.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly import GAUSS_LOBATTO, HIGH_ORDER, element_b, facet_points
from .errors import DimensionError
from .gauss_lobatto import integrate_tensor, reference_rule, tensor_rule
from .geometry import REF_VERTICES, GeometryMap, cofactor
from .mesh import COUNTEREXAMPLE_VERTICES, local_facets
from .tensor_poly import MEMBERSHIP_SAMPLES, MEMBERSHIP_SEED, MEMBERSHIP_TOL, interpolate, membership_residual, q_basis

FULL_SWEEP_MAX_PAIRS = 6000
GAP_REL_TOL = 1e-11
FACE_TOL = 1e-12

# cyclic vertex lists of the six faces, in the element vertex ordering
CUBE_FACES = ((0, 1, 2, 3), (4, 5, 6, 7), (0, 1, 5, 4), (3, 2, 6, 7), (0, 3, 7, 4), (1, 2, 6, 5))


@dataclass
class ConditionReport:
    element: int
    k: int
    dim: int
    volume_member: bool
    facet_member: dict  # "axis,side" -> bool
    volume_residual: float
    facet_residual: float
    quadrature_gap: float  # max |I_high - I_GL| over all entries of b_K
    gap_scale: float  # max |I_high|
    n_pairs: int
    sampled: bool
    witness: dict | None = field(default=None)

    @property
    def holds(self) -> bool:
        return self.volume_member and all(self.facet_member.values())

    @property
    def relative_gap(self) -> float:
        return self.quadrature_gap / self.gap_scale if self.gap_scale > 0 else self.quadrature_gap

    def to_dict(self):
        out = asdict(self)
        out["holds"] = self.holds
        return out

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _pair_table(k, d, samples, seed):
    """Velocity (node, component) and pressure index arrays of the tested pairs."""
    nv, npr = (k + 1) ** d, k**d
    total = nv * d * npr
    if total <= FULL_SWEEP_MAX_PAIRS:
        flat = np.arange(total)
        sampled = False
    else:
        flat = np.sort(np.random.default_rng(seed).choice(total, size=min(samples, total), replace=False))
        sampled = True
    a, rest = np.divmod(flat, d * npr)
    c, j = np.divmod(rest, npr)
    return a, c, j, sampled


def volume_integrand(G: GeometryMap, k: int, a, c, j):
    """Callable returning ``phi_a (cof(J) grad psi_j)_c`` for every pair, shape ``(m, n_pairs)``."""
    vb, pb = q_basis(k, G.dim), q_basis(k - 1, G.dim)

    def f(x):
        C = cofactor(G.jacobians(x))
        cg = np.einsum("mcd,mjd->mcj", C, pb.grad(x))
        return vb.eval(x)[:, a] * cg[:, c, j]

    return f


def facet_integrand(G: GeometryMap, k: int, axis: int, side: int, a, c, j):
    """Callable on the (d-1)-cube: ``phi_a (cof(J) n)_c psi_j`` on facet {x_axis = side}."""
    vb, pb = q_basis(k, G.dim), q_basis(k - 1, G.dim)
    sign = 2.0 * side - 1.0

    def f(y):
        x = facet_points(y, axis, side)
        cn = sign * cofactor(G.jacobians(x))[:, :, axis]
        return vb.eval(x)[:, a] * cn[:, c] * pb.eval(x)[:, j]

    return f


def check_condition(G: GeometryMap, k: int, samples=2000, seed=MEMBERSHIP_SEED, tol=MEMBERSHIP_TOL, element=0) -> ConditionReport:
    """Test the integrand degree condition on one element for degree ``k``."""
    d = G.dim
    a, c, j, sampled = _pair_table(k, d, samples, seed)
    deg = (2 * k - 1,) * d
    vf = volume_integrand(G, k, a, c, j)
    vol_res_each = _per_pair_residual(vf, deg, seed)
    vol_res = float(vol_res_each.max())
    witness = None
    if vol_res > tol:
        i = int(np.argmax(vol_res_each))
        witness = {"term": "volume", "velocity_node": int(a[i]), "component": int(c[i]), "pressure_node": int(j[i]), "residual": float(vol_res_each[i])}

    facet_member, fac_res = {}, 0.0
    for axis, side in local_facets(d):
        ff = facet_integrand(G, k, axis, side, a, c, j)
        res_each = _per_pair_residual(ff, deg[:-1], seed)
        r = float(res_each.max())
        facet_member[f"{axis},{side}"] = r <= tol
        fac_res = max(fac_res, r)
        if r > tol and witness is None:
            i = int(np.argmax(res_each))
            witness = {
                "term": f"facet {axis},{side}",
                "velocity_node": int(a[i]),
                "component": int(c[i]),
                "pressure_node": int(j[i]),
                "residual": float(res_each[i]),
            }

    gl_vol, gl_fac, _ = element_b(G, k, GAUSS_LOBATTO)
    ho_vol, ho_fac, _ = element_b(G, k, HIGH_ORDER)
    gap = float(max(np.abs(gl_vol - ho_vol).max(), np.abs(gl_fac - ho_fac).max()))
    scale = float(max(np.abs(ho_vol).max(), np.abs(ho_fac).max()))
    return ConditionReport(element, k, d, vol_res <= tol, facet_member, vol_res, fac_res, gap, scale, len(a), sampled, witness)


def _per_pair_residual(f, degrees, seed):
    """Membership residual of every column of a vector-valued integrand."""
    p = interpolate(f, degrees)
    x = np.random.default_rng(seed).random((MEMBERSHIP_SAMPLES, len(degrees)))
    exact = np.asarray(f(x), dtype=float)
    err = np.abs(exact - p.eval(x)).max(axis=0)
    return err / (1.0 + np.abs(exact).max(axis=0))


def counterexample_map() -> GeometryMap:
    return GeometryMap(COUNTEREXAMPLE_VERTICES, "trilinear3d")


def counterexample_integrand(x):
    """Closed form of ``v^ . cof(J) grad q^`` for the bubble ``v^ = 64 prod x_i (1 - x_i) e_3`` and ``q^ = x_1``."""
    x = np.atleast_2d(x)
    x1, x2, x3 = x[:, 0], x[:, 1], x[:, 2]
    return 4 * x1**2 * (1 - x1) * (x1 - 4) * x2 * (1 - x2) * x3 * (1 - x3) * (x3 - 2)


def counterexample_integrand_from_map(x, G: GeometryMap | None = None):
    """The same integrand assembled from the map's cofactor matrix."""
    G = G or counterexample_map()
    x = np.atleast_2d(x)
    bubble = 64.0 * np.prod(x * (1.0 - x), axis=1)
    C = cofactor(G.jacobians(x))
    return bubble * C[:, 2, 0]  # e_3 . cof(J) e_1, since grad q^ = e_1


def counterexample_gap(route="map") -> float:
    """``|exact - Gauss-Lobatto|`` for the counterexample integrand with k = 2.

    ``route="closed_form"`` integrates the closed-form polynomial, ``"map"``
    builds the integrand from the element's cofactor matrix.
    """
    if route not in ("closed_form", "map"):
        raise ValueError(f"unknown route {route!r}")
    f = counterexample_integrand if route == "closed_form" else counterexample_integrand_from_map
    exact = integrate_tensor(f, reference_rule(5, 3))
    gl = integrate_tensor(f, tensor_rule(3, 3))
    return abs(exact - gl)


@dataclass
class Q3Result:
    q3_holds: bool
    all_faces_parallelograms: bool
    column_residuals: tuple
    face_defects: tuple

    @property
    def agree(self) -> bool:
        return self.q3_holds == self.all_faces_parallelograms


def face_defects(points) -> np.ndarray:
    """Largest cross product of opposite edges per face (zero for a parallelogram)."""
    p = np.asarray(points, dtype=float)
    out = []
    for b1, b2, b3, b4 in CUBE_FACES:
        x = np.cross(p[b2] - p[b1], p[b3] - p[b4])
        y = np.cross(p[b3] - p[b2], p[b4] - p[b1])
        out.append(max(np.abs(x).max(), np.abs(y).max()))
    return np.array(out)


def check_q3_equivalence(G: GeometryMap, tol=MEMBERSHIP_TOL, face_tol=FACE_TOL) -> Q3Result:
    """Compare the cofactor-degree test with the face-parallelogram test on a 3D map."""
    if G.dim != 3:
        raise DimensionError("the parallelepiped characterization is a 3D statement")
    res = []
    for col in range(3):
        deg = tuple(1 if i == col else 0 for i in range(3))
        res.append(membership_residual(lambda x, col=col: cofactor(G.jacobians(x))[:, :, col], deg))
    q3 = all(r <= tol for r in res)
    defects = face_defects(G.points)
    faces = bool(np.all(defects <= face_tol * G.diameter**2))
    return Q3Result(q3, faces, tuple(float(r) for r in res), tuple(float(x) for x in defects))


def random_trilinear(rng, amplitude=(0.05, 0.25)) -> GeometryMap:
    """Unit cube with every vertex moved by a random vector of length in ``amplitude``."""
    dirs = rng.standard_normal((8, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    r = rng.uniform(*amplitude, size=(8, 1))
    return GeometryMap(REF_VERTICES[3] + r * dirs, "trilinear3d")


def random_parallelepiped(rng) -> GeometryMap:
    """Image of the unit cube under a random affine map with positive determinant."""
    while True:
        A = np.eye(3) + 0.4 * rng.standard_normal((3, 3))
        if np.linalg.det(A) > 0.2:
            break
    b = rng.standard_normal(3)
    return GeometryMap(REF_VERTICES[3] @ A.T + b, "affine3d")


def random_bilinear(rng, theta=0.3) -> GeometryMap:
    """Unit square with vertices jittered by at most ``theta / 2`` per coordinate."""
    return GeometryMap(REF_VERTICES[2] + theta * rng.uniform(-0.5, 0.5, size=(4, 2)), "bilinear2d")


__all__ = [
    "ConditionReport",
    "Q3Result",
    "check_condition",
    "check_q3_equivalence",
    "counterexample_gap",
    "counterexample_integrand",
    "counterexample_integrand_from_map",
    "counterexample_map",
    "face_defects",
    "facet_integrand",
    "random_bilinear",
    "random_parallelepiped",
    "random_trilinear",
    "volume_integrand",
]
