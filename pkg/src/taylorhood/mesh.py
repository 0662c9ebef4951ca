"""Conforming quadrilateral / hexahedral meshes and global nodal numbering.

Global nodes are identified topologically: a node belongs to exactly one
mesh entity (vertex, edge, face or cell) and is keyed by that entity's
sorted vertex ids plus its position measured from the entity's
lowest-numbered corner. No coordinate hashing is involved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from itertools import product

import numpy as np

from .errors import DegenerateElementError, MeshError, TopologyError
from .gauss_lobatto import build_rule, reference_rule
from .geometry import REF_VERTICES, GeometryMap, determinant, kind_dim, min_det
from .tensor_poly import tensor_indices

COORD_TOL = 1e-10


class NodeClass(IntEnum):
    VERTEX = 0
    EDGE_INTERIOR = 1
    FACE_INTERIOR = 2
    ELEMENT_INTERIOR = 3


def local_facets(dim):
    """Local facets as ``(axis, side)`` pairs, in a fixed order."""
    return [(axis, side) for axis in range(dim) for side in (0, 1)]


def _entity_vertices(pattern):
    """Local vertex indices of the entity given by a pattern (0, 1 or None per axis)."""
    ref = REF_VERTICES[len(pattern)]
    mask = np.ones(len(ref), dtype=bool)
    for axis, val in enumerate(pattern):
        if val is not None:
            mask &= ref[:, axis] == val
    return np.flatnonzero(mask)


class Mesh:
    """A conforming mesh of multilinear elements.

    Parameters
    ----------
    vertices : (nv, d) array
    elements : (ne, 2^d) int array, vertex order as in ``geometry.REF_VERTICES``
    kind : "bilinear2d", "affine3d" or "trilinear3d"
    allow_nonaffine : trilinear 3D elements are rejected unless this is set
    """

    def __init__(self, vertices, elements, kind=None, allow_nonaffine=False):
        vertices = np.array(vertices, dtype=float)
        elements = np.array(elements, dtype=int)
        if vertices.ndim != 2 or vertices.shape[1] not in (2, 3):
            raise MeshError(f"vertices must have shape (nv, 2|3), got {vertices.shape}")
        dim = vertices.shape[1]
        if kind is None:
            kind = "bilinear2d" if dim == 2 else "affine3d"
        if kind_dim(kind) != dim:
            raise MeshError(f"kind {kind!r} does not match vertex dimension {dim}")
        if elements.ndim != 2 or elements.shape[1] != 2**dim:
            raise MeshError(f"elements must have shape (ne, {2**dim}), got {elements.shape}")
        if elements.size and (elements.min() < 0 or elements.max() >= len(vertices)):
            raise MeshError("element connectivity refers to missing vertices")
        if kind == "trilinear3d" and not allow_nonaffine:
            raise MeshError("trilinear 3D elements require allow_nonaffine=True")
        self.dim = dim
        self.kind = kind
        self.allow_nonaffine = bool(allow_nonaffine)
        self.vertices = vertices
        self.elements = elements
        self.maps = []
        for e, conn in enumerate(elements):
            try:
                G = GeometryMap(vertices[conn], kind)
            except MeshError as exc:
                raise MeshError(f"element {e}: {exc}") from exc
            det = min_det(G)
            if det <= 0.0:
                raise DegenerateElementError(f"element {e} has det J = {det:.3e} <= 0")
            self.maps.append(G)
        self._build_facets()

    def __repr__(self):
        return f"Mesh(kind={self.kind!r}, n_vertices={len(self.vertices)}, n_elements={len(self.elements)})"

    @property
    def n_elements(self):
        return len(self.elements)

    @cached_property
    def h_elements(self) -> np.ndarray:
        return np.array([G.diameter for G in self.maps])

    @property
    def h(self) -> float:
        return float(self.h_elements.max())

    @property
    def is_affine(self) -> bool:
        return all(G.is_affine for G in self.maps)

    @property
    def gauss_lobatto_exact(self) -> bool:
        """True when every element admits exact Gauss-Lobatto integration of b."""
        return self.dim == 2 or all(G.is_affine for G in self.maps)

    def _build_facets(self):
        owners = {}
        for e, conn in enumerate(self.elements):
            for lf, (axis, side) in enumerate(local_facets(self.dim)):
                pattern = [None] * self.dim
                pattern[axis] = side
                key = tuple(sorted(conn[_entity_vertices(pattern)]))
                owners.setdefault(key, []).append((e, lf))
        bad = [k for k, v in owners.items() if len(v) > 2]
        if bad:
            raise TopologyError(f"facet {bad[0]} is shared by more than two elements")
        self.facet_owners = owners
        self.boundary_facets = frozenset(v[0] for v in owners.values() if len(v) == 1)
        # the boundary of a conforming mesh is closed: every ridge of a boundary
        # facet (vertex in 2D, edge in 3D) bounds exactly two boundary facets
        ridges = {}
        for e, lf in self.boundary_facets:
            axis, side = local_facets(self.dim)[lf]
            for other in range(self.dim):
                if other == axis:
                    continue
                for s in (0, 1):
                    pattern = [None] * self.dim
                    pattern[axis], pattern[other] = side, s
                    key = tuple(sorted(int(v) for v in self.elements[e][_entity_vertices(pattern)]))
                    ridges[key] = ridges.get(key, 0) + 1
        open_ridges = [r for r, c in ridges.items() if c != 2]
        if open_ridges:
            raise TopologyError(f"mesh is not conforming near vertices {open_ridges[0]}")
        flags = np.zeros((self.n_elements, 2 * self.dim), dtype=bool)
        for e, lf in self.boundary_facets:
            flags[e, lf] = True
        self.facet_on_boundary = flags

    @cached_property
    def boundary_entities(self) -> frozenset:
        """Sorted vertex-id tuples of every entity lying on a boundary facet."""
        out = set()
        for e, lf in self.boundary_facets:
            axis, side = local_facets(self.dim)[lf]
            others = [a for a in range(self.dim) if a != axis]
            for choice in product((0, 1, None), repeat=self.dim - 1):
                pattern = [None] * self.dim
                pattern[axis] = side
                for a, c in zip(others, choice):
                    pattern[a] = c
                out.add(tuple(sorted(self.elements[e][_entity_vertices(pattern)])))
        return frozenset(out)

    def relabeled(self, perm):
        """Same mesh with elements reordered by ``perm``."""
        return Mesh(self.vertices, self.elements[np.asarray(perm)], self.kind, self.allow_nonaffine)

    def transformed(self, A, b=None):
        """Image of the mesh under x -> A x + b (A must preserve orientation)."""
        A = np.asarray(A, dtype=float)
        b = np.zeros(self.dim) if b is None else np.asarray(b, dtype=float)
        return Mesh(self.vertices @ A.T + b, self.elements, self.kind, self.allow_nonaffine)

    def volume(self) -> float:
        rule = reference_rule(4, self.dim)
        return float(sum(rule.weights @ determinant(G.jacobians(rule.points)) for G in self.maps))

    def to_dict(self):
        return {
            "dim": self.dim,
            "vertices": self.vertices.tolist(),
            "elements": self.elements.tolist(),
            "kind": self.kind,
            "allow_nonaffine": self.allow_nonaffine,
        }

    @classmethod
    def from_dict(cls, data):
        vertices = np.asarray(data["vertices"], dtype=float)
        if "dim" in data and vertices.shape[1] != data["dim"]:
            raise MeshError(f"declared dim {data['dim']} does not match vertices")
        return cls(vertices, data["elements"], data.get("kind"), data.get("allow_nonaffine", False))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def validate_t_assumption(mesh: Mesh) -> bool:
    """True iff every element has a vertex whose d incident facets are all interior."""
    d = mesh.dim
    for e in range(mesh.n_elements):
        flags = mesh.facet_on_boundary[e].reshape(d, 2)
        if not any(not any(flags[i, bits[i]] for i in range(d)) for bits in product((0, 1), repeat=d)):
            return False
    return True


@dataclass
class GlobalNodeTable:
    """Global Gauss-Lobatto nodes of a given order on a mesh.

    ``elem_nodes[e, a]`` is the global index of local node ``a`` of element
    ``e``; local nodes follow ``tensor_indices((order + 1,) * d)``.
    """

    order: int
    dim: int
    coords: np.ndarray
    elem_nodes: np.ndarray
    ref_index: np.ndarray  # (n_loc, d) local index tuples
    ref_free_axes: list  # per local node: tuple of non-extreme axes
    ref_class: np.ndarray  # per local node: NodeClass
    node_class: np.ndarray  # per global node
    node_entity: list  # per global node: sorted vertex ids of its entity
    on_boundary: np.ndarray
    coord_mismatch: float

    @property
    def n_nodes(self):
        return len(self.coords)

    def class_counts(self):
        return {c.name: int(np.sum(self.node_class == c)) for c in NodeClass}

    def local_on_boundary(self, e):
        return self.on_boundary[self.elem_nodes[e]]


def _reference_node_info(order, dim):
    idx = tensor_indices((order + 1,) * dim)
    free = []
    patterns = []
    for j in idx:
        pat = tuple(0 if ji == 0 else 1 if ji == order else None for ji in j)
        patterns.append(pat)
        free.append(tuple(a for a, p in enumerate(pat) if p is None))
    r = np.array([len(f) for f in free])
    cls = np.empty(len(idx), dtype=int)
    cls[r == 0] = NodeClass.VERTEX
    cls[r == dim] = NodeClass.ELEMENT_INTERIOR
    cls[(r == 1) & (dim > 1)] = NodeClass.EDGE_INTERIOR
    if dim == 3:
        cls[r == 2] = NodeClass.FACE_INTERIOR
    return idx, patterns, free, cls


def build_node_table(mesh: Mesh, order: int) -> GlobalNodeTable:
    """Enumerate the global (order+1)-point Gauss-Lobatto nodes of ``mesh``."""
    if order < 1:
        raise ValueError(f"node order must be >= 1, got {order}")
    d = mesh.dim
    idx, patterns, free, cls = _reference_node_info(order, d)
    ref_pts = build_rule(order + 1).points[idx]
    ref = REF_VERTICES[d]

    keys = {}
    coords, classes, entities = [], [], []
    elem_nodes = np.empty((mesh.n_elements, len(idx)), dtype=int)
    mismatch = 0.0
    corner_cache = {}
    for e, conn in enumerate(mesh.elements):
        phys = mesh.maps[e](ref_pts)
        h = mesh.maps[e].diameter
        for a, (j, pat, fr) in enumerate(zip(idx, patterns, free)):
            if len(fr) == d:
                key = ("cell", e, tuple(j))
                ent = tuple(sorted(conn))
            else:
                if pat not in corner_cache:
                    corner_cache[pat] = _entity_vertices(pat)
                loc = corner_cache[pat]
                gids = conn[loc]
                ent = tuple(sorted(gids))
                anchor = loc[int(np.argmin(gids))]
                bits = ref[anchor]
                canon = {}
                nbr = {}
                for f in fr:
                    canon[f] = j[f] if bits[f] == 0 else order - j[f]
                    flipped = bits.copy()
                    flipped[f] = 1 - flipped[f]
                    nbr[f] = conn[int(np.flatnonzero((ref == flipped).all(axis=1))[0])]
                ordered = sorted(fr, key=lambda f: nbr[f])
                key = (ent, tuple(canon[f] for f in ordered))
            g = keys.get(key)
            if g is None:
                g = len(coords)
                keys[key] = g
                coords.append(phys[a])
                classes.append(cls[a])
                entities.append(ent)
            else:
                if classes[g] != cls[a]:
                    raise TopologyError(f"node {g} classified inconsistently across elements")
                dev = float(np.abs(coords[g] - phys[a]).max())
                mismatch = max(mismatch, dev / h)
            elem_nodes[e, a] = g
    if mismatch > COORD_TOL:
        raise TopologyError(f"shared nodes disagree in position (relative deviation {mismatch:.2e})")
    bnd = mesh.boundary_entities
    # a cell's full vertex tuple is never a sub-entity of a facet
    on_boundary = np.array([ent in bnd for ent in entities], dtype=bool)
    return GlobalNodeTable(
        order=order,
        dim=d,
        coords=np.array(coords).reshape(-1, d),
        elem_nodes=elem_nodes,
        ref_index=idx,
        ref_free_axes=free,
        ref_class=cls,
        node_class=np.array(classes, dtype=int),
        node_entity=entities,
        on_boundary=on_boundary,
        coord_mismatch=mismatch,
    )


def gen_structured(N, kind="quad2d", domain=None, theta=0.0, shear=None, seed=0) -> Mesh:
    """Structured N^d mesh of a box.

    kind
        ``"quad2d"``: bilinear quadrilaterals; interior vertices are moved by
        uniform jitter of at most ``theta * h / 2`` per coordinate.
        ``"parallelepiped3d"``: cube mesh mapped by the global linear map
        ``shear`` (3x3), so every element is a parallelepiped.
        ``"hex3d"``: jittered trilinear hexahedra (flagged non-affine).
    """
    if N < 1:
        raise MeshError(f"N must be >= 1, got {N}")
    if not 0.0 <= theta < 0.5:
        raise MeshError(f"theta must lie in [0, 0.5), got {theta}")
    dim = 2 if kind == "quad2d" else 3
    if kind not in ("quad2d", "parallelepiped3d", "hex3d"):
        raise MeshError(f"unknown structured mesh kind {kind!r}")
    if kind == "parallelepiped3d" and theta:
        raise MeshError("parallelepiped3d meshes cannot be jittered")
    if domain is None:
        domain = (np.zeros(dim), np.ones(dim))
    lo, hi = (np.asarray(b, dtype=float) for b in domain)
    hstep = (hi - lo) / N

    grid = np.array(list(np.ndindex(*(N + 1,) * dim)))[:, ::-1]  # x runs fastest
    vid = {tuple(g): i for i, g in enumerate(grid)}
    vertices = lo + grid * hstep
    if theta:
        rng = np.random.default_rng(seed)
        jitter = rng.uniform(-0.5, 0.5, size=vertices.shape) * theta * hstep
        interior = np.all((grid > 0) & (grid < N), axis=1)
        vertices[interior] += jitter[interior]
    if shear is not None:
        vertices = vertices @ np.asarray(shear, dtype=float).T

    corners = REF_VERTICES[dim].astype(int)
    elements = []
    for cell in np.array(list(np.ndindex(*(N,) * dim)))[:, ::-1]:
        elements.append([vid[tuple(cell + c)] for c in corners])
    mesh_kind = {"quad2d": "bilinear2d", "parallelepiped3d": "affine3d", "hex3d": "trilinear3d"}[kind]
    try:
        return Mesh(vertices, elements, mesh_kind, allow_nonaffine=(kind == "hex3d"))
    except DegenerateElementError as exc:
        raise MeshError(f"mesh generation produced a degenerate element: {exc}") from exc


COUNTEREXAMPLE_VERTICES = np.array(
    [
        [0, 0, 0],
        [1, 0, 0],
        [3 / 4, 3 / 4, 0],
        [0, 1, 0],
        [0, 0, 1],
        [1 / 2, 0, 1],
        [3 / 8, 3 / 8, 1],
        [0, 1 / 2, 1],
    ]
)


def counterexample_mesh() -> Mesh:
    """Single trilinear hexahedron for which Gauss-Lobatto exactness fails at k = 2."""
    return Mesh(COUNTEREXAMPLE_VERTICES, [list(range(8))], "trilinear3d", allow_nonaffine=True)


def single_element_mesh(points, kind=None) -> Mesh:
    points = np.asarray(points, dtype=float)
    return Mesh(points, [list(range(len(points)))], kind, allow_nonaffine=(kind == "trilinear3d"))


SHEAR_XY = np.array([[1.0, 0.3, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
