"""Stability verification for Taylor-Hood Q_k - Q_{k-1} elements on quadrilaterals and parallelepipeds."""

__version__ = "0.1.0"

from .assembly import FemSystem, apply_b, assemble, norm  # noqa: E402
from .conditions import check_condition, check_q3_equivalence, counterexample_gap  # noqa: E402
from .errors import (  # noqa: E402
    ConditionViolationError,
    ConsistencyError,
    DegenerateElementError,
    DegenerateSystemError,
    DimensionError,
    InvalidOrderError,
    MeshError,
    MetricError,
    TaylorHoodError,
    TopologyError,
    UnsupportedMeshError,
)
from .gauss_lobatto import build_rule, integrate_tensor, reference_rule, tensor_rule  # noqa: E402
from .geometry import GeometryMap, jacobian, map_eval  # noqa: E402
from .infsup import infsup_bp, infsup_classical, infsup_local, infsup_meshdep, seminorm_equivalence  # noqa: E402
from .linalg import sym_gen_eig  # noqa: E402
from .mesh import Mesh, build_node_table, counterexample_mesh, gen_structured, validate_t_assumption  # noqa: E402
from .t_operator import build_t, coercivity_check, normal_trace_check  # noqa: E402

__all__ = [
    "__version__",
    "FemSystem",
    "GeometryMap",
    "Mesh",
    "apply_b",
    "assemble",
    "build_node_table",
    "build_rule",
    "build_t",
    "check_condition",
    "check_q3_equivalence",
    "coercivity_check",
    "counterexample_gap",
    "counterexample_mesh",
    "gen_structured",
    "infsup_bp",
    "infsup_classical",
    "infsup_local",
    "infsup_meshdep",
    "integrate_tensor",
    "jacobian",
    "map_eval",
    "norm",
    "normal_trace_check",
    "reference_rule",
    "seminorm_equivalence",
    "sym_gen_eig",
    "tensor_rule",
    "validate_t_assumption",
    "ConditionViolationError",
    "ConsistencyError",
    "DegenerateElementError",
    "DegenerateSystemError",
    "DimensionError",
    "InvalidOrderError",
    "MeshError",
    "MetricError",
    "TaylorHoodError",
    "TopologyError",
    "UnsupportedMeshError",
]
