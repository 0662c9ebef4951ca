"""Exception types raised by the toolkit.

Every error maps onto one CLI exit code (see ``taylorhood.cli``).
"""


class TaylorHoodError(Exception):
    """Base class for all toolkit errors."""


class InvalidOrderError(TaylorHoodError, ValueError):
    """A quadrature or polynomial order outside the supported range."""


class DimensionError(TaylorHoodError, ValueError):
    """An operation called with the wrong spatial dimension."""


class DegenerateElementError(TaylorHoodError):
    """Jacobian determinant is not positive somewhere on the element."""


class MeshError(TaylorHoodError):
    """Invalid mesh input or failed mesh generation."""


class TopologyError(MeshError):
    """The mesh is not conforming."""


class UnsupportedMeshError(MeshError):
    """The mesh violates an assumption the requested operation relies on."""


class ConditionViolationError(TaylorHoodError):
    """Gauss-Lobatto exactness was requested on elements where it does not hold."""


class MetricError(TaylorHoodError):
    """Metric matrix of a generalized eigenproblem is not positive definite."""


class DegenerateSystemError(TaylorHoodError):
    """The discrete system has no velocity unknowns."""


class ConsistencyError(TaylorHoodError):
    """Element-wise definitions disagree at a shared node."""
