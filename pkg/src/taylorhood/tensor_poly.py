"""Nodal Lagrange bases on [0, 1]^d in barycentric form.

Velocity spaces use ``k + 1`` Gauss-Lobatto nodes per axis, pressure spaces
``k`` nodes per axis, so both include the element endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .gauss_lobatto import build_rule

MEMBERSHIP_SAMPLES = 200
MEMBERSHIP_SEED = 20240607
MEMBERSHIP_TOL = 1e-10


class LagrangeBasis1D:
    """Lagrange polynomials on a set of distinct nodes.

    Values use the second barycentric formula. Derivatives are obtained by
    evaluating the nodal differentiation matrix through the same formula,
    which is exact because the derivative has lower degree.
    """

    def __init__(self, nodes):
        nodes = np.array(nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 1:
            raise ValueError("nodes must be a non-empty 1D sequence")
        if len(np.unique(nodes)) != len(nodes):
            raise ValueError("nodes must be distinct")
        nodes.setflags(write=False)
        self.nodes = nodes
        diff = nodes[:, None] - nodes[None, :]
        np.fill_diagonal(diff, 1.0)
        self.weights = 1.0 / np.prod(diff, axis=1)

    def __len__(self):
        return len(self.nodes)

    @property
    def degree(self) -> int:
        return len(self.nodes) - 1

    @cached_property
    def diff_matrix(self) -> np.ndarray:
        """``D[i, j] = phi_j'(x_i)``."""
        x, w = self.nodes, self.weights
        n = len(x)
        D = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                if i != j:
                    D[i, j] = (w[j] / w[i]) / (x[i] - x[j])
            D[i, i] = -D[i].sum()
        return D

    def eval(self, t) -> np.ndarray:
        """Matrix ``(len(t), n)`` of basis values."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        n = len(self.nodes)
        if n == 1:
            return np.ones((len(t), 1))
        d = t[:, None] - self.nodes[None, :]
        hit = d == 0.0
        d[hit] = 1.0
        c = self.weights[None, :] / d
        with np.errstate(divide="ignore", invalid="ignore"):
            # rows hitting a node exactly are overwritten below
            out = c / c.sum(axis=1, keepdims=True)
        rows = hit.any(axis=1)
        out[rows] = hit[rows].astype(float)
        return out

    def deriv(self, t) -> np.ndarray:
        """Matrix ``(len(t), n)`` of basis derivatives."""
        return self.eval(t) @ self.diff_matrix

    def tabulate(self, t, order=0):
        return self.deriv(t) if order else self.eval(t)


@lru_cache(maxsize=None)
def gl_basis(n_nodes: int) -> LagrangeBasis1D:
    """Lagrange basis on the ``n_nodes``-point Gauss-Lobatto grid.

    A single node means degree zero; the node is placed at 1/2.
    """
    if n_nodes == 1:
        return LagrangeBasis1D([0.5])
    return LagrangeBasis1D(build_rule(n_nodes).points)


def tensor_indices(shape) -> np.ndarray:
    return np.array(list(np.ndindex(*shape)), dtype=int).reshape(-1, len(shape))


class TensorBasis:
    """Tensor product of 1D Lagrange bases, one per axis.

    Basis functions are ordered like ``np.ndindex(*shape)``, matching
    ``TensorQuadrature`` node order when the 1D nodes coincide.
    """

    def __init__(self, bases):
        self.bases = tuple(bases)
        self.dim = len(self.bases)
        self.shape = tuple(len(b) for b in self.bases)
        self.indices = tensor_indices(self.shape)

    def __len__(self):
        return int(np.prod(self.shape))

    @property
    def degrees(self):
        return tuple(b.degree for b in self.bases)

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.stack([b.nodes[self.indices[:, i]] for i, b in enumerate(self.bases)], axis=1)

    def _tables(self, x, orders):
        return [b.tabulate(x[:, i], o)[:, self.indices[:, i]] for i, (b, o) in enumerate(zip(self.bases, orders))]

    def eval(self, x) -> np.ndarray:
        """Basis values at points ``x`` of shape ``(m, d)``; returns ``(m, n)``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.prod(self._tables(x, [0] * self.dim), axis=0)

    def grad(self, x) -> np.ndarray:
        """Basis gradients, shape ``(m, n, d)``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        vals = [b.eval(x[:, i])[:, self.indices[:, i]] for i, b in enumerate(self.bases)]
        ders = [b.deriv(x[:, i])[:, self.indices[:, i]] for i, b in enumerate(self.bases)]
        out = np.empty((x.shape[0], len(self), self.dim))
        for a in range(self.dim):
            prod = ders[a].copy()
            for i in range(self.dim):
                if i != a:
                    prod *= vals[i]
            out[:, :, a] = prod
        return out


def q_basis(k: int, dim: int) -> TensorBasis:
    """Nodal basis of Q_k on the (k+1)-point Gauss-Lobatto grid."""
    return TensorBasis([gl_basis(k + 1)] * dim)


def p_basis(degrees) -> TensorBasis:
    """Nodal basis of P_{m_1,...,m_d}."""
    return TensorBasis([gl_basis(m + 1) for m in degrees])


@dataclass(frozen=True)
class TensorPolynomial:
    """A polynomial stored by its values at the tensor nodes of ``basis``."""

    basis: TensorBasis
    coeffs: np.ndarray

    @property
    def dim(self):
        return self.basis.dim

    @property
    def degrees(self):
        return self.basis.degrees

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        out = self.basis.eval(np.atleast_2d(x)) @ self.coeffs
        return out[0] if x.ndim == 1 else out

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        out = np.einsum("mnd,n...->m...d", self.basis.grad(np.atleast_2d(x)), self.coeffs)
        return out[0] if x.ndim == 1 else out


def interpolate(f, degrees) -> TensorPolynomial:
    """Interpolate ``f`` (vectorized over ``(m, d)`` points) in P_{degrees}."""
    basis = p_basis(degrees)
    return TensorPolynomial(basis, np.asarray(f(basis.nodes), dtype=float))


def degree_membership(f, degrees, tol=MEMBERSHIP_TOL, samples=MEMBERSHIP_SAMPLES, seed=MEMBERSHIP_SEED) -> bool:
    """Decide numerically whether ``f`` lies in P_{m_1,...,m_d}.

    ``f`` is interpolated on the tensor grid with ``m_i + 1`` nodes per axis
    and compared with the interpolant at seeded random points. Vector-valued
    ``f`` (returning ``(m, c)``) is a member iff every component is.
    """
    return membership_residual(f, degrees, samples=samples, seed=seed) <= tol


def membership_residual(f, degrees, samples=MEMBERSHIP_SAMPLES, seed=MEMBERSHIP_SEED) -> float:
    """Relative interpolation defect behind :func:`degree_membership`.

    Returns ``max|f - I f| / (1 + max|f|)`` over the sample points, taken
    per component and maximized.
    """
    p = interpolate(f, degrees)
    x = np.random.default_rng(seed).random((samples, len(degrees)))
    exact = np.asarray(f(x), dtype=float)
    approx = p.eval(x)
    exact = exact.reshape(samples, -1)
    approx = approx.reshape(samples, -1)
    scale = 1.0 + np.abs(exact).max(axis=0)
    return float(np.max(np.abs(exact - approx).max(axis=0) / scale))
