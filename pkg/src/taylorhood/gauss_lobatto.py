"""Gauss-Lobatto and Gauss-Legendre rules on [0, 1] and their tensor products.

All rules live on the unit interval (and the unit cube), never on [-1, 1].
An ``n``-point Gauss-Lobatto rule contains both endpoints and integrates
polynomials of degree ``2n - 3`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import InvalidOrderError

MAX_POINTS = 16
NEWTON_TOL = 1e-14


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class QuadratureRule1D:
    """Points and weights of a 1D rule on [0, 1]."""

    points: np.ndarray
    weights: np.ndarray
    kind: str = "gauss-lobatto"

    @property
    def order(self) -> int:
        return len(self.points)

    @property
    def exactness(self) -> int:
        """Highest polynomial degree integrated exactly."""
        n = self.order
        return 2 * n - 3 if self.kind == "gauss-lobatto" else 2 * n - 1

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.points)))


def _legendre(N, x):
    """Return (P_N(x), P_{N-1}(x)) by the three-term recurrence."""
    p_prev = np.ones_like(x)
    p = x.copy()
    for m in range(2, N + 1):
        p_prev, p = p, ((2 * m - 1) * x * p - (m - 1) * p_prev) / m
    return p, p_prev


@lru_cache(maxsize=None)
def build_rule(n: int) -> QuadratureRule1D:
    """Return the ``n``-point Gauss-Lobatto rule on [0, 1].

    The interior points are the roots of ``P'_{n-1}``, found by Newton's
    method started from the Chebyshev-Gauss-Lobatto points; mirrored pairs
    are then averaged so the rule is symmetric to the last bit.

    >>> build_rule(3).weights
    array([0.16666667, 0.66666667, 0.16666667])
    """
    if not isinstance(n, (int, np.integer)) or n < 2 or n > MAX_POINTS:
        raise InvalidOrderError(f"Gauss-Lobatto order must be in [2, {MAX_POINTS}], got {n!r}")
    N = n - 1
    x = -np.cos(np.pi * np.arange(n) / N)
    for _ in range(100):
        p, p_prev = _legendre(N, x)
        # Newton on (1 - x^2) P'_N(x), written through P_N and P_{N-1}
        dx = (x * p - p_prev) / (n * p)
        x = x - dx
        if np.max(np.abs(dx)) < NEWTON_TOL:
            break
    p, _ = _legendre(N, x)
    w = 2.0 / (N * n * p**2)

    t = 0.5 * (1.0 + x)
    w = 0.5 * w
    t = 0.5 * (t + 1.0 - t[::-1])
    w = 0.5 * (w + w[::-1])
    t[0], t[-1] = 0.0, 1.0
    if n % 2:
        t[n // 2] = 0.5
    return QuadratureRule1D(_frozen(t), _frozen(w), "gauss-lobatto")


@lru_cache(maxsize=None)
def gauss_legendre_rule(n: int) -> QuadratureRule1D:
    """``n``-point Gauss-Legendre rule on [0, 1] (exact to degree ``2n - 1``)."""
    if n < 1:
        raise InvalidOrderError(f"Gauss-Legendre order must be >= 1, got {n!r}")
    x, w = np.polynomial.legendre.leggauss(n)
    return QuadratureRule1D(_frozen(0.5 * (1.0 + x)), _frozen(0.5 * w), "gauss-legendre")


@dataclass(frozen=True)
class TensorQuadrature:
    """d-fold tensor product of a 1D rule.

    Nodes are ordered lexicographically in the index tuple ``(j_1, ..., j_d)``
    with the last index running fastest (``np.ndindex`` order).
    """

    dim: int
    rule1d: QuadratureRule1D

    @cached_property
    def indices(self) -> np.ndarray:
        n = self.rule1d.order
        idx = np.array(list(np.ndindex(*(n,) * self.dim)), dtype=int).reshape(-1, self.dim)
        idx.setflags(write=False)
        return idx

    @cached_property
    def points(self) -> np.ndarray:
        return _frozen(self.rule1d.points[self.indices])

    @cached_property
    def weights(self) -> np.ndarray:
        return _frozen(np.prod(self.rule1d.weights[self.indices], axis=1))

    def __len__(self):
        return self.rule1d.order**self.dim


def tensor_rule(n: int, dim: int) -> TensorQuadrature:
    """Tensor Gauss-Lobatto rule with ``n`` points per axis."""
    return TensorQuadrature(dim, build_rule(n))


def reference_rule(n: int, dim: int = 1) -> TensorQuadrature:
    """Tensor Gauss-Legendre rule used as the high-order "exact" oracle."""
    return TensorQuadrature(dim, gauss_legendre_rule(n))


def integrate_tensor(f, rule: TensorQuadrature) -> float:
    """Apply a tensor rule to ``f``.

    ``f`` takes an ``(m, d)`` array of points and returns ``m`` values
    (or ``(m, c)`` for vector-valued integrands).
    """
    vals = np.asarray(f(rule.points), dtype=float)
    out = np.tensordot(rule.weights, vals, axes=(0, 0))
    return float(out) if out.ndim == 0 else out


def monomial_errors(n: int, max_degree: int) -> np.ndarray:
    """Relative errors ``|sum w x^m - 1/(m+1)| * (m+1)`` of the n-point rule, m = 0..max_degree."""
    rule = build_rule(n)
    m = np.arange(max_degree + 1)
    approx = (rule.weights[None, :] * rule.points[None, :] ** m[:, None]).sum(axis=1)
    return np.abs(approx * (m + 1) - 1.0)


def centred_gap(n: int) -> float:
    """Relative error of the n-point rule on ``(2t - 1)^(2n - 2)``, the lowest degree it misses.

    Centring keeps the gap far above roundoff for every supported ``n``,
    unlike the raw monomial ``t^(2n - 2)``.
    """
    rule = build_rule(n)
    m = 2 * n - 2
    approx = float(rule.weights @ (2.0 * rule.points - 1.0) ** m)
    exact = 1.0 / (m + 1)
    return abs(approx - exact) / exact
