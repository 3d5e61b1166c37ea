"""Derivative jets on a uniform grid and the W^n_inf norms built from them.

A jet stores ``y^(k)(t_i)`` for ``k = 0..n`` at every node, so Sobolev norms
are node maxima of exact derivative values rather than numerical derivatives.
The norm convention is the sum of sups::

    ||y||_{n,inf} = sum_{k=0}^{n} max_i max_j |y_j^(k)(t_i)|

Matrix jets use the entrywise maximum modulus per derivative order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import comb
from typing import Sequence

import numpy as np

from .expr import ComplexExpr


@dataclass(frozen=True)
class Grid:
    a: float
    b: float
    N: int

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"grid needs a < b, got [{self.a}, {self.b}]")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"grid needs N >= 2 subintervals, got {self.N}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.N

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.a + np.arange(self.N + 1) * self.h

    @property
    def midpoints(self) -> np.ndarray:
        return self.nodes[:-1] + 0.5 * self.h

    def refine(self, factor: int = 2) -> "Grid":
        return Grid(self.a, self.b, self.N * factor)

    def node_index(self, t: float, tol: float | None = None) -> int:
        """Index of the node at ``t``; raises ``ValueError`` if ``t`` is off-grid."""
        if tol is None:
            tol = 1e-12 * (self.b - self.a)
        i = int(round((t - self.a) / self.h))
        if i < 0 or i > self.N or abs(self.nodes[i] - t) > tol:
            raise ValueError(f"t = {t!r} is not a grid node")
        return i


def _check_finite(data: np.ndarray):
    if not np.all(np.isfinite(data)):
        raise ValueError("jet data contains NaN or Inf")


class JetFunction:
    """Vector function in (W^n_inf)^m sampled as a jet; ``data[j, k, i] = y_j^(k)(t_i)``."""

    def __init__(self, grid: Grid, data: np.ndarray):
        data = np.asarray(data, dtype=complex)
        if data.ndim != 3 or data.shape[0] < 1 or data.shape[2] != grid.N + 1:
            raise ValueError(f"jet data shape {data.shape} does not fit m x (n+1) x {grid.N + 1}")
        _check_finite(data)
        data.setflags(write=False)
        self.grid = grid
        self.data = data

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1] - 1

    def layer(self, k: int) -> np.ndarray:
        return self.data[:, k, :]

    def truncate(self, order: int) -> "JetFunction":
        _check_order(order, self.n)
        return JetFunction(self.grid, self.data[:, : order + 1, :])

    def derivative(self) -> "JetFunction":
        """Jet of y' (one order less)."""
        if self.n < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        return JetFunction(self.grid, self.data[:, 1:, :])

    def __add__(self, other: "JetFunction") -> "JetFunction":
        return jet_axpy(1.0, other, self)

    def __sub__(self, other: "JetFunction") -> "JetFunction":
        return jet_axpy(-1.0, other, self)

    def __neg__(self) -> "JetFunction":
        return JetFunction(self.grid, -self.data)

    def __mul__(self, alpha: complex) -> "JetFunction":
        return JetFunction(self.grid, alpha * self.data)

    __rmul__ = __mul__

    def __repr__(self):
        return f"JetFunction(m={self.m}, n={self.n}, N={self.grid.N})"

    @classmethod
    def zeros(cls, grid: Grid, m: int, n: int) -> "JetFunction":
        return cls(grid, np.zeros((m, n + 1, grid.N + 1), dtype=complex))

    @classmethod
    def from_exprs(cls, grid: Grid, entries: Sequence[ComplexExpr], n: int, eps: float = 0.0) -> "JetFunction":
        """Exact jet of a vector of expressions in ``t``."""
        t = grid.nodes
        return cls(grid, np.stack([e.jet(t, eps, n) for e in entries]))


class MatrixJet:
    """Matrix function in (W^n_inf)^{m x m}; ``data[r, c, k, i]``."""

    def __init__(self, grid: Grid, data: np.ndarray):
        data = np.asarray(data, dtype=complex)
        if data.ndim != 4 or data.shape[0] != data.shape[1] or data.shape[3] != grid.N + 1:
            raise ValueError(f"matrix jet data shape {data.shape} does not fit m x m x (n+1) x {grid.N + 1}")
        _check_finite(data)
        data.setflags(write=False)
        self.grid = grid
        self.data = data

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[2] - 1

    def column(self, j: int) -> JetFunction:
        return JetFunction(self.grid, self.data[:, j])

    def truncate(self, order: int) -> "MatrixJet":
        _check_order(order, self.n)
        return MatrixJet(self.grid, self.data[:, :, : order + 1])

    def __sub__(self, other: "MatrixJet") -> "MatrixJet":
        _same_shape(self, other)
        return MatrixJet(self.grid, self.data - other.data)

    def times_vector(self, c: np.ndarray) -> JetFunction:
        """Jet of ``Y(t) @ c`` for a constant vector ``c``."""
        return JetFunction(self.grid, np.einsum("rckn,c->rkn", self.data, np.asarray(c, dtype=complex)))

    def __repr__(self):
        return f"MatrixJet(m={self.m}, n={self.n}, N={self.grid.N})"

    @classmethod
    def identity(cls, grid: Grid, m: int, n: int) -> "MatrixJet":
        data = np.zeros((m, m, n + 1, grid.N + 1), dtype=complex)
        data[np.arange(m), np.arange(m), 0, :] = 1.0
        return cls(grid, data)

    @classmethod
    def from_exprs(cls, grid: Grid, entries: Sequence[Sequence[ComplexExpr]], n: int, eps: float = 0.0) -> "MatrixJet":
        t = grid.nodes
        return cls(grid, np.stack([np.stack([e.jet(t, eps, n) for e in row]) for row in entries]))


def _check_order(order: int, n: int):
    if not 0 <= order <= n:
        raise ValueError(f"order {order} out of range 0..{n}")


def _same_shape(x, y):
    if x.grid != y.grid or x.data.shape != y.data.shape:
        raise ValueError(f"shape mismatch: {x!r} vs {y!r}")


def sup_norm(y: JetFunction, k: int) -> float:
    """Node maximum of ``|y_j^(k)(t_i)|`` over components and nodes."""
    _check_order(k, y.n)
    return float(np.max(np.abs(y.data[:, k, :])))


def sobolev_norm(y: JetFunction, order: int) -> float:
    _check_order(order, y.n)
    return float(np.sum(np.max(np.abs(y.data[:, : order + 1, :]), axis=(0, 2))))


def matrix_sobolev_norm(A: MatrixJet, order: int) -> float:
    _check_order(order, A.n)
    return float(np.sum(np.max(np.abs(A.data[:, :, : order + 1, :]), axis=(0, 1, 3))))


def jet_axpy(alpha: complex, x: JetFunction, y: JetFunction) -> JetFunction:
    """``alpha * x + y``."""
    _same_shape(x, y)
    return JetFunction(y.grid, alpha * x.data + y.data)


def jet_multiply(A, y: JetFunction) -> JetFunction:
    """Leibniz product jet ``(A y)^(k) = sum_j C(k, j) A^(j) y^(k-j)``.

    ``A`` is a :class:`MatrixJet`, or a scalar (m = 1) :class:`JetFunction`.
    """
    if isinstance(A, JetFunction):
        if A.m != 1:
            raise ValueError("a JetFunction multiplier must be scalar (m = 1)")
        A = MatrixJet(A.grid, A.data[np.newaxis])
    if A.grid != y.grid or A.n != y.n or A.m != y.m:
        raise ValueError(f"shape mismatch: {A!r} vs {y!r}")
    return JetFunction(y.grid, leibniz_product(A.data, y.data))


def leibniz_product(Ad: np.ndarray, Yd: np.ndarray) -> np.ndarray:
    """Leibniz product of raw arrays ``Ad[r, c, k, i]`` and ``Yd[c, ..., k, i]``.

    ``Yd`` may carry extra middle axes (e.g. matrix columns); the derivative
    axis is second to last. Output order is ``min`` of the two jet orders.
    """
    n = min(Ad.shape[2], Yd.shape[-2]) - 1
    out = np.zeros((Ad.shape[0],) + Yd.shape[1:-2] + (n + 1, Yd.shape[-1]), dtype=complex)
    for k in range(n + 1):
        for j in range(k + 1):
            out[..., k, :] += comb(k, j) * _apply_nodewise(Ad[:, :, j, :], Yd[..., k - j, :])
    return out


def _apply_nodewise(Ak: np.ndarray, Yk: np.ndarray) -> np.ndarray:
    # Ak: (r, c, N+1); Yk: (c, ..., N+1)
    if Yk.ndim == 2:
        return np.einsum("rci,ci->ri", Ak, Yk)
    return np.einsum("rci,cpi->rpi", Ak, Yk)
