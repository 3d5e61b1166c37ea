"""Boundary operators B: (W^n_inf)^m -> C^m built from point and integral terms.

    B y = sum_j alpha_j y^(k_j)(t_j) + sum_l int_a^b Phi_l(t) y^(k_l)(t) dt

Point nodes must be grid nodes; integrals use composite Simpson (N even).
Vector norms on C^m are max-modulus; matrix coefficients are measured with the
induced (max row sum) norm.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .expr import ComplexExpr
from .sobolev import Grid, JetFunction, MatrixJet

SINGULAR_RTOL = 1e-10


class OffGridError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PointTerm:
    node: float
    order: int
    coef: np.ndarray  # (m, m) complex

    def __post_init__(self):
        object.__setattr__(self, "coef", np.asarray(self.coef, dtype=complex))


@dataclass(frozen=True, eq=False)
class IntegralTerm:
    kernel: tuple[tuple[ComplexExpr, ...], ...]
    order: int
    eps: float = 0.0
    scale: complex = 1.0

    def values(self, grid: Grid) -> np.ndarray:
        """Kernel samples, shape ``(m, m, N + 1)``."""
        t = grid.nodes
        out = np.empty((len(self.kernel), len(self.kernel), t.size), dtype=complex)
        for r, row in enumerate(self.kernel):
            for c, e in enumerate(row):
                out[r, c] = np.broadcast_to(e.value(t, self.eps), t.shape)
        return self.scale * out


@dataclass(frozen=True, eq=False)
class BoundaryOperator:
    m: int
    n: int
    point_terms: tuple[PointTerm, ...] = ()
    integral_terms: tuple[IntegralTerm, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "point_terms", tuple(self.point_terms))
        object.__setattr__(self, "integral_terms", tuple(self.integral_terms))
        if not self.point_terms and not self.integral_terms:
            raise ValueError("a boundary operator needs at least one term")
        for term in self.point_terms:
            if term.coef.shape != (self.m, self.m):
                raise ValueError(f"point coefficient has shape {term.coef.shape}, expected {(self.m, self.m)}")
            self._check_order(term.order)
        for term in self.integral_terms:
            if len(term.kernel) != self.m or any(len(row) != self.m for row in term.kernel):
                raise ValueError(f"integral kernel must be {self.m} x {self.m}")
            self._check_order(term.order)

    def _check_order(self, k: int):
        if not 0 <= k <= max(self.n - 1, 0):
            raise ValueError(f"boundary term order {k} outside 0..{self.n - 1}")

    @property
    def max_order(self) -> int:
        return max(t.order for t in (*self.point_terms, *self.integral_terms))

    def scaled(self, alpha: complex) -> "BoundaryOperator":
        return BoundaryOperator(
            self.m,
            self.n,
            tuple(PointTerm(p.node, p.order, alpha * p.coef) for p in self.point_terms),
            tuple(IntegralTerm(q.kernel, q.order, q.eps, alpha * q.scale) for q in self.integral_terms),
        )

    def __add__(self, other: "BoundaryOperator") -> "BoundaryOperator":
        if (self.m, self.n) != (other.m, other.n):
            raise ValueError("cannot add boundary operators of different shapes")
        return BoundaryOperator(
            self.m, self.n, self.point_terms + other.point_terms, self.integral_terms + other.integral_terms
        )

    def bound_constant(self, grid: Grid) -> float:
        """K_B with ``|B y| <= K_B * ||y||_{n,inf}``."""
        K = sum(_row_sum_norm(p.coef) for p in self.point_terms)
        for q in self.integral_terms:
            vals = q.values(grid)
            K += (grid.b - grid.a) * float(np.max(np.sum(np.abs(vals), axis=1)))
        return float(K)


def _row_sum_norm(M: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(M), axis=1)))


def simpson_weights(grid: Grid) -> np.ndarray:
    if grid.N % 2:
        raise ValueError(f"Simpson quadrature needs an even number of subintervals, got N = {grid.N}")
    w = np.ones(grid.N + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (grid.h / 3.0)


def _apply_data(B: BoundaryOperator, grid: Grid, data: np.ndarray) -> np.ndarray:
    # data: (m, p, n+1, N+1) -> (m, p)
    if data.shape[0] != B.m:
        raise ValueError(f"boundary operator acts on m = {B.m}, got m = {data.shape[0]}")
    if data.shape[2] - 1 < B.max_order:
        raise ValueError(f"jet order {data.shape[2] - 1} below boundary term order {B.max_order}")
    out = np.zeros(data.shape[:2], dtype=complex)
    for term in B.point_terms:
        try:
            i = grid.node_index(term.node)
        except ValueError as err:
            raise OffGridError(str(err)) from None
        out += term.coef @ data[:, :, term.order, i]
    if B.integral_terms:
        w = simpson_weights(grid)
        for term in B.integral_terms:
            integrand = np.einsum("rci,cpi->rpi", term.values(grid), data[:, :, term.order, :])
            out += integrand @ w
    return out


def apply(B: BoundaryOperator, y: JetFunction) -> np.ndarray:
    """``B y`` as a complex vector of length m."""
    return _apply_data(B, y.grid, y.data[:, np.newaxis])[:, 0]


def characteristic_matrix(B: BoundaryOperator, Y: MatrixJet) -> np.ndarray:
    """``[B Y]``: column j is ``B`` applied to column j of ``Y``."""
    return _apply_data(B, Y.grid, Y.data)


@dataclass(frozen=True)
class NonsingularityReport:
    det: complex
    cond: float
    singular: bool
    rank: int
    singular_values: tuple[float, ...]


def numerical_rank(M: np.ndarray, rtol: float = SINGULAR_RTOL, atol: float = 0.0) -> int:
    """Singular values above ``max(rtol * s_max, atol)``.

    ``atol`` is the noise floor of ``M`` itself (e.g. integration error pushed
    through B); without it a matrix that is zero up to noise has full rank.
    """
    s = np.linalg.svd(np.asarray(M, dtype=complex), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > max(rtol * s[0], atol)))


def nonsingularity_report(M: np.ndarray, atol: float = 0.0) -> NonsingularityReport:
    M = np.asarray(M, dtype=complex)
    s = np.linalg.svd(M, compute_uv=False)
    rank = numerical_rank(M, atol=atol)
    singular = rank < M.shape[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            cond = float(np.linalg.cond(M, 1))
        except np.linalg.LinAlgError:
            cond = float("inf")
    if not np.isfinite(cond):
        cond = float("inf")
    return NonsingularityReport(
        det=complex(np.linalg.det(M)),
        cond=cond,
        singular=singular,
        rank=rank,
        singular_values=tuple(float(x) for x in s),
    )


def snap_to_grid(grid: Grid, t: float) -> tuple[float, float]:
    """Nearest grid node to ``t`` and the snap distance; warns above 1e-12 (b - a)."""
    if not grid.a - 1e-12 * (grid.b - grid.a) <= t <= grid.b + 1e-12 * (grid.b - grid.a):
        raise OffGridError(f"boundary node {t!r} lies outside [{grid.a}, {grid.b}]")
    i = min(max(int(round((t - grid.a) / grid.h)), 0), grid.N)
    snapped = float(grid.nodes[i])
    dist = abs(snapped - t)
    if dist > 1e-12 * (grid.b - grid.a):
        warnings.warn(f"boundary node {t!r} snapped to grid node {snapped!r} (moved {dist:.3g})", stacklevel=2)
    return snapped, dist


def point(m: int, n: int, node: float, coef: Sequence[Sequence[complex]] | None = None, order: int = 0) -> BoundaryOperator:
    """Single point-evaluation operator, ``coef`` defaulting to the identity."""
    coef = np.eye(m) if coef is None else coef
    return BoundaryOperator(m, n, (PointTerm(node, order, coef),))
