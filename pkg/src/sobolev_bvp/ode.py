"""Fundamental matrices and Cauchy problems for ``y' + A(t) y = f(t)``.

The order-0 layer is integrated with classical fixed-step RK4 on the grid
nodes (coefficients sampled at nodes and midpoints). Higher derivative layers
come from the equation itself,

    y^(k+1) = f^(k) - sum_{j=0}^{k} C(k, j) A^(j) y^(k-j),

so they carry no numerical-differentiation noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from .expr import ComplexExpr
from .sobolev import Grid, JetFunction, MatrixJet

BLOWUP_THRESHOLD = 1e300


class BlowUpError(ArithmeticError):
    """Integration produced entries beyond the blow-up threshold (or non-finite)."""


@dataclass(frozen=True)
class CoefficientProvider:
    """``A(t; eps)`` (m x m) and optional ``f(t; eps)`` (m) at a bound ``eps``.

    ``max_order`` is the jet order n of solutions; coefficients are needed up
    to order n - 1.
    """

    m: int
    A: tuple[tuple[ComplexExpr, ...], ...]
    f: tuple[ComplexExpr, ...] | None
    eps: float
    max_order: int

    def __post_init__(self):
        if self.m < 1 or len(self.A) != self.m or any(len(row) != self.m for row in self.A):
            raise ValueError(f"A must be {self.m} x {self.m}")
        if self.f is not None and len(self.f) != self.m:
            raise ValueError(f"f must have {self.m} entries")
        if self.max_order < 0:
            raise ValueError("max_order must be non-negative")

    @classmethod
    def from_strings(cls, A: Sequence[Sequence], f: Sequence | None = None, eps: float = 0.0, max_order: int = 1):
        A_ = tuple(tuple(ComplexExpr.parse(e) for e in row) for row in A)
        f_ = None if f is None else tuple(ComplexExpr.parse(e) for e in f)
        return cls(len(A_), A_, f_, float(eps), int(max_order))

    def A_values(self, t: np.ndarray) -> np.ndarray:
        """Shape ``(len(t), m, m)``."""
        vals = np.empty((len(t), self.m, self.m), dtype=complex)
        for r, row in enumerate(self.A):
            for c, e in enumerate(row):
                vals[:, r, c] = e.value(t, self.eps)
        return vals

    def f_values(self, t: np.ndarray) -> np.ndarray:
        """Shape ``(len(t), m)``; zeros when there is no forcing."""
        vals = np.zeros((len(t), self.m), dtype=complex)
        if self.f is not None:
            for r, e in enumerate(self.f):
                vals[:, r] = e.value(t, self.eps)
        return vals

    def A_jet(self, grid: Grid, order: int) -> np.ndarray:
        """Shape ``(m, m, order + 1, N + 1)``."""
        t = grid.nodes
        return np.stack([np.stack([e.jet(t, self.eps, order) for e in row]) for row in self.A])

    def f_jet(self, grid: Grid, order: int) -> np.ndarray:
        """Shape ``(m, order + 1, N + 1)``."""
        if self.f is None:
            return np.zeros((self.m, order + 1, grid.N + 1), dtype=complex)
        t = grid.nodes
        return np.stack([e.jet(t, self.eps, order) for e in self.f])

    def with_forcing(self, f: Sequence[ComplexExpr] | None) -> "CoefficientProvider":
        return CoefficientProvider(self.m, self.A, None if f is None else tuple(f), self.eps, self.max_order)


def rk4_linear(A_nodes, A_half, F_nodes, F_half, Z0, h) -> np.ndarray:
    """RK4 for ``Z' = -A(t) Z + F(t)`` with ``Z`` of shape ``(m, p)``.

    ``A_nodes``/``F_nodes`` are sampled at the N + 1 nodes, ``A_half``/``F_half``
    at the N midpoints. Returns the trajectory, shape ``(N + 1, m, p)``.
    """
    N = A_half.shape[0]
    Z = np.array(Z0, dtype=complex)
    out = np.empty((N + 1,) + Z.shape, dtype=complex)
    out[0] = Z
    half = 0.5 * h
    for i in range(N):
        Ai, Ah, Aj = A_nodes[i], A_half[i], A_nodes[i + 1]
        Fi, Fh, Fj = F_nodes[i], F_half[i], F_nodes[i + 1]
        k1 = Fi - Ai @ Z
        k2 = Fh - Ah @ (Z + half * k1)
        k3 = Fh - Ah @ (Z + half * k2)
        k4 = Fj - Aj @ (Z + h * k3)
        Z = Z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.abs(Z) < BLOWUP_THRESHOLD):
            raise BlowUpError(f"solution exceeded {BLOWUP_THRESHOLD:g} at t index {i + 1}")
        out[i + 1] = Z
    return out


def lift_layers(layer0: np.ndarray, A_jet: np.ndarray, F_jet: np.ndarray | None, n: int) -> np.ndarray:
    """Fill derivative layers 1..n from ``layer0`` (shape ``(m, p, N+1)``).

    ``A_jet`` needs orders 0..n-1; ``F_jet`` (shape ``(m, p, >=n, N+1)``) may be None.
    Returns shape ``(m, p, n + 1, N + 1)``.
    """
    if n > 0 and A_jet.shape[2] < n:
        raise ValueError(f"coefficient jet of order {A_jet.shape[2] - 1} cannot lift to order {n}")
    if F_jet is not None and n > 0 and F_jet.shape[2] < n:
        raise ValueError(f"forcing jet of order {F_jet.shape[2] - 1} cannot lift to order {n}")
    m, p, npts = layer0.shape
    out = np.zeros((m, p, n + 1, npts), dtype=complex)
    out[:, :, 0, :] = layer0
    for k in range(n):
        acc = np.zeros((m, p, npts), dtype=complex) if F_jet is None else F_jet[:, :, k, :].astype(complex)
        for j in range(k + 1):
            acc = acc - comb(k, j) * np.einsum("rci,cpi->rpi", A_jet[:, :, j, :], out[:, :, k - j, :])
        out[:, :, k + 1, :] = acc
    return out


def lift_derivatives(y0: np.ndarray, coeffs: CoefficientProvider, grid: Grid, n: int | None = None) -> JetFunction:
    """Turn order-0 node values ``y0`` (shape ``(m, N+1)``) into a full jet of order n."""
    n = coeffs.max_order if n is None else n
    if n > coeffs.max_order:
        raise ValueError(f"coefficients only support jets up to order {coeffs.max_order}, asked for {n}")
    y0 = np.asarray(y0, dtype=complex)
    if y0.shape != (coeffs.m, grid.N + 1):
        raise ValueError(f"layer 0 must have shape {(coeffs.m, grid.N + 1)}, got {y0.shape}")
    order = max(n - 1, 0)
    A_jet = coeffs.A_jet(grid, order)
    F_jet = coeffs.f_jet(grid, order)[:, np.newaxis]
    data = lift_layers(y0[:, np.newaxis, :], A_jet, F_jet, n)
    return JetFunction(grid, data[:, 0])


def fundamental_and_cauchy(coeffs: CoefficientProvider, grid: Grid) -> tuple[MatrixJet, JetFunction]:
    """One RK4 pass over the augmented state ``[Y | x]``.

    ``Y' = -A Y, Y(a) = I`` and ``x' + A x = f, x(a) = 0``, both lifted to
    jets of order ``coeffs.max_order``.
    """
    m, n = coeffs.m, coeffs.max_order
    t, tm = grid.nodes, grid.midpoints
    A_nodes, A_half = coeffs.A_values(t), coeffs.A_values(tm)
    F_nodes = np.zeros((grid.N + 1, m, m + 1), dtype=complex)
    F_half = np.zeros((grid.N, m, m + 1), dtype=complex)
    F_nodes[:, :, m] = coeffs.f_values(t)
    F_half[:, :, m] = coeffs.f_values(tm)
    Z0 = np.zeros((m, m + 1), dtype=complex)
    Z0[:, :m] = np.eye(m)
    traj = rk4_linear(A_nodes, A_half, F_nodes, F_half, Z0, grid.h)
    layer0 = np.moveaxis(traj, 0, -1)  # (m, m+1, N+1)

    order = max(n - 1, 0)
    A_jet = coeffs.A_jet(grid, order)
    F_jet = np.zeros((m, m + 1, order + 1, grid.N + 1), dtype=complex)
    F_jet[:, m] = coeffs.f_jet(grid, order)
    lifted = lift_layers(layer0, A_jet, F_jet, n)
    return MatrixJet(grid, lifted[:, :m]), JetFunction(grid, lifted[:, m])


def fundamental_matrix(coeffs: CoefficientProvider, grid: Grid) -> MatrixJet:
    """Y with ``Y' = -A Y`` and ``Y(a) = I``."""
    Y, _ = fundamental_and_cauchy(coeffs.with_forcing(None), grid)
    return Y


def cauchy_solve(coeffs: CoefficientProvider, grid: Grid) -> JetFunction:
    """x with ``x' + A x = f`` and ``x(a) = 0``."""
    if coeffs.f is None:
        raise ValueError("cauchy_solve needs a forcing term f")
    _, x = fundamental_and_cauchy(coeffs, grid)
    return x


def integration_error_estimate(coeffs: CoefficientProvider, grid: Grid) -> float:
    """Richardson indicator: max node gap between the N and 2N order-0 layers."""
    Y1, x1 = fundamental_and_cauchy(coeffs, grid)
    Y2, x2 = fundamental_and_cauchy(coeffs, grid.refine(2))
    gap_Y = np.max(np.abs(Y1.data[:, :, 0, :] - Y2.data[:, :, 0, ::2]))
    gap_x = np.max(np.abs(x1.data[:, 0, :] - x2.data[:, 0, ::2]))
    return float(max(gap_Y, gap_x))
