"""Solve ``y' + A y = f, B y = c`` at a fixed parameter value.

The solution is assembled from the fundamental matrix Y (Y(a) = I) and the
Cauchy solution x (x(a) = 0) as ``y = x + Y c_tilde`` with
``[B Y] c_tilde = c - B x``. The split ``y = v + w`` keeps the homogeneous
part ``v = Y [B Y]^{-1} c`` (B v = c) apart from the zero-boundary part
``w = x - Y [B Y]^{-1} B x`` (B w = 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import boundary
from .boundary import BoundaryOperator, NonsingularityReport
from .ode import CoefficientProvider, fundamental_and_cauchy, fundamental_matrix
from .sobolev import Grid, JetFunction, MatrixJet, jet_multiply, sobolev_norm

# multiple of the coarse/fine gap of [B Y] treated as indistinguishable from 0
NOISE_FACTOR = 100.0


class SingularCharacteristicMatrix(np.linalg.LinAlgError):
    def __init__(self, report: NonsingularityReport, eps: float | None = None):
        self.report = report
        self.eps = eps
        where = "" if eps is None else f" at eps = {eps!r}"
        super().__init__(
            f"characteristic matrix is singular{where} "
            f"(rank {report.rank}, singular values {', '.join(f'{s:.3g}' for s in report.singular_values)})"
        )


@dataclass(frozen=True, eq=False)
class Problem:
    grid: Grid
    coeffs: CoefficientProvider
    B: BoundaryOperator
    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=complex).reshape(-1))
        if self.n < 1:
            raise ValueError("problems need jet order n >= 1")
        if (self.B.m, self.B.n) != (self.m, self.n):
            raise ValueError(f"boundary operator is for (m, n) = {(self.B.m, self.B.n)}, problem has {(self.m, self.n)}")
        if self.c.shape != (self.m,):
            raise ValueError(f"c must have {self.m} entries")

    @property
    def m(self) -> int:
        return self.coeffs.m

    @property
    def n(self) -> int:
        return self.coeffs.max_order

    @property
    def eps(self) -> float:
        return self.coeffs.eps

    def A_jet(self, order: int | None = None) -> MatrixJet:
        order = self.n - 1 if order is None else order
        return MatrixJet(self.grid, self.coeffs.A_jet(self.grid, order))

    def f_jet(self, order: int | None = None) -> JetFunction:
        order = self.n - 1 if order is None else order
        return JetFunction(self.grid, self.coeffs.f_jet(self.grid, order))


@dataclass(frozen=True, eq=False)
class SolveResult:
    y: JetFunction
    v: JetFunction
    w: JetFunction
    x: JetFunction
    Y: MatrixJet
    c_tilde: np.ndarray
    char_matrix: np.ndarray
    report: NonsingularityReport
    ode_residual: float
    boundary_residual: float


def characteristic_noise(p: Problem, Y: MatrixJet) -> float:
    """Noise floor of ``[B Y]`` from comparing Y with a half-resolution pass.

    The gap over the jet orders that B reads is about 15 times the RK4 error
    of Y; pushing it through ``K_B`` bounds the error of ``[B Y]``.
    """
    k = p.B.max_order
    if p.grid.N % 2 == 0 and p.grid.N >= 4:
        coarse = fundamental_matrix(p.coeffs, Grid(p.grid.a, p.grid.b, p.grid.N // 2))
        gap = np.max(np.abs(Y.data[:, :, : k + 1, ::2] - coarse.data[:, :, : k + 1]))
    else:
        fine = fundamental_matrix(p.coeffs, p.grid.refine(2))
        gap = np.max(np.abs(Y.data[:, :, : k + 1] - fine.data[:, :, : k + 1, ::2]))
    return NOISE_FACTOR * p.B.bound_constant(p.grid) * float(gap)


def solve(p: Problem) -> SolveResult:
    Y, x = fundamental_and_cauchy(p.coeffs, p.grid)
    M = boundary.characteristic_matrix(p.B, Y)
    report = boundary.nonsingularity_report(M, atol=characteristic_noise(p, Y))
    if report.singular:
        raise SingularCharacteristicMatrix(report, p.eps)
    lu = scipy.linalg.lu_factor(M, check_finite=True)
    Bx = boundary.apply(p.B, x)
    c_tilde = scipy.linalg.lu_solve(lu, p.c - Bx)
    c_v = scipy.linalg.lu_solve(lu, p.c)

    y = x + Y.times_vector(c_tilde)
    v = Y.times_vector(c_v)
    w = x - Y.times_vector(c_v - c_tilde)
    ode_res, bnd_res = residual_norms(p, y)
    return SolveResult(y, v, w, x, Y, c_tilde, M, report, ode_res, bnd_res)


def residual_norms(p: Problem, y: JetFunction) -> tuple[float, float]:
    """``(||y' + A y - f||_{n-1,inf}, |B y - c|)`` for a candidate jet ``y``."""
    if y.m != p.m or y.grid != p.grid or y.n < p.n:
        raise ValueError(f"candidate {y!r} does not match problem (m={p.m}, n={p.n}, N={p.grid.N})")
    y = y.truncate(p.n)
    k = p.n - 1
    Ay = jet_multiply(p.A_jet(k), y.truncate(k))
    r = y.derivative() + Ay - p.f_jet(k)
    bnd = boundary.apply(p.B, y) - p.c
    return sobolev_norm(r, k), float(np.max(np.abs(bnd)))


def homogeneous_kernel_dim(p: Problem) -> int:
    """Dimension of the solution space of ``y' + A y = 0, B y = 0``."""
    Y = fundamental_matrix(p.coeffs, p.grid)
    M = boundary.characteristic_matrix(p.B, Y)
    return p.m - boundary.numerical_rank(M, atol=characteristic_noise(p, Y))
