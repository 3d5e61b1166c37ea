"""Parameter families ``eps -> (A, f, B, c)`` and their eps -> 0+ behaviour.

``check_condition_zero`` asks whether the limit problem is nonsingular.
``check_condition_I`` follows ``A(eps) - A(0)`` in W^{n-1}_inf, while
``check_condition_II`` follows ``B(eps) y - B(0) y`` on probe functions.
``sweep`` compares the error ``||y(0) - y(eps)||_{n,inf}`` with the
discrepancy ``||L(eps) y(0) - f(eps)||_{n-1,inf} + |B(eps) y(0) - c(eps)|``.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import boundary, bvp
from .boundary import BoundaryOperator, IntegralTerm, PointTerm
from .expr import ComplexExpr
from .ode import CoefficientProvider, fundamental_matrix, integration_error_estimate
from .sobolev import Grid, JetFunction, MatrixJet, jet_multiply, matrix_sobolev_norm, sobolev_norm

log = logging.getLogger(__name__)

DEFAULT_SCHEDULE = tuple(2.0**-k for k in range(3, 13))
FLOOR_FACTOR = 1e3
JITTER = 1.05
MIN_SLOPE = 0.25
MIN_R2 = 0.9

Matrix = tuple[tuple[ComplexExpr, ...], ...]


@dataclass(frozen=True)
class PointSpec:
    node: float
    order: int
    coef: Matrix

    def build(self, eps: float) -> PointTerm:
        coef = np.array([[np.complex128(e.value(self.node, eps)) for e in row] for row in self.coef])
        return PointTerm(self.node, self.order, coef)


@dataclass(frozen=True)
class IntegralSpec:
    kernel: Matrix
    order: int

    def build(self, eps: float) -> IntegralTerm:
        return IntegralTerm(self.kernel, self.order, eps)


TermSpec = PointSpec | IntegralSpec


def build_operator(m: int, n: int, specs: Sequence[TermSpec], eps: float) -> BoundaryOperator:
    terms = [s.build(eps) for s in specs]
    return BoundaryOperator(
        m,
        n,
        tuple(t for t in terms if isinstance(t, PointTerm)),
        tuple(t for t in terms if isinstance(t, IntegralTerm)),
    )


@dataclass(frozen=True)
class Family:
    """An eps-parametrized problem with ``B(eps) = B0 + eps * B1``.

    The ``zero_*`` fields, when set, replace the corresponding data at
    ``eps = 0`` exactly (for families whose formulas are undefined there).
    """

    a: float
    b: float
    m: int
    n: int
    N: int
    A: Matrix
    f: tuple[ComplexExpr, ...]
    c: tuple[ComplexExpr, ...]
    B0: tuple[TermSpec, ...]
    B1: tuple[TermSpec, ...] = ()
    eps0: float = 1.0
    schedule: tuple[float, ...] = DEFAULT_SCHEDULE
    r_max: float = 10.0
    zero_A: Matrix | None = None
    zero_f: tuple[ComplexExpr, ...] | None = None
    zero_c: tuple[ComplexExpr, ...] | None = None
    zero_B: tuple[TermSpec, ...] | None = None

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("families need m >= 1 and n >= 1")
        if len(self.A) != self.m or any(len(r) != self.m for r in self.A):
            raise ValueError(f"A must be {self.m} x {self.m}")
        if len(self.f) != self.m or len(self.c) != self.m:
            raise ValueError(f"f and c must have {self.m} entries")
        if not self.B0 and not self.zero_B:
            raise ValueError("B0 needs at least one term")
        s = self.schedule
        if any(not 0 < e < self.eps0 for e in s):
            raise ValueError(f"schedule must lie in (0, eps0 = {self.eps0})")
        if any(x <= y for x, y in zip(s, s[1:])):
            raise ValueError("schedule must be strictly decreasing")

    @property
    def grid(self) -> Grid:
        return Grid(self.a, self.b, self.N)

    @classmethod
    def from_strings(cls, a, b, n, A, f, c, B0, B1=(), N=2000, **kw) -> "Family":
        """Convenience constructor; ``B0``/``B1`` hold ``("point", node, order, coef)``
        or ``("integral", kernel, order)`` tuples with string entries."""

        def mat(rows):
            return tuple(tuple(ComplexExpr.parse(e) for e in row) for row in rows)

        def vec(items):
            return tuple(ComplexExpr.parse(e) for e in items)

        def specs(items):
            out = []
            for item in items:
                if item[0] == "point":
                    out.append(PointSpec(float(item[1]), int(item[2]), mat(item[3])))
                else:
                    out.append(IntegralSpec(mat(item[1]), int(item[2])))
            return tuple(out)

        for key, conv in (("zero_A", mat), ("zero_f", vec), ("zero_c", vec), ("zero_B", specs)):
            if kw.get(key) is not None:
                kw[key] = conv(kw[key])
        return cls(float(a), float(b), len(A), int(n), int(N), mat(A), vec(f), vec(c), specs(B0), specs(B1), **kw)


def _pick(eps, value, zero_value):
    return zero_value if eps == 0 and zero_value is not None else value


def coefficients(fam: Family, eps: float) -> CoefficientProvider:
    A = _pick(eps, fam.A, fam.zero_A)
    f = _pick(eps, fam.f, fam.zero_f)
    return CoefficientProvider(fam.m, A, f, float(eps), fam.n)


def boundary_operator(fam: Family, eps: float) -> BoundaryOperator:
    if eps == 0 and fam.zero_B is not None:
        return build_operator(fam.m, fam.n, fam.zero_B, 0.0)
    B = build_operator(fam.m, fam.n, fam.B0, eps)
    if fam.B1 and eps != 0:
        B = B + build_operator(fam.m, fam.n, fam.B1, eps).scaled(eps)
    return B


def boundary_data(fam: Family, eps: float) -> np.ndarray:
    c = _pick(eps, fam.c, fam.zero_c)
    return np.array([np.complex128(e.value(0.0, eps)) for e in c])


def instantiate(fam: Family, eps: float, grid: Grid | None = None) -> bvp.Problem:
    """The fixed-eps problem of the family."""
    if not 0 <= eps < fam.eps0:
        raise ValueError(f"eps = {eps!r} outside [0, {fam.eps0})")
    return bvp.Problem(grid or fam.grid, coefficients(fam, eps), boundary_operator(fam, eps), boundary_data(fam, eps))


# --------------------------------------------------------------- verdict logic


@dataclass(frozen=True)
class Trend:
    passed: bool
    slope: float
    r2: float
    monotone: bool
    tol: float


def loglog_fit(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope and R^2 of log y against log x."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    if lx.size < 2:
        return math.nan, math.nan
    slope, icpt = np.polyfit(lx, ly, 1)
    ss_res = float(np.sum((ly - (slope * lx + icpt)) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def vanishing_trend(eps: Sequence[float], values: Sequence[float], tol: float) -> Trend:
    """Does ``values`` (ordered by decreasing eps) tend to zero as eps -> 0+?

    Passes when the sequence is non-increasing up to 5% jitter and either ends
    below ``tol`` or decays like a power of eps (log-log slope >= 0.25 with
    R^2 >= 0.9).
    """
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        return Trend(False, math.nan, math.nan, False, tol)
    monotone = bool(np.all(v[1:] <= JITTER * v[:-1] + tol))
    big = v > tol
    slope, r2 = loglog_fit(np.asarray(eps)[big], v[big])
    if not big.any():
        return Trend(True, slope, r2, monotone, tol)
    decays = slope >= MIN_SLOPE and r2 >= MIN_R2
    return Trend(bool(monotone and (v[-1] <= tol or decays)), slope, r2, monotone, tol)


@dataclass
class ConditionReport:
    name: str
    passed: bool
    message: str
    rows: list[tuple[float, float]] = field(default_factory=list)
    trend: Trend | None = None
    detail: dict = field(default_factory=dict)

    def format(self) -> str:
        lines = [f"{self.name}: {'pass' if self.passed else 'fail'} - {self.message}"]
        for e, val in self.rows:
            lines.append(f"  eps={e:.12g}  value={val:.12g}")
        if self.trend is not None:
            lines.append(f"  slope={self.trend.slope:.4g} r2={self.trend.r2:.4g} monotone={self.trend.monotone}")
        return "\n".join(lines)


def check_condition_zero(fam: Family) -> ConditionReport:
    """Nonsingularity of the limit characteristic matrix [B(0) Y(0)]."""
    p = instantiate(fam, 0.0)
    Y = fundamental_matrix(p.coeffs, p.grid)
    rep = boundary.nonsingularity_report(boundary.characteristic_matrix(p.B, Y), atol=bvp.characteristic_noise(p, Y))
    msg = f"det={rep.det:.6g} cond={rep.cond:.6g} rank={rep.rank}/{fam.m}"
    return ConditionReport("c0", not rep.singular, msg, detail={"report": rep})


def check_condition_I(fam: Family) -> ConditionReport:
    """Coefficient convergence ``||A(eps) - A(0)||_{n-1,inf} -> 0``."""
    order = fam.n - 1
    grid = fam.grid
    A0 = coefficients(fam, 0.0).A_jet(grid, order)
    tol = 1e-6 * (1.0 + matrix_sobolev_norm(MatrixJet(grid, A0), order))

    def dev(e):
        Ae = coefficients(fam, e).A_jet(grid, order)
        return matrix_sobolev_norm(MatrixJet(grid, Ae - A0), order)

    rows = [(e, dev(e)) for e in fam.schedule]
    trend = vanishing_trend(fam.schedule, [r[1] for r in rows], tol)
    return ConditionReport("cI", trend.passed, f"coefficient deviation, tol={tol:.3g}", rows, trend)


def monomial_probes(m: int, n: int) -> list[tuple[ComplexExpr, ...]]:
    """``t^k e_j`` for ``k = 0..n+2`` and every component j."""
    zero = ComplexExpr.parse("0")
    probes = []
    for j in range(m):
        for k in range(n + 3):
            mono = ComplexExpr.parse("1" if k == 0 else f"t^{k}")
            probes.append(tuple(mono if i == j else zero for i in range(m)))
    return probes


def probe_jets(fam: Family, probes=None) -> list[JetFunction]:
    probes = monomial_probes(fam.m, fam.n) if probes is None else probes
    return [p if isinstance(p, JetFunction) else JetFunction.from_exprs(fam.grid, p, fam.n) for p in probes]


def check_condition_II(fam: Family, probes: Sequence | None = None) -> ConditionReport:
    """Strong convergence ``B(eps) y -> B(0) y`` on a finite probe set.

    Only the probes are tested, so a pass is evidence rather than proof.
    """
    jets = probe_jets(fam, probes)
    if not jets:
        raise ValueError("condition (II) needs at least one probe")
    B0 = boundary_operator(fam, 0.0)
    base = [boundary.apply(B0, y) for y in jets]
    tol = 1e-8 * (1.0 + float(np.max(np.abs(boundary_data(fam, 0.0)))))

    def dev(e):
        Be = boundary_operator(fam, e)
        return max(float(np.max(np.abs(boundary.apply(Be, y) - b))) for y, b in zip(jets, base))

    rows = [(e, dev(e)) for e in fam.schedule]
    trend = vanishing_trend(fam.schedule, [r[1] for r in rows], tol)
    return ConditionReport("cII", trend.passed, f"max probe deviation over {len(jets)} probes, tol={tol:.3g}", rows, trend)


# ------------------------------------------------------------------ discrepancy


def discrepancy(fam: Family, eps: float, y0: bvp.SolveResult, grid: Grid | None = None) -> float:
    """``||L(eps) y(0) - f(eps)||_{n-1,inf} + |B(eps) y(0) - c(eps)|``."""
    p = instantiate(fam, eps, grid or y0.y.grid)
    ode_part, bnd_part = bvp.residual_norms(p, y0.y)
    return ode_part + bnd_part


# ------------------------------------------------------------------------ sweep


def max_workers() -> int:
    env = os.environ.get("SOBOLEV_BVP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer SOBOLEV_BVP_THREADS=%r", env)
    return min(4, os.cpu_count() or 1)


def _ordered_map(fn: Callable, items: Sequence) -> list:
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class SweepRow:
    eps: float
    error: float
    discrepancy: float
    ratio: float


@dataclass
class SweepReport:
    rows: list[SweepRow]
    ratio_min: float
    ratio_max: float
    bracket: float
    floor: float
    used_rows: int
    order: float
    order_r2: float
    eps2: float
    flags: dict[str, bool]
    conditions: dict[str, ConditionReport]
    two_sided: bool
    degenerate: bool
    r_max: float

    @property
    def gamma1(self) -> float:
        """Empirical lower constant: error >= gamma1 * discrepancy on the used rows."""
        return self.ratio_min

    @property
    def gamma2(self) -> float:
        return self.ratio_max

    @property
    def passed(self) -> bool:
        return all(self.flags.values()) and self.two_sided

    def verdict_line(self, precision: int = 12) -> str:
        def fmt(x):
            return f"{x:.{precision}g}"

        flags = " ".join(f"{k}={'pass' if v else 'fail'}" for k, v in self.flags.items())
        return (
            f"# verdict: {'pass' if self.passed else 'fail'} {flags} "
            f"two_sided={'pass' if self.two_sided else 'fail'} degenerate={str(self.degenerate).lower()} "
            f"ratio_min={fmt(self.ratio_min)} ratio_max={fmt(self.ratio_max)} bracket={fmt(self.bracket)} "
            f"r_max={fmt(self.r_max)} used_rows={self.used_rows} order={fmt(self.order)} eps2={fmt(self.eps2)}"
        )

    def to_csv(self, precision: int = 12) -> str:
        def fmt(x):
            return f"{x:.{precision}g}"

        lines = ["eps,error,discrepancy,ratio"]
        for r in self.rows:
            lines.append(",".join(fmt(x) for x in (r.eps, r.error, r.discrepancy, r.ratio)))
        lines.append(self.verdict_line(precision))
        return "\n".join(lines) + "\n"


def sweep(fam: Family, r_max: float | None = None) -> SweepReport:
    """Solve along the schedule and compare error with discrepancy.

    Rows whose error or discrepancy sit below ``FLOOR_FACTOR`` times the
    solver noise floor are kept in the table but excluded from the ratio
    statistics.
    """
    r_max = fam.r_max if r_max is None else r_max
    if not fam.schedule:
        raise ValueError("empty schedule")
    c0 = check_condition_zero(fam)
    if not c0.passed:
        raise bvp.SingularCharacteristicMatrix(c0.detail["report"], 0.0)
    cI = check_condition_I(fam)
    cII = check_condition_II(fam)

    p0 = instantiate(fam, 0.0)
    r0 = bvp.solve(p0)
    noise = r0.ode_residual + r0.boundary_residual + integration_error_estimate(p0.coeffs, p0.grid)

    def run(e):
        try:
            re = bvp.solve(instantiate(fam, e))
        except bvp.SingularCharacteristicMatrix as err:
            raise bvp.SingularCharacteristicMatrix(err.report, e) from None
        err_norm = sobolev_norm(r0.y - re.y, fam.n)
        return err_norm, discrepancy(fam, e, r0), re.ode_residual + re.boundary_residual

    results = _ordered_map(run, list(fam.schedule))
    noise = max([noise] + [r[2] for r in results])
    floor = FLOOR_FACTOR * noise

    rows = []
    for e, (err_norm, disc, _) in zip(fam.schedule, results):
        ratio = err_norm / disc if disc > 0 else math.nan
        rows.append(SweepRow(e, err_norm, disc, ratio))

    used = [r for r in rows if r.error > floor and r.discrepancy > floor]
    degenerate = all(r.error <= floor and r.discrepancy <= floor for r in rows)
    if used:
        ratios = [r.ratio for r in used]
        ratio_min, ratio_max = min(ratios), max(ratios)
        bracket = ratio_max / ratio_min
        two_sided = bracket <= r_max
    else:
        ratio_min = ratio_max = bracket = math.nan
        two_sided = degenerate
    fit_rows = [r for r in rows if r.error > floor]
    order, order_r2 = loglog_fit([r.eps for r in fit_rows], [r.error for r in fit_rows])

    return SweepReport(
        rows=rows,
        ratio_min=ratio_min,
        ratio_max=ratio_max,
        bracket=bracket,
        floor=floor,
        used_rows=len(used),
        order=order,
        order_r2=order_r2,
        eps2=fam.schedule[0],
        flags={"c0": c0.passed, "cI": cI.passed, "cII": cII.passed},
        conditions={"c0": c0, "cI": cI, "cII": cII},
        two_sided=two_sided,
        degenerate=degenerate,
        r_max=r_max,
    )


# ------------------------------------------------------ operator convergence


@dataclass
class OperatorConvergenceReport:
    forward: list[tuple[float, float]]
    inverse: list[tuple[float, float]]
    forward_trend: Trend
    inverse_trend: Trend

    @property
    def passed(self) -> bool:
        return self.forward_trend.passed and self.inverse_trend.passed

    @property
    def equivalence_held(self) -> bool:
        """Forward and inverse strong convergence agree on this family."""
        return self.forward_trend.passed == self.inverse_trend.passed


def operator_convergence_check(fam: Family, probes: Sequence | None = None) -> OperatorConvergenceReport:
    """Strong convergence of ``(L(eps), B(eps))`` and of its inverse, on probes.

    Forward: ``||(A(eps) - A(0)) y||_{n-1,inf} + |B(eps) y - B(0) y|`` per probe y.
    Inverse: ``||y_eps - y_0||_{n,inf}`` where both solve with data ``f = probe``,
    ``c = (1, ..., 1)`` held fixed in eps.
    """
    probes = monomial_probes(fam.m, fam.n) if probes is None else list(probes)
    grid = fam.grid
    k = fam.n - 1
    jets = [JetFunction.from_exprs(grid, p, fam.n) for p in probes]
    ones = np.ones(fam.m, dtype=complex)

    def operator_parts(e):
        coeffs = coefficients(fam, e)
        return MatrixJet(grid, coeffs.A_jet(grid, k)), coeffs, boundary_operator(fam, e)

    A0, coeffs0, B0 = operator_parts(0.0)
    base_solutions = [bvp.solve(bvp.Problem(grid, coeffs0.with_forcing(p), B0, ones)).y for p in probes]

    def forward(e):
        Ae, _, Be = operator_parts(e)
        dA = Ae - A0
        return max(
            sobolev_norm(jet_multiply(dA, y.truncate(k)), k)
            + float(np.max(np.abs(boundary.apply(Be, y) - boundary.apply(B0, y))))
            for y in jets
        )

    def inverse(e):
        _, ce, Be = operator_parts(e)
        return max(
            sobolev_norm(bvp.solve(bvp.Problem(grid, ce.with_forcing(p), Be, ones)).y - y0, fam.n)
            for p, y0 in zip(probes, base_solutions)
        )

    fwd = _ordered_map(forward, list(fam.schedule))
    inv = _ordered_map(inverse, list(fam.schedule))
    tol_f = 1e-6 * (1.0 + matrix_sobolev_norm(A0, k))
    tol_i = 1e-6 * (1.0 + max(sobolev_norm(y, fam.n) for y in base_solutions))
    return OperatorConvergenceReport(
        list(zip(fam.schedule, fwd)),
        list(zip(fam.schedule, inv)),
        vanishing_trend(fam.schedule, fwd, tol_f),
        vanishing_trend(fam.schedule, inv, tol_i),
    )
