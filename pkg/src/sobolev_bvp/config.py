"""YAML problem/family configuration.

Schema (keys not listed are rejected)::

    interval: {a: 0.0, b: 1.0}
    dims:     {m: 1, n: 2}
    grid:     {N: 2000}                      # even; Simpson quadrature
    A: [["1 + eps*t"]]                       # m x m entries
    f: ["0"]                                 # m entries
    c: ["1"]                                 # m entries, expressions in eps only
    boundary:                                # B(eps) = B0 + eps * B1
      - {kind: point, node: 0.0, order: 0, coefficient: [["1"]]}
      - {kind: integral, kernel: [["t"]], order: 0, part: B1}
    zero:                                    # optional exact data at eps = 0
      A: ...; f: ...; c: ...; boundary: [...]
    sweep:  {eps0: 1.0, k_range: [3, 12], r_max: 10}   # or schedule: [..]
    output: {csv: out.csv, precision: 12}

An entry is an expression string, a number, or a ``[re, im]`` pair.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import yaml

from .boundary import OffGridError, snap_to_grid
from .expr import ComplexExpr, ParseError
from .parametric import DEFAULT_SCHEDULE, Family, IntegralSpec, PointSpec
from .sobolev import Grid

log = logging.getLogger(__name__)

MAX_M = 64
TOP_KEYS = {"interval", "dims", "grid", "A", "f", "c", "boundary", "zero", "sweep", "output"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    family: Family
    csv: str | None = None
    precision: int = 12
    source: str = ""


def _require(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise ConfigError(f"{where}: missing key {key!r}")
    return d[key]


def _number(x, where: str) -> float:
    if isinstance(x, bool):
        raise ConfigError(f"{where}: expected a number, got {x!r}")
    try:
        return float(x)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number, got {x!r}") from None


def _integer(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(f"{where}: expected an integer, got {x!r}")
    return x


def _entry(x, where: str, allow_t: bool = True) -> ComplexExpr:
    try:
        e = ComplexExpr.parse(x)
    except ParseError as err:
        raise ConfigError(f"{where}: cannot parse {x!r}: {err}") from None
    if not allow_t and e.depends_on("t"):
        raise ConfigError(f"{where}: {x!r} may depend on eps only")
    return e


def _vector(x, m: int, where: str, allow_t: bool = True) -> tuple[ComplexExpr, ...]:
    if not isinstance(x, list) or len(x) != m:
        raise ConfigError(f"{where}: expected a list of {m} entries")
    return tuple(_entry(e, f"{where}[{i}]", allow_t) for i, e in enumerate(x))


def _matrix(x, m: int, where: str, allow_t: bool = True):
    if not isinstance(x, list) or len(x) != m:
        raise ConfigError(f"{where}: expected {m} rows")
    return tuple(_vector(row, m, f"{where}[{i}]", allow_t) for i, row in enumerate(x))


def _terms(items, m: int, n: int, grid: Grid, where: str):
    if not isinstance(items, list) or not items:
        raise ConfigError(f"{where}: expected a non-empty list of terms")
    parts = {"B0": [], "B1": []}
    for i, item in enumerate(items):
        w = f"{where}[{i}]"
        if not isinstance(item, dict):
            raise ConfigError(f"{w}: expected a mapping")
        kind = _require(item, "kind", w)
        order = _integer(item.get("order", 0), f"{w}.order")
        if not 0 <= order <= n - 1:
            raise ConfigError(f"{w}.order: must lie in 0..{n - 1}")
        part = item.get("part", "B0")
        if part not in parts:
            raise ConfigError(f"{w}.part: must be B0 or B1")
        if kind == "point":
            node = _number(_require(item, "node", w), f"{w}.node")
            try:
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always")
                    node, _ = snap_to_grid(grid, node)
                for c in caught:
                    log.warning("%s: %s", w, c.message)
            except OffGridError as err:
                raise ConfigError(f"{w}.node: {err}") from None
            coef = _matrix(_require(item, "coefficient", w), m, f"{w}.coefficient", allow_t=False)
            parts[part].append(PointSpec(node, order, coef))
        elif kind == "integral":
            kernel = _matrix(_require(item, "kernel", w), m, f"{w}.kernel")
            parts[part].append(IntegralSpec(kernel, order))
        else:
            raise ConfigError(f"{w}.kind: must be 'point' or 'integral', got {kind!r}")
    return tuple(parts["B0"]), tuple(parts["B1"])


def _schedule(sweep: dict, where: str) -> tuple[float, ...]:
    if "schedule" in sweep:
        sched = sweep["schedule"]
        if not isinstance(sched, list):
            raise ConfigError(f"{where}.schedule: expected a list")
        return tuple(_number(e, f"{where}.schedule[{i}]") for i, e in enumerate(sched))
    if "k_range" in sweep:
        kr = sweep["k_range"]
        if not isinstance(kr, list) or len(kr) != 2:
            raise ConfigError(f"{where}.k_range: expected [k_first, k_last]")
        k0, k1 = (_integer(k, f"{where}.k_range") for k in kr)
        return tuple(2.0**-k for k in range(k0, k1 + 1))
    return DEFAULT_SCHEDULE


def parse_config(
    raw: dict,
    source: str = "<config>",
    grid_N: int | None = None,
    schedule: tuple[float, ...] | None = None,
    r_max: float | None = None,
) -> Config:
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise ConfigError(f"{source}: unknown keys {sorted(unknown)}")
    interval = _require(raw, "interval", source)
    a = _number(_require(interval, "a", "interval"), "interval.a")
    b = _number(_require(interval, "b", "interval"), "interval.b")
    dims = _require(raw, "dims", source)
    m = _integer(_require(dims, "m", "dims"), "dims.m")
    n = _integer(_require(dims, "n", "dims"), "dims.n")
    if not 1 <= m <= MAX_M:
        raise ConfigError(f"dims.m: must lie in 1..{MAX_M}")
    if n < 1:
        raise ConfigError("dims.n: must be >= 1")
    N = grid_N if grid_N is not None else _integer(_require(raw.get("grid", {}), "N", "grid"), "grid.N")
    if N < 2 or N % 2:
        raise ConfigError(f"grid.N: must be even and >= 2 (Simpson quadrature), got {N}")
    if not a < b:
        raise ConfigError("interval: need a < b")
    grid = Grid(a, b, N)

    A = _matrix(_require(raw, "A", source), m, "A")
    f = _vector(raw.get("f", ["0"] * m), m, "f")
    c = _vector(_require(raw, "c", source), m, "c", allow_t=False)
    B0, B1 = _terms(_require(raw, "boundary", source), m, n, grid, "boundary")
    if not B0:
        raise ConfigError("boundary: B0 needs at least one term")

    zero = raw.get("zero") or {}
    if not isinstance(zero, dict) or set(zero) - {"A", "f", "c", "boundary"}:
        raise ConfigError("zero: may only override A, f, c, boundary")
    zero_A = _matrix(zero["A"], m, "zero.A") if "A" in zero else None
    zero_f = _vector(zero["f"], m, "zero.f") if "f" in zero else None
    zero_c = _vector(zero["c"], m, "zero.c", allow_t=False) if "c" in zero else None
    zero_B = None
    if "boundary" in zero:
        zB0, zB1 = _terms(zero["boundary"], m, n, grid, "zero.boundary")
        if zB1:
            raise ConfigError("zero.boundary: B1 terms are meaningless at eps = 0")
        zero_B = zB0

    sweep = raw.get("sweep") or {}
    if not isinstance(sweep, dict):
        raise ConfigError("sweep: expected a mapping")
    sched = schedule if schedule is not None else _schedule(sweep, "sweep")
    if not sched:
        raise ConfigError("sweep: empty schedule")
    eps0 = _number(sweep.get("eps0", 1.0), "sweep.eps0")
    rmax = r_max if r_max is not None else _number(sweep.get("r_max", 10.0), "sweep.r_max")

    output = raw.get("output") or {}
    precision = _integer(output.get("precision", 12), "output.precision")
    csv = output.get("csv")

    try:
        fam = Family(
            a, b, m, n, N, A, f, c, B0, B1,
            eps0=eps0, schedule=tuple(sched), r_max=rmax,
            zero_A=zero_A, zero_f=zero_f, zero_c=zero_c, zero_B=zero_B,
        )
    except ValueError as err:
        raise ConfigError(f"{source}: {err}") from None
    return Config(fam, csv, precision, source)


def load_config(path, **overrides) -> Config:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from None
    except yaml.YAMLError as err:
        raise ConfigError(f"{path}: invalid YAML: {err}") from None
    return parse_config(raw, str(path), **overrides)
