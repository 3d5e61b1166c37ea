"""Command line front end: ``sobolev-bvp {solve,sweep,check,kernel} CONFIG``.

Exit codes: 0 success, 2 singular characteristic matrix, 3 config/parse
error, 4 ODE blow-up, 5 condition or two-sided bracket failure.
"""

from __future__ import annotations

import argparse
import io
import logging
import sys
from pathlib import Path

from . import bvp, parametric
from .config import ConfigError, load_config
from .expr import DomainError
from .ode import BlowUpError, integration_error_estimate
from .sobolev import sobolev_norm

EXIT_OK = 0
EXIT_SINGULAR = 2
EXIT_CONFIG = 3
EXIT_BLOWUP = 4
EXIT_FAILED = 5

log = logging.getLogger("sobolev_bvp")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _schedule_arg(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", type=Path, help="YAML problem/family file")
    common.add_argument("--eps", type=float, default=0.0, help="parameter value for solve/kernel")
    common.add_argument("--out", type=Path, default=None, help="CSV output path (overrides output.csv)")
    common.add_argument("--schedule", type=_schedule_arg, default=None, help="comma-separated eps values, decreasing")
    common.add_argument("--rmax", type=float, default=None, help="allowed ratio_max / ratio_min")
    common.add_argument("--grid-N", dest="grid_N", type=int, default=None, help="override grid.N")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="sobolev-bvp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("solve", parents=[common], help="solve at one eps and write the node table")
    sub.add_parser("sweep", parents=[common], help="error vs discrepancy along the schedule")
    sub.add_parser("check", parents=[common], help="check conditions (0), (I), (II)")
    sub.add_parser("kernel", parents=[common], help="dimension of the homogeneous solution space")
    return parser


def _fmt(x, precision=12) -> str:
    return f"{x:.{precision}g}"


def _complex(z, precision=12) -> str:
    z = complex(z)
    if z.imag == 0:
        return _fmt(z.real, precision)
    return f"{_fmt(z.real, precision)}{'+' if z.imag >= 0 else '-'}{_fmt(abs(z.imag), precision)}j"


def node_table_csv(y, precision: int = 12) -> str:
    """Columns ``t`` then ``y{j}_d{k}_re, y{j}_d{k}_im`` for every component and order."""
    buf = io.StringIO()
    header = ["t"]
    for j in range(y.m):
        for k in range(y.n + 1):
            header += [f"y{j + 1}_d{k}_re", f"y{j + 1}_d{k}_im"]
    buf.write(",".join(header) + "\n")
    t = y.grid.nodes
    for i in range(t.size):
        vals = [t[i]]
        for j in range(y.m):
            for k in range(y.n + 1):
                z = y.data[j, k, i]
                vals += [z.real, z.imag]
        buf.write(",".join(_fmt(v + 0.0, precision) for v in vals) + "\n")
    return buf.getvalue()


def _write(text: str, path: Path | None):
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)
        print(f"wrote {path}")


def cmd_solve(cfg, args) -> int:
    fam = cfg.family
    p = parametric.instantiate(fam, args.eps)
    res = bvp.solve(p)
    prec = cfg.precision
    print(f"eps = {_fmt(args.eps, prec)}  m = {fam.m}  n = {fam.n}  N = {fam.N}  [a, b] = [{fam.a}, {fam.b}]")
    print(f"||y||_(n,inf) = {_fmt(sobolev_norm(res.y, fam.n), prec)}")
    print(f"ode_residual = {_fmt(res.ode_residual, prec)}  boundary_residual = {_fmt(res.boundary_residual, prec)}")
    print(f"det[BY] = {_complex(res.report.det, prec)}  cond_1[BY] = {_fmt(res.report.cond, prec)}")
    print("c_tilde = [" + ", ".join(_complex(z, prec) for z in res.c_tilde) + "]")
    print(f"richardson_indicator = {_fmt(integration_error_estimate(p.coeffs, p.grid), prec)}")
    out = args.out or (Path(cfg.csv) if cfg.csv else None)
    if out is not None:
        _write(node_table_csv(res.y, prec), out)
    return EXIT_OK


def cmd_sweep(cfg, args) -> int:
    report = parametric.sweep(cfg.family)
    out = args.out or (Path(cfg.csv) if cfg.csv else None)
    _write(report.to_csv(cfg.precision), out)
    if out is not None:
        print(report.verdict_line(cfg.precision))
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_check(cfg, args) -> int:
    fam = cfg.family
    reports = [
        parametric.check_condition_zero(fam),
        parametric.check_condition_I(fam),
        parametric.check_condition_II(fam),
    ]
    for r in reports:
        print(r.format())
    print("summary: " + " ".join(f"{r.name}={'pass' if r.passed else 'fail'}" for r in reports))
    if not reports[0].passed:
        return EXIT_SINGULAR
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def cmd_kernel(cfg, args) -> int:
    p = parametric.instantiate(cfg.family, args.eps)
    print(bvp.homogeneous_kernel_dim(p))
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "check": cmd_check, "kernel": cmd_kernel}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config, grid_N=args.grid_N, schedule=args.schedule, r_max=args.rmax)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as err:
        print(f"expression domain error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except bvp.SingularCharacteristicMatrix as err:
        print(f"singular: {err}", file=sys.stderr)
        return EXIT_SINGULAR
    except BlowUpError as err:
        print(f"blow-up: {err}", file=sys.stderr)
        return EXIT_BLOWUP
    except ValueError as err:
        # eps outside [0, eps0), off-grid nodes and similar input problems
        print(f"input error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
