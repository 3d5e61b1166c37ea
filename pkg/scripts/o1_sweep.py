"""Error vs discrepancy along eps -> 0 for a family config (default: O1).

    python3 scripts/o1_sweep.py [CONFIG] [--csv out.csv]
"""

import argparse
import time
from pathlib import Path

from sobolev_bvp import parametric
from sobolev_bvp.config import load_config

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", nargs="?", default=ROOT / "configs" / "o1.yaml", type=Path)
    ap.add_argument("--csv", type=Path, default=None)
    args = ap.parse_args()

    fam = load_config(args.config).family
    start = time.perf_counter()
    rep = parametric.sweep(fam)
    elapsed = time.perf_counter() - start

    print(f"{'eps':>12} {'error':>14} {'discrepancy':>14} {'ratio':>10}")
    for r in rep.rows:
        print(f"{r.eps:12.6g} {r.error:14.6e} {r.discrepancy:14.6e} {r.ratio:10.5f}")
    print(f"order {rep.order:.4f} (R^2 {rep.order_r2:.5f}); gamma1 {rep.gamma1:.4g}, gamma2 {rep.gamma2:.4g}, "
          f"bracket {rep.bracket:.4f} (r_max {rep.r_max:g}); floor {rep.floor:.3g}")
    print(rep.verdict_line(6))
    print(f"sweep time {elapsed:.2f}s")
    if args.csv:
        args.csv.write_text(rep.to_csv())


if __name__ == "__main__":
    main()
