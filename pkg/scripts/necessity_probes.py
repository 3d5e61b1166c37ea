"""Each limit condition broken in turn: condition reports and what the sweep does.

Also runs the operator convergence check (forward and inverse strong
convergence on monomial probes) for every fixture that has a regular limit.
"""

from pathlib import Path

from sobolev_bvp import bvp, parametric
from sobolev_bvp.config import load_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
NAMES = ["o1.yaml", "multipoint_integral.yaml", "violate_zero.yaml", "violate_I.yaml", "violate_II.yaml"]


def main():
    for name in NAMES:
        fam = load_config(CONFIGS / name).family
        print(f"== {name}")
        for check in (parametric.check_condition_zero, parametric.check_condition_I, parametric.check_condition_II):
            print("  " + check(fam).format().splitlines()[0])
        try:
            rep = parametric.sweep(fam)
        except bvp.SingularCharacteristicMatrix as err:
            print(f"  sweep: {err}")
            continue
        errs = [r.error for r in rep.rows]
        print(f"  sweep error {errs[0]:.3e} -> {errs[-1]:.3e}; {rep.verdict_line(4)}")
        oc = parametric.operator_convergence_check(fam)
        print(f"  operator convergence: forward {'pass' if oc.forward_trend.passed else 'fail'}, "
              f"inverse {'pass' if oc.inverse_trend.passed else 'fail'}, equivalence held: {oc.equivalence_held}")


if __name__ == "__main__":
    main()
