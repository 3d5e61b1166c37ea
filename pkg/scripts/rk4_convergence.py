"""Observed order of the fixed-step RK4 fundamental matrix on closed-form cases."""

import math

import numpy as np

from sobolev_bvp.ode import CoefficientProvider, fundamental_matrix, integration_error_estimate
from sobolev_bvp.sobolev import Grid

CASES = [
    ("y' + (1 + 0.5 t) y = 0", [["1 + 0.5*t"]], (0.0, 1.0), lambda t: np.exp(-t - 0.25 * t**2)[None, None]),
    ("rotation", [["0", "1"], ["-1", "0"]], (0.0, math.pi),
     lambda t: np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])),
    ("y' + 5 y = 0 (stiffer)", [["5"]], (0.0, 1.0), lambda t: np.exp(-5 * t)[None, None]),
]


def main():
    for name, A, (a, b), exact in CASES:
        coeffs = CoefficientProvider.from_strings(A, None, 0.0, 1)
        print(name)
        print(f"  {'N':>6} {'max error':>12} {'ratio':>8} {'richardson':>12}")
        prev = None
        for N in (50, 100, 200, 400, 800, 1600):
            g = Grid(a, b, N)
            err = float(np.max(np.abs(fundamental_matrix(coeffs, g).data[:, :, 0] - exact(g.nodes))))
            ratio = "" if prev is None else f"{prev / err:8.2f}"
            print(f"  {N:6d} {err:12.4e} {ratio:>8} {integration_error_estimate(coeffs, g):12.4e}")
            prev = err


if __name__ == "__main__":
    main()
