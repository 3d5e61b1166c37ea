import numpy as np
import pytest

from oracles import poly_string

from sobolev_bvp import parametric
from sobolev_bvp.boundary import point
from sobolev_bvp.bvp import Problem
from sobolev_bvp.ode import CoefficientProvider
from sobolev_bvp.sobolev import Grid, JetFunction


def o1_family(N=2000, **kw):
    """y' + (1 + eps t) y = 0, y(0) = 1 on [0, 1]."""
    kw.setdefault("r_max", 3.0)
    return parametric.Family.from_strings(
        0, 1, 2, [["1 + eps*t"]], ["0"], ["1"], [("point", 0.0, 0, [["1"]])], N=N, **kw
    )


def o1_exact_jet(grid: Grid, eps: float) -> JetFunction:
    """Closed-form jet of exp(-t - eps t^2 / 2) up to order 2."""
    t = grid.nodes
    y = np.exp(-t - eps * t**2 / 2)
    g = 1 + eps * t
    return JetFunction(grid, np.array([[y, -g * y, (g**2 - eps) * y]]))


def multipoint_problem(case, N=1000):
    """The package-side problem for an oracle case (same A, B, f, c)."""
    m = case["m"]
    A = [[poly_string(case["coefs"][:, r, c]) for c in range(m)] for r in range(m)]
    f = [repr(float(x)) for x in case["f"]]
    B = point(m, 1, case["nodes"][0], case["P"][0])
    for node, Pi in zip(case["nodes"][1:], case["P"][1:]):
        B = B + point(m, 1, node, Pi)
    return Problem(Grid(0, 1, N), CoefficientProvider.from_strings(A, f, 0.0, 1), B, case["c"])


@pytest.fixture
def rng():
    return np.random.default_rng(20181101)
