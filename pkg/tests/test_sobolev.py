import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sobolev_bvp.expr import ComplexExpr
from sobolev_bvp.sobolev import (
    Grid,
    JetFunction,
    MatrixJet,
    jet_axpy,
    jet_multiply,
    matrix_sobolev_norm,
    sobolev_norm,
    sup_norm,
)


def jet(grid, *srcs, n=2, eps=0.0):
    return JetFunction.from_exprs(grid, [ComplexExpr.parse(s) for s in srcs], n, eps)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(1.0, 0.0, 10)
    with pytest.raises(ValueError):
        Grid(0.0, 1.0, 1)
    g = Grid(0.0, 2.0, 4)
    np.testing.assert_allclose(g.nodes, [0, 0.5, 1, 1.5, 2])
    assert np.all(np.diff(g.nodes) > 0)
    assert g.node_index(1.5) == 3
    with pytest.raises(ValueError):
        g.node_index(1.2)


def test_jet_shape_and_finiteness_invariants():
    g = Grid(0, 1, 4)
    with pytest.raises(ValueError):
        JetFunction(g, np.zeros((1, 2, 4)))
    with pytest.raises(ValueError):
        JetFunction(g, np.full((1, 2, 5), np.nan))
    with pytest.raises(ValueError):
        MatrixJet(g, np.zeros((2, 1, 2, 5)))


# ----------------------------------------------------------------- sup_norm


def test_sup_norm_of_zero():
    assert sup_norm(JetFunction.zeros(Grid(0, 1, 10), 2, 1), 0) == 0.0


@pytest.mark.parametrize("N", [2, 7, 100])
def test_sup_norm_of_identity_function(N):
    assert sup_norm(jet(Grid(0, 1, N), "t"), 0) == 1.0


def test_sup_norm_of_sine_on_half_period():
    # max is 1 at pi/2; uniform sampling loses at most (b-a)^2 ||y''|| / (8 N^2)
    N = 1000
    value = sup_norm(jet(Grid(0, math.pi, N), "sin(t)"), 0)
    assert abs(value - 1.0) <= max(math.pi**2 / (8 * N**2), 5e-6)


def test_sup_norm_uses_modulus_for_complex_entries():
    g = Grid(0, 1, 2)
    y = JetFunction.from_exprs(g, [ComplexExpr.parse(["3", "4"])], 0)
    assert sup_norm(y, 0) == 5.0


def test_sup_norm_order_out_of_range():
    with pytest.raises(ValueError):
        sup_norm(jet(Grid(0, 1, 4), "t", n=1), 2)


# ------------------------------------------------------------- sobolev_norm


def test_sobolev_norm_of_identity_function():
    assert sobolev_norm(jet(Grid(0, 1, 10), "t", n=1), 1) == 2.0


def test_sobolev_norm_of_constant():
    assert sobolev_norm(jet(Grid(0, 1, 10), "-2.5", n=3), 3) == 2.5


def test_sobolev_norm_of_decaying_exponential():
    # each of e^-t, -e^-t, e^-t has sup 1 at the node t = 0
    assert sobolev_norm(jet(Grid(0, 1, 50), "exp(-t)"), 2) == pytest.approx(3.0, abs=1e-9)


def test_sobolev_norm_order_out_of_range():
    with pytest.raises(ValueError):
        sobolev_norm(jet(Grid(0, 1, 4), "t", n=1), 2)


def test_grid_refinement_converges_quadratically():
    # sup of sin(3t) + cos(5t) on [0, 1] is attained between nodes
    ts = np.linspace(0, 1, 2_000_001)
    exact = np.max(np.abs(np.sin(3 * ts) + np.cos(5 * ts)))
    errs = []
    for N in (10, 20, 40, 80):
        errs.append(exact - sup_norm(jet(Grid(0, 1, N), "sin(3*t) + cos(5*t)", n=0), 0))
    assert all(e >= -1e-12 for e in errs)
    bound = [34.0 / (8 * N**2) for N in (10, 20, 40, 80)]  # ||y''|| <= 9 + 25
    assert all(e <= b for e, b in zip(errs, bound))


# ------------------------------------------------------ matrix_sobolev_norm


def test_matrix_norm_identity_and_zero():
    g = Grid(0, 1, 8)
    assert matrix_sobolev_norm(MatrixJet.identity(g, 3, 2), 0) == 1.0
    assert matrix_sobolev_norm(MatrixJet(g, np.zeros((2, 2, 3, 9))), 2) == 0.0


@pytest.mark.parametrize("eps", [0.5, 0.125, 1e-3])
def test_matrix_norm_of_scaled_identity_ramp(eps):
    g = Grid(0, 1, 16)
    srcs = [["eps*t", "0"], ["0", "eps*t"]]
    A = MatrixJet.from_exprs(g, [[ComplexExpr.parse(s) for s in row] for row in srcs], 1, eps)
    assert matrix_sobolev_norm(A, 1) == pytest.approx(2 * eps, rel=1e-15)


# ------------------------------------------------------------------ axpy


def test_axpy_cases():
    g = Grid(0, 1, 6)
    x, y = jet(g, "t"), jet(g, "t")
    np.testing.assert_array_equal(jet_axpy(0.0, x, y).data, y.data)
    assert sobolev_norm(jet_axpy(1.0, x, -x), 2) == 0.0
    np.testing.assert_allclose(jet_axpy(2.0, x, y).data, jet(g, "3*t").data)
    with pytest.raises(ValueError):
        jet_axpy(1.0, x, jet(g, "t", n=1))


# -------------------------------------------------------------- multiply


def test_multiply_identity_and_zero():
    g = Grid(0, 1, 6)
    y = jet(g, "sin(t)", "t^2")
    np.testing.assert_allclose(jet_multiply(MatrixJet.identity(g, 2, 2), y).data, y.data)
    zero = MatrixJet(g, np.zeros((2, 2, 3, 7)))
    assert sobolev_norm(jet_multiply(zero, y), 2) == 0.0


def test_multiply_leibniz_on_polynomials():
    g = Grid(0, 1, 6)
    A = MatrixJet(g, jet(g, "t").data[np.newaxis])
    prod = jet_multiply(A, jet(g, "t"))
    t = g.nodes
    np.testing.assert_allclose(prod.data[0], [t**2, 2 * t, np.full_like(t, 2.0)], atol=1e-15)


def test_multiply_matches_exact_product_jet():
    g = Grid(0.2, 1.7, 30)
    u, v = jet(g, "exp(-t)*cos(t)", n=4), jet(g, "log(1 + t^2)", n=4)
    np.testing.assert_allclose(
        jet_multiply(u, v).data, jet(g, "exp(-t)*cos(t)*log(1 + t^2)", n=4).data, rtol=1e-12, atol=1e-13
    )


def test_multiply_shape_mismatch():
    g = Grid(0, 1, 6)
    with pytest.raises(ValueError):
        jet_multiply(MatrixJet.identity(g, 2, 2), jet(g, "t"))
    with pytest.raises(ValueError):
        jet_multiply(jet(g, "t", "t"), jet(g, "t", "t"))


# ------------------------------------------------------------ properties

G = Grid(0.0, 1.0, 8)


def jets(n_max=3, m=1):
    return st.integers(0, n_max).flatmap(
        lambda n: arrays(np.float64, (m, n + 1, G.N + 1), elements=st.floats(-1e3, 1e3)).map(lambda d: JetFunction(G, d))
    )


@given(jets(), st.floats(-10, 10))
@settings(max_examples=200, deadline=None)
def test_norm_definiteness_and_homogeneity(y, alpha):
    nrm = sobolev_norm(y, y.n)
    assert (nrm == 0) == bool(np.all(y.data == 0))
    assert sobolev_norm(alpha * y, y.n) == pytest.approx(abs(alpha) * nrm, rel=1e-12, abs=1e-300)


@given(st.integers(0, 3).flatmap(lambda n: st.tuples(*[arrays(np.float64, (2, n + 1, G.N + 1), elements=st.floats(-1e3, 1e3))] * 2)))
@settings(max_examples=200, deadline=None)
def test_triangle_inequality(pair):
    x, y = (JetFunction(G, d) for d in pair)
    n = x.n
    assert sobolev_norm(x + y, n) <= sobolev_norm(x, n) + sobolev_norm(y, n) * (1 + 1e-12) + 1e-9


@given(st.integers(0, 3).flatmap(lambda n: st.tuples(*[arrays(np.float64, (1, n + 1, G.N + 1), elements=st.floats(-100, 100))] * 2)))
@settings(max_examples=300, deadline=None)
def test_product_is_submultiplicative_with_constant_two_to_the_n(pair):
    u, v = (JetFunction(G, d) for d in pair)
    n = u.n
    lhs = sobolev_norm(jet_multiply(u, v), n)
    assert lhs <= 2**n * sobolev_norm(u, n) * sobolev_norm(v, n) * (1 + 1e-12) + 1e-12
