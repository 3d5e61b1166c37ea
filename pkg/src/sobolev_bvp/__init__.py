"""Parametrized linear boundary-value problems y' + A(t; eps) y = f(t; eps), B(eps) y = c(eps)
in Sobolev spaces W^n_inf, with eps -> 0+ convergence diagnostics."""

from .boundary import BoundaryOperator, IntegralTerm, PointTerm, characteristic_matrix, nonsingularity_report
from .bvp import Problem, SingularCharacteristicMatrix, SolveResult, homogeneous_kernel_dim, residual_norms, solve
from .expr import ComplexExpr, DomainError, ParseError, differentiate, jet_eval, parse
from .ode import BlowUpError, CoefficientProvider, cauchy_solve, fundamental_matrix
from .parametric import Family, instantiate, sweep
from .sobolev import Grid, JetFunction, MatrixJet, matrix_sobolev_norm, sobolev_norm, sup_norm

__version__ = "0.1.0"
