"""Variable-order fractional operators, variational problems and Noether residuals."""

from .grid import Grid, SampledFunction, make_uniform_grid, sample
from .operators import (
    OperatorKind,
    left_caputo,
    left_rl_derivative,
    left_rl_integral,
    right_caputo,
    right_rl_derivative,
    right_rl_integral,
    sample_expression,
)
from .problem import Lagrangian, SymmetryGenerator, VariationalProblem
from .variational import SolverOptions, el_residual, evaluate_functional, solve_direct
from .varorder import OrderFunction, validate_order

__all__ = [
    "Grid",
    "SampledFunction",
    "make_uniform_grid",
    "sample",
    "OperatorKind",
    "left_caputo",
    "left_rl_derivative",
    "left_rl_integral",
    "right_caputo",
    "right_rl_derivative",
    "right_rl_integral",
    "sample_expression",
    "Lagrangian",
    "SymmetryGenerator",
    "VariationalProblem",
    "SolverOptions",
    "el_residual",
    "evaluate_functional",
    "solve_direct",
    "OrderFunction",
    "validate_order",
]
