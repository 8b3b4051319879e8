"""Lagrangians and variational problems with variable-order derivatives.

A Lagrangian is an expression in ``t, q, d1..dn, e1..em`` where ``di``
stands for the left Caputo derivative of ``q`` of order ``alpha_i`` and
``ei`` for the right Caputo derivative of order ``beta_i``. Its partial
derivatives are taken symbolically once, at construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import dsl
from .grid import Grid, SampledFunction
from .operators import interpolant_caputo_matrix
from .varorder import OrderFunction, require_valid

__all__ = [
    "ProblemError",
    "Lagrangian",
    "VariationalProblem",
    "SymmetryGenerator",
    "FractionalState",
    "fractional_state",
    "caputo_matrices",
]


class ProblemError(ValueError):
    """Inconsistent problem data."""


def _names(prefix: str, count: int) -> tuple[str, ...]:
    return tuple(f"{prefix}{i}" for i in range(1, count + 1))


@dataclass(frozen=True)
class Lagrangian:
    expr: dsl.Expr
    num_left: int = 1
    num_right: int = 1
    dq: dsl.Expr = field(init=False, repr=False)
    dd: tuple = field(init=False, repr=False)
    de: tuple = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.num_left < 0 or self.num_right < 0 or self.num_left + self.num_right < 1:
            raise ProblemError("a Lagrangian needs at least one fractional derivative slot")
        unknown = dsl.free_vars(self.expr) - set(self.variables)
        if unknown:
            raise ProblemError(f"Lagrangian uses undeclared variables {sorted(unknown)}")
        object.__setattr__(self, "dq", dsl.differentiate(self.expr, "q"))
        object.__setattr__(self, "dd", tuple(dsl.differentiate(self.expr, v) for v in self.left_names))
        object.__setattr__(self, "de", tuple(dsl.differentiate(self.expr, v) for v in self.right_names))

    @classmethod
    def from_string(cls, src: str, num_left: int = 1, num_right: int = 1) -> Lagrangian:
        names = ("t", "q") + _names("d", num_left) + _names("e", num_right)
        return cls(dsl.parse(src, names), num_left, num_right)

    @property
    def left_names(self) -> tuple[str, ...]:
        return _names("d", self.num_left)

    @property
    def right_names(self) -> tuple[str, ...]:
        return _names("e", self.num_right)

    @property
    def variables(self) -> tuple[str, ...]:
        return ("t", "q") + self.left_names + self.right_names


@dataclass(frozen=True)
class SymmetryGenerator:
    """Infinitesimal generator ``xi(t, q)`` of ``q -> q + eps * xi(t, q)``."""

    xi: dsl.Expr

    @classmethod
    def from_string(cls, src: str) -> SymmetryGenerator:
        return cls(dsl.parse(src, ("t", "q")))

    def along(self, q: SampledFunction) -> SampledFunction:
        vals = dsl.evaluate(self.xi, {"t": q.grid.nodes, "q": q.values})
        return SampledFunction(q.grid, np.broadcast_to(vals, q.values.shape))


@dataclass(frozen=True)
class VariationalProblem:
    """Extremize ``int_a^b L(t, q, D_left q, D_right q) dt`` with fixed endpoints."""

    a: float
    b: float
    qa: float
    qb: float
    alphas: tuple
    betas: tuple
    lagrangian: Lagrangian

    def __post_init__(self) -> None:
        if not self.a < self.b:
            raise ProblemError(f"need a < b, got [{self.a}, {self.b}]")
        object.__setattr__(self, "alphas", tuple(self.alphas))
        object.__setattr__(self, "betas", tuple(self.betas))
        if len(self.alphas) != self.lagrangian.num_left:
            raise ProblemError(
                f"{len(self.alphas)} left orders for {self.lagrangian.num_left} left slots"
            )
        if len(self.betas) != self.lagrangian.num_right:
            raise ProblemError(
                f"{len(self.betas)} right orders for {self.lagrangian.num_right} right slots"
            )
        for o in self.alphas + self.betas:
            if not isinstance(o, OrderFunction):
                raise ProblemError(f"expected OrderFunction, got {type(o).__name__}")

    def validate(self, grid: Grid) -> None:
        for o in self.alphas + self.betas:
            require_valid(o, grid, "derivative")

    def straight_line(self, grid: Grid) -> SampledFunction:
        s = (grid.nodes - self.a) / (self.b - self.a)
        vals = self.qa + (self.qb - self.qa) * s
        vals[0], vals[-1] = self.qa, self.qb
        return SampledFunction(grid, vals)

    def check_boundary(self, q: SampledFunction, tol: float = 1e-12) -> None:
        if q.grid.a != self.a or q.grid.b != self.b:
            raise ProblemError("q is sampled on a different interval")
        if abs(q.values[0] - self.qa) > tol or abs(q.values[-1] - self.qb) > tol:
            raise ProblemError(
                f"boundary mismatch: q(a)={q.values[0]!r} (want {self.qa!r}), "
                f"q(b)={q.values[-1]!r} (want {self.qb!r})"
            )


@dataclass(frozen=True)
class FractionalState:
    """``q`` and its Caputo derivatives on a grid, with the partials of L there."""

    q: SampledFunction
    left: tuple  # left Caputo derivatives, one per alpha_i
    right: tuple  # right Caputo derivatives, one per beta_i

    def bindings(self) -> dict:
        env = {"t": self.q.grid.nodes, "q": self.q.values}
        for i, d in enumerate(self.left, start=1):
            env[f"d{i}"] = d.values
        for i, e in enumerate(self.right, start=1):
            env[f"e{i}"] = e.values
        return env

    def _eval(self, expr: dsl.Expr) -> SampledFunction:
        vals = dsl.evaluate(expr, self.bindings())
        return SampledFunction(self.q.grid, np.broadcast_to(vals, self.q.values.shape))

    def lagrangian_values(self, lag: Lagrangian) -> SampledFunction:
        return self._eval(lag.expr)

    def partial_q(self, lag: Lagrangian) -> SampledFunction:
        return self._eval(lag.dq)

    def partials_left(self, lag: Lagrangian) -> list[SampledFunction]:
        return [self._eval(e) for e in lag.dd]

    def partials_right(self, lag: Lagrangian) -> list[SampledFunction]:
        return [self._eval(e) for e in lag.de]


def fractional_state(problem: VariationalProblem, q: SampledFunction) -> FractionalState:
    """Caputo derivatives of the piecewise-linear interpolant of ``q``."""
    left, right = caputo_matrices(problem, q.grid)
    return FractionalState(
        q,
        tuple(SampledFunction(q.grid, C @ q.values) for C in left),
        tuple(SampledFunction(q.grid, C @ q.values) for C in right),
    )


def caputo_matrices(problem: VariationalProblem, grid: Grid) -> tuple[list, list]:
    """Dense matrices mapping node values of ``q`` to each Caputo derivative.

    Raw node values carry no derivative information, so ``q`` is read as
    its piecewise-linear interpolant (see
    :func:`varfrac.operators.interpolant_caputo_matrix`).
    """
    problem.validate(grid)
    left = [interpolant_caputo_matrix(grid, o, "left") for o in problem.alphas]
    right = [interpolant_caputo_matrix(grid, o, "right") for o in problem.betas]
    return left, right
