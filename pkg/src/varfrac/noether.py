"""Product-rule brackets and conservation-law residuals.

For an order ``gamma`` the two brackets are

    minus[f, g] = -f * (right RL derivative of g) + g * (left Caputo of f)
    plus[f, g]  = -f * (left RL derivative of g)  + g * (right Caputo of f)

With ``f = 1`` the Caputo term vanishes identically, which is how the
Euler-Lagrange residual is written in bracket form. Along an extremal of a
problem invariant under ``q -> q + eps * xi(t, q)`` the sum of brackets of
``xi`` with the partials of ``L`` vanishes; :func:`noether_residual`
evaluates that sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dsl
from .grid import Grid, SampledFunction, differentiate, make_uniform_grid
from .operators import (
    left_caputo,
    left_rl_derivative,
    right_caputo,
    right_rl_derivative,
    sample_expression,
)
from .problem import SymmetryGenerator, VariationalProblem, fractional_state
from .varorder import OrderFunction

__all__ = [
    "bracket_minus",
    "bracket_plus",
    "classical_limit_probe",
    "invariance_residual",
    "noether_residual",
    "ResidualSummary",
    "summarize",
    "interior_max",
]

# residual norms skip two nodes at each end, where difference quotients of
# the complement integrals are polluted by the endpoint singularity
INTERIOR_SKIP = 2


def bracket_minus(f: SampledFunction, fprime: SampledFunction | None,
                  g: SampledFunction, gamma: OrderFunction) -> SampledFunction:
    """``-f * D_right^gamma g + g * C_left^gamma f`` node-wise."""
    rl = right_rl_derivative(g, gamma)
    cap = left_caputo(f, fprime, gamma)
    return SampledFunction(f.grid, -f.values * rl.values + g.values * cap.values)


def bracket_plus(f: SampledFunction, fprime: SampledFunction | None,
                 g: SampledFunction, gamma: OrderFunction) -> SampledFunction:
    """``-f * D_left^gamma g + g * C_right^gamma f`` node-wise."""
    rl = left_rl_derivative(g, gamma)
    cap = right_caputo(f, fprime, gamma)
    return SampledFunction(f.grid, -f.values * rl.values + g.values * cap.values)


def interior_max(sf: SampledFunction, skip: int = INTERIOR_SKIP) -> float:
    """Max-norm over nodes ``skip .. N - skip``."""
    v = sf.values[skip : len(sf.values) - skip]
    return float(np.max(np.abs(v))) if v.size else 0.0


def classical_limit_probe(f, g, gammas=(0.7, 0.8, 0.9), grid: Grid | None = None,
                          skip: int = INTERIOR_SKIP) -> list[float]:
    """Distance of ``minus[f, g]`` from ``(f g)'`` for constant orders.

    ``f`` and ``g`` are expressions in ``t``; the reference ``(f g)'`` and
    the derivative of ``f`` are computed symbolically. Returns the max-norm
    of the difference over nodes ``skip .. N - skip`` for each order.
    """
    grid = grid or make_uniform_grid(0.1, 1.0, 1024)
    fe = f if isinstance(f, dsl.Expr) else dsl.parse(f, ("t",))
    ge = g if isinstance(g, dsl.Expr) else dsl.parse(g, ("t",))
    fs, fps = sample_expression(fe, grid, with_derivative=True)
    gs = sample_expression(ge, grid)
    prod = dsl.differentiate(dsl.BinOp("*", fe, ge), "t")
    ref = sample_expression(prod, grid)
    out = []
    for gam in gammas:
        gam = float(gam)
        # the bound only has to admit gamma itself
        n = max(2, int(np.floor(1.0 / (1.0 - gam))) + 1)
        order = OrderFunction.constant_order(gam, bound_n=n)
        dev = bracket_minus(fs, fps, gs, order) - ref
        out.append(interior_max(dev, skip))
    return out


def _xi_and_derivative(xi: SymmetryGenerator, q: SampledFunction):
    x = xi.along(q)
    return x, differentiate(x)


def invariance_residual(problem: VariationalProblem, q: SampledFunction,
                        xi: SymmetryGenerator) -> SampledFunction:
    """Infinitesimal invariance condition evaluated along ``q``.

    ``d_q L * xi + sum_i d_{d_i} L * C_left^{alpha_i} xi
    + sum_i d_{e_i} L * C_right^{beta_i} xi`` with ``xi = xi(t, q(t))``.
    """
    lag = problem.lagrangian
    st = fractional_state(problem, q)
    x, xp = _xi_and_derivative(xi, q)
    res = st.partial_q(lag).values * x.values
    for p, alpha in zip(st.partials_left(lag), problem.alphas):
        res = res + p.values * left_caputo(x, xp, alpha).values
    for p, beta in zip(st.partials_right(lag), problem.betas):
        res = res + p.values * right_caputo(x, xp, beta).values
    return SampledFunction(q.grid, res)


def noether_residual(problem: VariationalProblem, q: SampledFunction,
                     xi: SymmetryGenerator) -> SampledFunction:
    """Sum of brackets of ``xi(t, q(t))`` with the partials of ``L`` along ``q``."""
    lag = problem.lagrangian
    st = fractional_state(problem, q)
    x, xp = _xi_and_derivative(xi, q)
    res = np.zeros(len(q.grid))
    for p, alpha in zip(st.partials_left(lag), problem.alphas):
        res = res + bracket_minus(x, xp, p, alpha).values
    for p, beta in zip(st.partials_right(lag), problem.betas):
        res = res + bracket_plus(x, xp, p, beta).values
    return SampledFunction(q.grid, res)


@dataclass(frozen=True)
class ResidualSummary:
    max_norm: float
    l2_norm: float
    N: int

    def as_dict(self) -> dict:
        return {"max_norm": self.max_norm, "l2_norm": self.l2_norm, "N": self.N}


def summarize(res: SampledFunction, skip: int = INTERIOR_SKIP) -> ResidualSummary:
    """Interior max-norm and interior discrete L2 norm of a residual."""
    v = res.values[skip : len(res.values) - skip]
    l2 = float(np.sqrt(res.grid.h * np.sum(v * v)))
    return ResidualSummary(interior_max(res, skip), l2, res.grid.n)
