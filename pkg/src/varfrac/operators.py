r"""Variable-order Riemann-Liouville and Caputo operators on uniform grids.

With :math:`\alpha(t, \tau) \in (0, 1)` the six operators are

* left / right RL integrals, kernel :math:`(t-\tau)^{\alpha-1}/\Gamma(\alpha)`
  integrated over :math:`[a, t]`, resp. :math:`(\tau-t)^{\alpha(\tau,t)-1}
  /\Gamma(\alpha(\tau,t))` over :math:`[t, b]`;
* left / right RL derivatives, :math:`\frac{d}{dt}` (resp. :math:`-\frac{d}{dt}`)
  of the complement integral whose kernel uses :math:`1-\alpha`;
* left / right Caputo derivatives, the complement integral applied to
  :math:`f'` (with an extra minus sign on the right).

Every operator is linear, so it is assembled once per ``(grid, order)`` as a
dense lower (left) or upper (right) triangular matrix from the
frozen-exponent product quadrature in :mod:`varfrac.quadrature`. Values at
the degenerate endpoint (``t = a`` for left operators, ``t = b`` for right
ones) are defined as 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from . import dsl
from .grid import (
    Grid,
    GridError,
    SampledFunction,
    differentiate,
    differentiation_matrix,
    sample,
)
from .quadrature import cell_integral_matrix, product_weight_matrix
from .specfun import gamma
from .varorder import OrderFunction, require_valid

__all__ = [
    "OperatorKind",
    "weight_matrix",
    "operator_matrix",
    "left_rl_integral",
    "right_rl_integral",
    "left_rl_derivative",
    "right_rl_derivative",
    "left_caputo",
    "right_caputo",
    "left_complement_integral",
    "right_complement_integral",
    "sample_expression",
    "interpolant_caputo_matrix",
]

Side = Literal["left", "right"]
Family = Literal["rl_integral", "rl_derivative", "caputo"]


@dataclass(frozen=True)
class OperatorKind:
    side: str
    family: str
    order: OrderFunction
    complement: bool | None = None

    def __post_init__(self) -> None:
        if self.side not in ("left", "right"):
            raise ValueError(f"bad side {self.side!r}")
        if self.family not in ("rl_integral", "rl_derivative", "caputo"):
            raise ValueError(f"bad family {self.family!r}")
        expected = self.family != "rl_integral"
        if self.complement is None:
            object.__setattr__(self, "complement", expected)
        elif self.complement != expected:
            raise ValueError(
                f"{self.family} requires complement={expected}, got {self.complement}"
            )

    @property
    def mode(self) -> str:
        return "derivative" if self.complement else "integral"


def _kernel_fns(order: OrderFunction, side: str, complement: bool):
    # the order is evaluated as alpha(t, tau) on the left and alpha(tau, t)
    # on the right, i.e. always with the later time first
    if side == "left":
        def alpha(t, s):
            return np.asarray(order(t, s), dtype=float)
    else:
        def alpha(t, s):
            return np.asarray(order(s, t), dtype=float)

    if order.constant is not None:
        c = order.constant
        e = -c if complement else c - 1.0
        w = 1.0 / gamma(1.0 - c if complement else c)
        return (lambda t, s: e), (lambda t, s: w)

    if complement:
        return (lambda t, s: -alpha(t, s)), (lambda t, s: 1.0 / gamma(1.0 - alpha(t, s)))
    return (lambda t, s: alpha(t, s) - 1.0), (lambda t, s: 1.0 / gamma(alpha(t, s)))


def _build_weight_matrix(grid: Grid, order: OrderFunction, side: str,
                         complement: bool) -> np.ndarray:
    exponent_fn, weight_fn = _kernel_fns(order, side, complement)
    W = product_weight_matrix(grid, side, exponent_fn, weight_fn)
    W.setflags(write=False)
    return W


_cached_weight_matrix = lru_cache(maxsize=32)(_build_weight_matrix)


def weight_matrix(grid: Grid, order: OrderFunction, side: str,
                  complement: bool) -> np.ndarray:
    """Read-only matrix of the left/right (complement) fractional integral.

    ``complement=False`` gives the RL integral of order ``alpha``;
    ``complement=True`` the integral of order ``1 - alpha`` that underlies
    both derivative families.
    """
    try:
        return _cached_weight_matrix(grid, order, side, complement)
    except TypeError:  # order built from an unhashable callable
        return _build_weight_matrix(grid, order, side, complement)


def _build_interpolant_caputo(grid: Grid, order: OrderFunction, side: str) -> np.ndarray:
    exponent_fn, weight_fn = _kernel_fns(order, side, True)
    M = cell_integral_matrix(grid, side, exponent_fn, weight_fn)
    n = grid.n
    fwd = (np.eye(n, n + 1, 1) - np.eye(n, n + 1)) / grid.h
    C = M @ fwd
    if side == "right":
        C = -C
    C.setflags(write=False)
    return C


_cached_interpolant_caputo = lru_cache(maxsize=32)(_build_interpolant_caputo)


def interpolant_caputo_matrix(grid: Grid, order: OrderFunction, side: str) -> np.ndarray:
    """Caputo derivative of the piecewise-linear interpolant of node values.

    On each cell the interpolant has the constant slope
    ``(f[j+1] - f[j]) / h``, which is integrated exactly against the
    frozen kernel. Unlike composing the weight table with central
    differences, the only null vectors are constants, so an optimizer
    working on node values cannot hide an alternating mode from it.
    """
    require_valid(order, grid, "derivative")
    try:
        return _cached_interpolant_caputo(grid, order, side)
    except TypeError:
        return _build_interpolant_caputo(grid, order, side)


def operator_matrix(grid: Grid, kind: OperatorKind) -> np.ndarray:
    """Matrix ``M`` with ``op(f) = M @ f.values``.

    For Caputo operators ``f'`` is taken as :func:`varfrac.grid.differentiate`
    of ``f``, so ``M`` includes the differentiation matrix.
    """
    require_valid(kind.order, grid, kind.mode)
    W = weight_matrix(grid, kind.order, kind.side, kind.complement)
    sign = 1.0 if kind.side == "left" else -1.0
    if kind.family == "rl_integral":
        return np.array(W)
    D = differentiation_matrix(grid)
    if kind.family == "caputo":
        return sign * (W @ D)
    M = sign * (D @ W)
    M[0 if kind.side == "left" else -1, :] = 0.0
    return M


def _validated(f: SampledFunction, order: OrderFunction, mode: str) -> Grid:
    require_valid(order, f.grid, mode)
    return f.grid


def left_rl_integral(f: SampledFunction, alpha: OrderFunction) -> SampledFunction:
    grid = _validated(f, alpha, "integral")
    return SampledFunction(grid, weight_matrix(grid, alpha, "left", False) @ f.values)


def right_rl_integral(f: SampledFunction, alpha: OrderFunction) -> SampledFunction:
    grid = _validated(f, alpha, "integral")
    return SampledFunction(grid, weight_matrix(grid, alpha, "right", False) @ f.values)


def left_complement_integral(f: SampledFunction, alpha: OrderFunction) -> SampledFunction:
    """Left integral of order ``1 - alpha`` (validated in derivative mode)."""
    grid = _validated(f, alpha, "derivative")
    return SampledFunction(grid, weight_matrix(grid, alpha, "left", True) @ f.values)


def right_complement_integral(f: SampledFunction, alpha: OrderFunction) -> SampledFunction:
    """Right integral of order ``1 - alpha`` (validated in derivative mode)."""
    grid = _validated(f, alpha, "derivative")
    return SampledFunction(grid, weight_matrix(grid, alpha, "right", True) @ f.values)


def _derivative_input(f: SampledFunction, fprime: SampledFunction | None) -> SampledFunction:
    if fprime is None:
        return differentiate(f)
    if fprime.grid != f.grid:
        raise GridError("f and fprime must share a grid")
    return fprime


def left_caputo(f: SampledFunction, fprime: SampledFunction | None,
                alpha: OrderFunction) -> SampledFunction:
    """Left Caputo derivative; ``fprime=None`` falls back to finite differences."""
    d = _derivative_input(f, fprime)
    return left_complement_integral(d, alpha)


def right_caputo(f: SampledFunction, fprime: SampledFunction | None,
                 alpha: OrderFunction) -> SampledFunction:
    """Right Caputo derivative; ``fprime=None`` falls back to finite differences."""
    d = _derivative_input(f, fprime)
    return -right_complement_integral(d, alpha)


def left_rl_derivative(f: SampledFunction, alpha: OrderFunction) -> SampledFunction:
    """``d/dt`` of the left complement integral, by finite differences.

    Accuracy degrades near ``t = a`` where the integral is typically not
    smooth; the value at ``t = a`` itself is set to 0.
    """
    g = differentiate(left_complement_integral(f, alpha))
    vals = np.array(g.values)
    vals[0] = 0.0
    return SampledFunction(f.grid, vals)


def right_rl_derivative(f: SampledFunction, alpha: OrderFunction) -> SampledFunction:
    """``-d/dt`` of the right complement integral; 0 at ``t = b``."""
    g = differentiate(right_complement_integral(f, alpha))
    vals = -np.array(g.values)
    vals[-1] = 0.0
    return SampledFunction(f.grid, vals)


def sample_expression(src, grid: Grid, with_derivative: bool = False):
    """Sample an expression in ``t`` on ``grid``.

    With ``with_derivative=True`` also returns the symbolic derivative
    sampled on the same grid, which is what the Caputo operators prefer
    over finite differences.
    """
    expr = src if isinstance(src, dsl.Expr) else dsl.parse(src, ("t",))
    f = sample(lambda t: dsl.evaluate(expr, {"t": t}), grid)
    if not with_derivative:
        return f
    dexpr = dsl.differentiate(expr, "t")
    fp = sample(lambda t: dsl.evaluate(dexpr, {"t": t}), grid)
    return f, fp
