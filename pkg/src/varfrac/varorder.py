"""Variable order functions ``alpha(t, tau)`` and their admissibility checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal, Union

import numpy as np

from . import dsl
from .grid import Grid, make_uniform_grid, sample
from .quadrature import singular_product_quad
from .specfun import gamma

__all__ = [
    "OrderError",
    "OrderValidationError",
    "OrderFunction",
    "OrderReport",
    "IntegrabilityReport",
    "validate_order",
    "require_valid",
    "kernel_integrability_check",
    "kernel_majorants",
]

Mode = Literal["integral", "derivative"]
ORDER_VARS = ("t", "tau")
MAX_LISTED_VIOLATIONS = 20


class OrderError(ValueError):
    """Malformed order function."""


class OrderValidationError(OrderError):
    def __init__(self, report: "OrderReport"):
        super().__init__(report.summary())
        self.report = report


@dataclass(frozen=True)
class OrderFunction:
    """A map ``(t, tau) -> alpha`` with declared bounds inside ``(0, 1)``.

    ``func`` is either a parsed DSL expression over ``t`` and ``tau`` or a
    numpy-vectorized callable. ``bound_n`` is the integer ``n >= 2`` that
    sets the admissible range: ``alpha > 1/n`` for integrals and
    ``alpha < 1 - 1/n`` for derivatives.
    """

    func: Union[dsl.Expr, Callable]
    declared_min: float
    declared_max: float
    bound_n: int = 4
    constant: float | None = None

    def __post_init__(self) -> None:
        lo, hi = self.declared_min, self.declared_max
        if not (0.0 < lo <= hi < 1.0):
            raise OrderError(
                f"declared bounds must satisfy 0 < min <= max < 1, got [{lo}, {hi}]"
            )
        if int(self.bound_n) != self.bound_n or self.bound_n < 2:
            raise OrderError(f"bound_n must be an integer >= 2, got {self.bound_n}")
        object.__setattr__(self, "bound_n", int(self.bound_n))

    @classmethod
    def constant_order(cls, value: float, bound_n: int = 4) -> OrderFunction:
        value = float(value)
        return cls(dsl.Num(value), value, value, bound_n, constant=value)

    @classmethod
    def from_expression(cls, src, declared_min: float, declared_max: float,
                        bound_n: int = 4) -> OrderFunction:
        expr = src if isinstance(src, dsl.Expr) else dsl.parse(src, ORDER_VARS)
        if isinstance(expr, dsl.Num):
            return cls(expr, declared_min, declared_max, bound_n, constant=expr.value)
        return cls(expr, declared_min, declared_max, bound_n)

    @property
    def source(self) -> str:
        if isinstance(self.func, dsl.Expr):
            return dsl.to_string(self.func)
        return getattr(self.func, "__name__", repr(self.func))

    def complement(self) -> OrderFunction:
        """The order ``1 - alpha`` used by derivative kernels."""
        c = None if self.constant is None else 1.0 - self.constant
        func = self.func
        if isinstance(func, dsl.Expr):
            cfunc = dsl.BinOp("-", dsl.Num(1.0), func)
        else:
            def cfunc(t, tau, _f=func):
                return 1.0 - np.asarray(_f(t, tau), dtype=float)
        return OrderFunction(cfunc, 1.0 - self.declared_max, 1.0 - self.declared_min,
                             self.bound_n, constant=c)

    def __call__(self, t, tau):
        shape = np.broadcast(t, tau).shape
        if self.constant is not None:
            out = np.full(shape, self.constant)
        elif isinstance(self.func, dsl.Expr):
            out = dsl.evaluate(self.func, {"t": t, "tau": tau})
        else:
            out = self.func(t, tau)
        out = np.broadcast_to(np.asarray(out, dtype=float), shape)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class OrderReport:
    mode: str
    ok: bool
    min: float
    max: float
    bound_n: int
    threshold: float
    n_violations: int = 0
    violations: tuple = ()
    message: str = ""

    def summary(self) -> str:
        status = "pass" if self.ok else "FAIL"
        s = (f"{self.mode}-mode order check {status}: alpha in [{self.min:.6g}, "
             f"{self.max:.6g}], n={self.bound_n}")
        if self.message:
            s += f"; {self.message}"
        if self.n_violations:
            s += f"; {self.n_violations} violating pair(s), e.g. {list(self.violations[:3])}"
        return s


def _triangle(grid: Grid):
    t = grid.nodes
    i, j = np.tril_indices(len(t), k=-1)
    return t[i], t[j]


def validate_order(of: OrderFunction, grid: Grid, mode: Mode) -> OrderReport:
    """Sample ``alpha`` on every node pair ``(t_i, t_j)``, ``j < i``.

    Integral mode requires ``min > 1/n``; derivative mode requires
    ``max < 1 - 1/n``. Values must also stay inside the declared bounds.
    Only grid pairs are inspected, so a pass is necessary but not
    sufficient for the bound to hold on the continuum.
    """
    if mode not in ("integral", "derivative"):
        raise ValueError(f"mode must be 'integral' or 'derivative', got {mode!r}")
    n = of.bound_n
    threshold = 1.0 / n if mode == "integral" else 1.0 - 1.0 / n
    ti, tj = _triangle(grid)
    try:
        vals = np.asarray(of(ti, tj), dtype=float)
    except dsl.EvalError as exc:
        return OrderReport(mode, False, math.nan, math.nan, n, threshold,
                           message=f"order function failed to evaluate: {exc}")

    if mode == "integral":
        bad = ~(vals > threshold)
    else:
        bad = ~(vals < threshold)
    out_of_declared = (vals < of.declared_min) | (vals > of.declared_max)
    bad = bad | out_of_declared | ~np.isfinite(vals)
    idx = np.flatnonzero(bad)
    listed = tuple((float(ti[k]), float(tj[k])) for k in idx[:MAX_LISTED_VIOLATIONS])
    message = ""
    if np.any(out_of_declared):
        message = (f"values leave the declared range "
                   f"[{of.declared_min}, {of.declared_max}]")
    return OrderReport(
        mode=mode,
        ok=idx.size == 0,
        min=float(np.min(vals)),
        max=float(np.max(vals)),
        bound_n=n,
        threshold=threshold,
        n_violations=int(idx.size),
        violations=listed,
        message=message,
    )


@lru_cache(maxsize=64)
def _cached_validate(of: OrderFunction, grid: Grid, mode: str) -> OrderReport:
    return validate_order(of, grid, mode)


def require_valid(of: OrderFunction, grid: Grid, mode: Mode) -> OrderReport:
    """Like :func:`validate_order` but raise :class:`OrderValidationError` on failure."""
    try:
        report = _cached_validate(of, grid, mode)
    except TypeError:  # unhashable callable
        report = validate_order(of, grid, mode)
    if not report.ok:
        raise OrderValidationError(report)
    return report


# {{{ integrability of the difference kernel


@dataclass(frozen=True)
class IntegrabilityReport:
    """Chain of upper bounds for ``int_0^b s**(-alpha(s)) / Gamma(1 - alpha(s)) ds``.

    ``integral`` <= ``gamma_step`` <= ``power_step`` must hold; the first
    step replaces ``1/Gamma(x)`` by ``x (x+1) / (x**2 + 1)``, the second
    replaces that factor by 1 and ``s**(-alpha)`` by ``s**(1/n - 1)`` on
    ``(0, 1)`` and by 1 on ``[1, b]``. ``closed_form_majorant`` is the
    value ``1 + n b**(1/n) - n`` obtained with the two power bounds
    attached to the opposite sides of ``s = 1``; it is reported for
    comparison and is not a valid bound in general.
    """

    integral: float
    gamma_step: float
    power_step: float
    closed_form_majorant: float
    b: float
    n: int
    premise_holds: bool
    ok: bool

    @property
    def closed_form_majorant_holds(self) -> bool:
        return self.integral <= self.closed_form_majorant


class IntegrabilityError(OrderError):
    def __init__(self, report: IntegrabilityReport, which: str):
        super().__init__(f"kernel integral bound violated at the {which} step: {report}")
        self.report = report


def kernel_majorants(of: OrderFunction, b: float, n: int | None = None,
                     intervals: int = 1024, margin: float = 1e-9) -> IntegrabilityReport:
    """Integrate the difference kernel and its majorants on ``(0, b]``.

    ``of`` is read as a difference kernel: ``of(t, tau)`` is taken to
    depend on ``t - tau`` only, which the caller asserts.
    """
    n = of.bound_n if n is None else int(n)
    if n < 2:
        raise OrderError("n must be >= 2")
    b = float(b)
    if not b > 0:
        raise OrderError("b must be positive")
    grid = make_uniform_grid(0.0, b, intervals)
    ones = sample(lambda t: np.ones_like(t), grid)

    def alpha(t, tau):
        return np.asarray(of(t, tau), dtype=float)

    def neg_alpha(t, tau):
        return -alpha(t, tau)

    def inv_gamma(t, tau):
        return 1.0 / gamma(1.0 - alpha(t, tau))

    def gamma_bound_factor(t, tau):
        x = 1.0 - alpha(t, tau)
        return x * (x + 1.0) / (x * x + 1.0)

    integral = singular_product_quad(b, 0.0, b, ones, neg_alpha, inv_gamma)
    gamma_step = singular_product_quad(b, 0.0, b, ones, neg_alpha, gamma_bound_factor)
    power_step = n * min(b, 1.0) ** (1.0 / n) + max(b - 1.0, 0.0)
    closed = 1.0 + n * b ** (1.0 / n) - n

    ti, tj = _triangle(grid)
    vals = alpha(ti, tj)
    premise = bool(np.all((vals > 0) & (vals < 1.0 - 1.0 / n)))
    ok = (math.isfinite(integral)
          and integral <= gamma_step * (1 + margin) + margin
          and gamma_step <= power_step * (1 + margin) + margin)
    return IntegrabilityReport(integral, gamma_step, power_step, closed, b, n, premise, ok)


def kernel_integrability_check(of: OrderFunction, b: float, n: int | None = None,
                               intervals: int = 1024) -> float:
    """Return ``int_0^b |k(s)| ds`` after checking it against its majorants.

    Raises :class:`IntegrabilityError` naming the step of the bound chain
    that failed.
    """
    rep = kernel_majorants(of, b, n, intervals)
    if not math.isfinite(rep.integral):
        raise IntegrabilityError(rep, "finiteness")
    if not rep.integral <= rep.gamma_step * (1 + 1e-9) + 1e-9:
        raise IntegrabilityError(rep, "gamma-bound")
    if not rep.gamma_step <= rep.power_step * (1 + 1e-9) + 1e-9:
        raise IntegrabilityError(rep, "power-bound")
    return rep.integral


# }}}
