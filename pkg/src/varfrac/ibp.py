"""Integration-by-parts identities as numerical checks.

Each check returns an :class:`IBPResult` with both sides of the identity
evaluated by the trapezoid rule on the operator outputs.

* integrals:   ``int g * I_left f  =  int f * I_right g``
* derivatives: ``int g * C_left f  =  [f * Ic_right g]_a^b + int f * D_right g``
* mirror:      ``int g * C_right f = -[f * Ic_left g]_a^b + int f * D_left g``

``Ic`` is the complement integral and ``D`` the RL derivative. The outer
trapezoid rule sees the ``(b - t)**(-alpha)`` growth of ``D_right g`` (and
``(t - a)**(-alpha)`` of ``D_left g``) unless ``g`` vanishes there, so the
derivative identities converge slowly for generic pairs.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .grid import SampledFunction, trapezoid
from .operators import (
    left_caputo,
    left_complement_integral,
    left_rl_derivative,
    left_rl_integral,
    right_caputo,
    right_complement_integral,
    right_rl_derivative,
    right_rl_integral,
)
from .varorder import OrderFunction

__all__ = ["IBPResult", "ibp_integrals", "ibp_derivatives", "ibp_derivatives_mirror", "IBP_CHECKS"]


@dataclass(frozen=True)
class IBPResult:
    lhs: float
    rhs: float
    N: int

    @property
    def abs_diff(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def rel_diff(self) -> float:
        scale = max(abs(self.lhs), abs(self.rhs))
        return 0.0 if scale == 0.0 else self.abs_diff / scale

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(abs_diff=self.abs_diff, rel_diff=self.rel_diff)
        return d


def ibp_integrals(f: SampledFunction, g: SampledFunction, alpha: OrderFunction) -> IBPResult:
    lhs = trapezoid(g * left_rl_integral(f, alpha))
    rhs = trapezoid(f * right_rl_integral(g, alpha))
    return IBPResult(lhs, rhs, f.grid.n)


def ibp_derivatives(f: SampledFunction, fprime: SampledFunction | None,
                    g: SampledFunction, alpha: OrderFunction) -> IBPResult:
    lhs = trapezoid(g * left_caputo(f, fprime, alpha))
    ic = right_complement_integral(g, alpha).values
    fv = f.values
    boundary = fv[-1] * ic[-1] - fv[0] * ic[0]
    rhs = boundary + trapezoid(f * right_rl_derivative(g, alpha))
    return IBPResult(lhs, rhs, f.grid.n)


def ibp_derivatives_mirror(f: SampledFunction, fprime: SampledFunction | None,
                           g: SampledFunction, alpha: OrderFunction) -> IBPResult:
    lhs = trapezoid(g * right_caputo(f, fprime, alpha))
    ic = left_complement_integral(g, alpha).values
    fv = f.values
    boundary = fv[-1] * ic[-1] - fv[0] * ic[0]
    rhs = -boundary + trapezoid(f * left_rl_derivative(g, alpha))
    return IBPResult(lhs, rhs, f.grid.n)


IBP_CHECKS = {
    "integrals": ibp_integrals,
    "derivatives": ibp_derivatives,
    "derivatives-mirror": ibp_derivatives_mirror,
}
