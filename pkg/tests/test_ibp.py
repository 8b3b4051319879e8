import numpy as np
import pytest

from varfrac.grid import make_uniform_grid
from varfrac.ibp import IBPResult, ibp_derivatives, ibp_derivatives_mirror, ibp_integrals
from varfrac.operators import sample_expression
from varfrac.varorder import OrderFunction

VAR = OrderFunction.from_expression("0.5 + 0.2*sin(t - tau)", 0.5, 0.67)
HALF = OrderFunction.constant_order(0.5)


def _run(check, fs, gs, order, n):
    g = make_uniform_grid(0, 1, n)
    gg = sample_expression(gs, g)
    if check is ibp_integrals:
        return check(sample_expression(fs, g), gg, order)
    f, fp = sample_expression(fs, g, with_derivative=True)
    return check(f, fp, gg, order)


def test_rel_diff_definition():
    r = IBPResult(2.0, 1.0, 8)
    assert r.abs_diff == 1.0 and r.rel_diff == 0.5
    assert IBPResult(0.0, 0.0, 8).rel_diff == 0.0
    assert set(r.as_dict()) == {"lhs", "rhs", "abs_diff", "rel_diff", "N"}


@pytest.mark.parametrize("check", [ibp_integrals, ibp_derivatives, ibp_derivatives_mirror])
def test_zero_f(check):
    r = _run(check, "0", "1 + t", HALF, 64)
    assert r.lhs == 0.0 and r.rhs == 0.0


def test_integrals_linear_pair():
    assert _run(ibp_integrals, "t", "1 - t", HALF, 512).rel_diff <= 5e-3


def test_derivatives_coarse_vs_fine():
    coarse = _run(ibp_derivatives, "t", "1 - t", HALF, 32).rel_diff
    fine = _run(ibp_derivatives, "t", "1 - t", HALF, 512).rel_diff
    assert fine < coarse


def test_difference_kernel_identity_exact_without_endpoint_data():
    # for difference kernels the discrete adjoint only breaks through f(a)
    # and g(b); with both zero the two sides agree to rounding
    r = _run(ibp_integrals, "sin(3*t)", "cos(t)*(1 - t)", VAR, 128)
    assert r.rel_diff <= 1e-14


def test_generic_pair_converges_slowly():
    # D_right g grows like (b - t)**(-alpha) when g(b) != 0; the outer
    # trapezoid rule then converges at rate 1 - alpha only
    errs = [_run(ibp_derivatives, "exp(t)", "cos(t)", HALF, n).rel_diff for n in (128, 512)]
    rate = np.log(errs[0] / errs[1]) / np.log(4)
    assert errs[1] > 5e-3
    assert 0.3 < rate < 0.7
