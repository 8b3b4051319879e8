import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from varfrac import dsl
from varfrac.dsl import BinOp, Call, EvalError, Neg, Num, ParseError, Var

VARS = ("t", "q")


def test_literal():
    assert dsl.parse("0", []) == Num(0.0)


def test_demo_order_ast():
    want = BinOp("+", Num(0.5), BinOp("*", Num(0.2), Call("sin", BinOp("-", Var("t"), Var("tau")))))
    assert dsl.parse("0.5 + 0.2*sin(t - tau)", ("t", "tau")) == want


def test_power_star_star_rejected():
    with pytest.raises(ParseError) as exc:
        dsl.parse("q ** 2", ("q",))
    assert exc.value.line == 1 and exc.value.column == 3
    assert "^" in exc.value.reason


@pytest.mark.parametrize(
    "src, want",
    [
        ("1 - 2 - 3", -4.0),
        ("2^3^2", 512.0),
        ("-2^2", -4.0),
        ("2 * -3", -6.0),
        ("8 / 4 / 2", 1.0),
        ("(1 + 2) * 3", 9.0),
        ("2^-1", 0.5),
        ("1e-3 * 1E3", 1.0),
    ],
)
def test_precedence_and_associativity(src, want):
    assert dsl.evaluate(dsl.parse(src, []), {}) == want


def test_eval_examples():
    assert dsl.evaluate(dsl.parse("7", VARS), {"t": 1.0, "q": 2.0}) == 7.0
    assert dsl.evaluate(dsl.parse("t^2", VARS), {"t": 3.0}) == 9.0
    demo = dsl.parse("0.5 + 0.2*sin(t - tau)", ("t", "tau"))
    assert dsl.evaluate(demo, {"t": 1.0, "tau": 0.0}) == pytest.approx(0.6682941970, abs=1e-10)


def test_eval_vectorized():
    e = dsl.parse("t*q + 1", VARS)
    out = dsl.evaluate(e, {"t": np.arange(3.0), "q": 2.0})
    assert out.tolist() == [1.0, 3.0, 5.0]


@pytest.mark.parametrize(
    "src, env",
    [
        ("ln(t)", {"t": -1.0}),
        ("ln(t)", {"t": 0.0}),
        ("sqrt(t)", {"t": -0.5}),
        ("1 / t", {"t": 0.0}),
        ("t^0.5", {"t": -2.0}),
        ("t^-1", {"t": 0.0}),
        ("t^q", {"t": -1.0, "q": 2.0}),
        ("exp(t)", {"t": 1e4}),
        ("q", {"t": 1.0}),
    ],
)
def test_eval_errors_instead_of_nan(src, env):
    with pytest.raises(EvalError):
        dsl.evaluate(dsl.parse(src, VARS), env)


def test_integer_power_of_negative_is_fine():
    assert dsl.evaluate(dsl.parse("t^3", VARS), {"t": -2.0}) == -8.0


def test_derivative_examples():
    assert dsl.differentiate(dsl.parse("q", VARS), "q") == Num(1.0)
    lag = dsl.parse("0.5*d1^2 + 0.5*e1^2", ("d1", "e1"))
    assert dsl.to_string(dsl.differentiate(lag, "d1")) == "d1"
    e = dsl.parse("sin(t*q)", VARS)
    de = dsl.differentiate(e, "q")
    t, q, h = 0.7, 1.3, 1e-6
    fd = (dsl.evaluate(e, {"t": t, "q": q + h}) - dsl.evaluate(e, {"t": t, "q": q - h})) / (2 * h)
    assert dsl.evaluate(de, {"t": t, "q": q}) == pytest.approx(t * math.cos(t * q), abs=1e-15)
    assert dsl.evaluate(de, {"t": t, "q": q}) == pytest.approx(fd, abs=1e-8)


def test_zero_terms_are_dropped():
    e = dsl.differentiate(dsl.parse("t^2 + 3*q", VARS), "q")
    assert e == Num(3.0)
    assert dsl.differentiate(dsl.parse("sin(t)", VARS), "q") == Num(0.0)


def test_abs_derivative_is_sign():
    d = dsl.differentiate(dsl.parse("abs(q)", VARS), "q")
    assert dsl.evaluate(d, {"q": -3.0}) == -1.0
    assert dsl.evaluate(d, {"q": 0.0}) == 0.0
    with pytest.raises(ParseError):
        dsl.parse("sign(q)", VARS)


def test_free_vars():
    assert dsl.free_vars(dsl.parse("t*sin(q) + 2", VARS)) == {"t", "q"}


def test_corpus_derivatives_match_central_differences(dsl_corpus):
    names = dsl_corpus["variables"]
    lo = np.array([dsl_corpus["ranges"][v][0] for v in names])
    hi = np.array([dsl_corpus["ranges"][v][1] for v in names])
    rng = np.random.default_rng(20240611)
    pts = lo + (hi - lo) * rng.random((100, len(names)))
    assert len(dsl_corpus["expressions"]) == 20
    h = 1e-6
    for src in dsl_corpus["expressions"]:
        e = dsl.parse(src, names)
        for k, var in enumerate(names):
            de = dsl.differentiate(e, var)
            env = {v: pts[:, j] for j, v in enumerate(names)}
            up = dict(env, **{var: pts[:, k] + h})
            dn = dict(env, **{var: pts[:, k] - h})
            fd = (dsl.evaluate(e, up) - dsl.evaluate(e, dn)) / (2 * h)
            sym = np.broadcast_to(dsl.evaluate(de, env), fd.shape)
            err = np.abs(sym - fd) / np.maximum(1.0, np.abs(sym))
            assert np.max(err) <= 1e-6, (src, var)


def test_malformed_inputs_give_structured_errors(dsl_corpus):
    assert len(dsl_corpus["malformed"]) == 10
    for src in dsl_corpus["malformed"]:
        with pytest.raises(ParseError) as exc:
            dsl.parse(src, dsl_corpus["variables"])
        err = exc.value
        assert err.line >= 1 and err.column >= 1 and err.reason
        assert f"line {err.line}, column {err.column}" in str(err)


def test_multiline_positions():
    with pytest.raises(ParseError) as exc:
        dsl.parse("t +\n  q +\n  )", VARS)
    assert (exc.value.line, exc.value.column) == (3, 3)


@pytest.mark.parametrize("bad", [None, 3.0, b"t"])
def test_non_string_input(bad):
    with pytest.raises(ParseError):
        dsl.parse(bad, VARS)


def test_arity_errors():
    for src in ("sin()", "sin(t, q)", "exp"):
        with pytest.raises(ParseError):
            dsl.parse(src, VARS)


# {{{ generated expressions


_leaf = st.one_of(
    st.sampled_from([Var("t"), Var("q")]),
    st.floats(0.1, 3.0).map(lambda v: Num(round(v, 3))),
)


def _extend(children):
    return st.one_of(
        st.builds(Neg, children),
        st.builds(BinOp, st.sampled_from(["+", "-", "*"]), children, children),
        st.builds(lambda a: Call("sin", a), children),
        st.builds(lambda a: Call("exp", Call("sin", a)), children),
        st.builds(lambda a, c: BinOp("^", a, Num(c)), children, st.sampled_from([2.0, 3.0])),
        st.builds(lambda a, b: BinOp("/", a, BinOp("+", Num(2.0), Call("cos", b))), children, children),
    )


exprs = st.recursive(_leaf, _extend, max_leaves=12)


@given(exprs, st.floats(-2, 2), st.floats(-2, 2))
def test_print_parse_round_trip(e, t, q):
    back = dsl.parse(dsl.to_string(e), VARS)
    env = {"t": t, "q": q}
    try:
        want = dsl.evaluate(e, env)
    except EvalError:
        with pytest.raises(EvalError):
            dsl.evaluate(back, env)
        return
    assert dsl.evaluate(back, env) == pytest.approx(want, rel=1e-12, abs=1e-12)


@given(exprs, st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_generated_derivatives_match_differences(e, t, q):
    h = 1e-6
    try:
        de = dsl.evaluate(dsl.differentiate(e, "q"), {"t": t, "q": q})
        fd = (dsl.evaluate(e, {"t": t, "q": q + h}) - dsl.evaluate(e, {"t": t, "q": q - h})) / (2 * h)
    except EvalError:
        return
    scale = max(1.0, abs(de), abs(dsl.evaluate(e, {"t": t, "q": q})))
    assert abs(de - fd) <= 1e-5 * scale


# }}}
