import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from varfrac.grid import (
    Grid,
    GridError,
    SampledFunction,
    differentiate,
    differentiation_matrix,
    interpolate,
    make_uniform_grid,
    read_csv,
    sample,
    trapezoid,
    write_csv,
)


def test_uniform_nodes():
    g = make_uniform_grid(0, 1, 4)
    assert g.nodes.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert make_uniform_grid(0, 2, 8).h == 0.25
    assert len(g) == 5


@pytest.mark.parametrize("a, b, n", [(-1, 1, 2), (1, 1, 8), (2, 1, 8), (0, 1, 3)])
def test_rejects_bad_grids(a, b, n):
    with pytest.raises(GridError):
        make_uniform_grid(a, b, n)


def test_grid_is_immutable_and_hashable():
    g = make_uniform_grid(0, 1, 8)
    with pytest.raises(ValueError):
        g.nodes[0] = 1.0
    assert hash(g) == hash(make_uniform_grid(0, 1, 8))
    assert g.nodes[-1] == 1.0


def test_sample_examples():
    g = make_uniform_grid(0, 1, 4)
    assert np.all(sample(lambda t: 0.0 * t, g).values == 0)
    assert sample(lambda t: t, g).values.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert sample(lambda t: t * t, g).values.tolist() == [0.0, 0.0625, 0.25, 0.5625, 1.0]


def test_sample_scalar_only_callable():
    import math

    g = make_uniform_grid(0, 1, 4)
    assert sample(math.exp, g).values[-1] == pytest.approx(math.e)


def test_sample_rejects_non_finite():
    g = make_uniform_grid(0, 1, 4)
    with pytest.raises(GridError), np.errstate(divide="ignore"):
        sample(lambda t: 1.0 / t, g)


def test_differentiate_reproduces_quadratics():
    g = make_uniform_grid(0, 1, 8)
    assert np.all(differentiate(sample(lambda t: 3.0 + 0 * t, g)).values == 0)
    assert np.allclose(differentiate(sample(lambda t: t, g)).values, 1.0, atol=1e-14, rtol=0)
    d = differentiate(sample(lambda t: t * t, g)).values
    assert np.allclose(d, 2 * g.nodes, atol=1e-13, rtol=0)


def test_differentiation_matrix_matches():
    g = make_uniform_grid(-1, 2, 16)
    f = sample(np.sin, g)
    assert np.allclose(differentiation_matrix(g) @ f.values, differentiate(f).values, atol=1e-14)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_differentiate_linear(c1, c2):
    g = make_uniform_grid(0, 1, 32)
    f, h = sample(np.sin, g), sample(np.exp, g)
    lhs = differentiate(f * c1 + h * c2).values
    rhs = c1 * differentiate(f).values + c2 * differentiate(h).values
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_differentiate_then_integrate_order():
    errs = []
    for n in (64, 128, 256):
        g = make_uniform_grid(0, 1, n)
        f = sample(lambda t: np.exp(np.sin(3 * t)), g)
        errs.append(abs(trapezoid(differentiate(f)) - (f.values[-1] - f.values[0])))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.9)


def test_interpolate():
    g = make_uniform_grid(0, 1, 4)
    f = sample(lambda t: t * t, g)
    assert interpolate(f, 0.25) == 0.0625
    assert interpolate(f, 0.125) == pytest.approx(0.03125, abs=1e-17)
    lin = sample(lambda t: 2 * t - 1, g)
    assert interpolate(lin, 0.6) == pytest.approx(0.2, abs=1e-15)
    with pytest.raises(GridError):
        interpolate(f, 1.5)


@given(st.floats(0, 1))
def test_interpolate_linear_exact(t):
    g = make_uniform_grid(0, 1, 7)
    f = sample(lambda s: 3 * s - 2, g)
    assert f(t) == pytest.approx(3 * t - 2, abs=1e-14)


def test_trapezoid_exact_for_linear():
    g = make_uniform_grid(1, 3, 10)
    assert trapezoid(sample(lambda t: 2 * t + 1, g)) == pytest.approx(10.0, rel=1e-14)


def test_sampled_function_invariants():
    g = make_uniform_grid(0, 1, 4)
    with pytest.raises(GridError):
        SampledFunction(g, np.ones(4))
    with pytest.raises(GridError):
        SampledFunction(g, [0, 1, np.nan, 0, 0])
    f = SampledFunction(g, np.arange(5.0))
    with pytest.raises(ValueError):
        f.values[0] = 3.0
    with pytest.raises(GridError):
        f + SampledFunction(make_uniform_grid(0, 2, 4), np.zeros(5))


def test_csv_round_trip(tmp_path):
    g = make_uniform_grid(-0.3, 1.7, 9)
    f = sample(lambda t: np.exp(t) / 3, g)
    path = tmp_path / "f.csv"
    write_csv(f, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,value"
    back = read_csv(path)
    assert np.array_equal(back.values, f.values)
    assert back.grid.n == 9
    assert np.allclose(back.grid.nodes, g.nodes, atol=1e-15)


def test_csv_rejects_garbage(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,y\n1,2\n")
    with pytest.raises(GridError):
        read_csv(p)
    p.write_text("t,value\n0,1\n0.5,abc\n")
    with pytest.raises(GridError):
        read_csv(p)
