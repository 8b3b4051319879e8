"""Uniform grids on ``[a, b]`` and functions sampled on them."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

__all__ = [
    "Grid",
    "GridError",
    "SampledFunction",
    "make_uniform_grid",
    "sample",
    "differentiate",
    "differentiation_matrix",
    "interpolate",
    "trapezoid",
    "trapezoid_weights",
    "write_csv",
    "read_csv",
]

MIN_INTERVALS = 4


class GridError(ValueError):
    """Invalid grid construction or out-of-range query."""


@dataclass(frozen=True)
class Grid:
    """Uniform discretization ``a = t_0 < ... < t_N = b``."""

    a: float
    b: float
    n: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise GridError("interval endpoints must be finite")
        if not self.a < self.b:
            raise GridError(f"need a < b, got a={self.a}, b={self.b}")
        if int(self.n) != self.n or self.n < MIN_INTERVALS:
            raise GridError(f"need an integer N >= {MIN_INTERVALS}, got N={self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        t = self.a + self.h * np.arange(self.n + 1)
        t[-1] = self.b
        t.setflags(write=False)
        return t

    @cached_property
    def midpoints(self) -> np.ndarray:
        m = self.a + self.h * (np.arange(self.n) + 0.5)
        m.setflags(write=False)
        return m

    def __len__(self) -> int:
        return self.n + 1


def make_uniform_grid(a: float, b: float, n: int) -> Grid:
    return Grid(float(a), float(b), n)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values ``f(t_i)`` at the nodes of a grid. Immutable."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        if vals.shape != (len(self.grid),):
            raise GridError(
                f"expected {len(self.grid)} values, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            bad = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise GridError(f"non-finite value at node {bad} (t={self.grid.nodes[bad]})")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    def __call__(self, t: float) -> float:
        return interpolate(self, t)

    def with_values(self, values) -> SampledFunction:
        return SampledFunction(self.grid, values)

    def __add__(self, other):
        if isinstance(other, SampledFunction):
            _check_same_grid(self, other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, SampledFunction):
            _check_same_grid(self, other)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)

    def __mul__(self, other):
        if isinstance(other, SampledFunction):
            _check_same_grid(self, other)
            return self.with_values(self.values * other.values)
        return self.with_values(self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


def _check_same_grid(f: SampledFunction, g: SampledFunction) -> None:
    if f.grid != g.grid:
        raise GridError("sampled functions live on different grids")


def sample(f: Callable, grid: Grid) -> SampledFunction:
    """Evaluate ``f`` at every node.

    ``f`` may be vectorized (accepting the node array) or scalar; scalar
    callables are applied node by node.
    """
    t = grid.nodes
    try:
        vals = np.asarray(f(t), dtype=float)
    except TypeError:
        vals = None
    if vals is None or vals.shape not in ((), t.shape):
        vals = np.array([float(f(float(ti))) for ti in t])
    elif vals.shape == ():
        vals = np.full(t.shape, float(vals))
    return SampledFunction(grid, vals)


def differentiation_matrix(grid: Grid) -> np.ndarray:
    """Second-order finite-difference matrix used by :func:`differentiate`."""
    n = grid.n
    h = grid.h
    D = np.zeros((n + 1, n + 1))
    i = np.arange(1, n)
    D[i, i - 1] = -0.5 / h
    D[i, i + 1] = 0.5 / h
    D[0, :3] = np.array([-3.0, 4.0, -1.0]) / (2 * h)
    D[n, n - 2 :] = np.array([1.0, -4.0, 3.0]) / (2 * h)
    return D


def differentiate(sf: SampledFunction) -> SampledFunction:
    """Central differences inside, one-sided second-order stencils at the ends."""
    f = sf.values
    h = sf.grid.h
    d = np.empty_like(f)
    d[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    # the one-sided stencils written in differences so constants give exact 0
    d[0] = (3 * (f[1] - f[0]) - (f[2] - f[1])) / (2 * h)
    d[-1] = (3 * (f[-1] - f[-2]) - (f[-2] - f[-3])) / (2 * h)
    return SampledFunction(sf.grid, d)


def interpolate(sf: SampledFunction, t: float) -> float:
    """Piecewise-linear interpolation; exact at the nodes."""
    g = sf.grid
    if not (g.a <= t <= g.b):
        raise GridError(f"t={t} outside [{g.a}, {g.b}]")
    return float(np.interp(t, g.nodes, sf.values))


def trapezoid_weights(grid: Grid) -> np.ndarray:
    w = np.full(len(grid), grid.h)
    w[0] = w[-1] = 0.5 * grid.h
    return w


def trapezoid(sf) -> float:
    """Composite trapezoid rule over the whole grid."""
    return float(np.dot(trapezoid_weights(sf.grid), sf.values))


def write_csv(sf: SampledFunction, path) -> None:
    """Write columns ``t,value`` with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value"])
        for ti, vi in zip(sf.grid.nodes, sf.values):
            w.writerow([f"{ti:.17g}", f"{vi:.17g}"])


def read_csv(path, grid: Grid | None = None) -> SampledFunction:
    """Read a ``t,value`` CSV back into a :class:`SampledFunction`.

    Without ``grid`` the nodes are assumed uniform and a grid is rebuilt
    from the first and last ``t`` and the row count.
    """
    rows = []
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != ["t", "value"]:
            raise GridError(f"{path}: expected header 't,value'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise GridError(f"{path}:{lineno}: expected 2 columns")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError as exc:
                raise GridError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise GridError(f"{path}: no data rows")
    t = np.array([r[0] for r in rows])
    v = np.array([r[1] for r in rows])
    if grid is None:
        grid = Grid(float(t[0]), float(t[-1]), len(t) - 1)
    if len(t) != len(grid) or not np.allclose(t, grid.nodes, rtol=0, atol=1e-12 * (1 + abs(grid.b))):
        raise GridError(f"{path}: nodes do not match the expected grid")
    return SampledFunction(grid, v)
