"""Frozen-exponent product quadrature for weakly singular kernels.

On a cell ``[tau_j, tau_{j+1}]`` of width ``h`` the kernel ``|t - tau|**e``
is integrated in closed form against the linear interpolant of the density.
The exponent ``e`` (and any multiplicative weight such as ``1/Gamma(alpha)``)
is frozen at the cell midpoint. With ``u = |t - tau|`` running from the near
end ``B = k h`` to the far end ``A = B + h``,

    int_B^A u**e * l(u) du = h**(e+1) * (w_far * f_far + w_near * f_near)

where, writing ``P_p(k) = ((k+1)**p - k**p) / p``,

    w_far  = P_{e+2}(k) - k * P_{e+1}(k)
    w_near = (k+1) * P_{e+1}(k) - P_{e+2}(k).

``P_p`` is evaluated as ``k**p * expm1(p * log1p(1/k)) / p`` to avoid the
cancellation of the naive difference of powers at large ``k``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from .grid import Grid, GridError, SampledFunction

__all__ = [
    "QuadratureError",
    "cell_weights",
    "cell_integral_matrix",
    "product_weight_matrix",
    "singular_product_quad",
    "worker_count",
]

# rows of the weight matrix are built in blocks of about this many entries
_BLOCK_ENTRIES = 1 << 18


class QuadratureError(ValueError):
    """Non-integrable exponent or a target outside the grid."""


def worker_count() -> int:
    """Thread count for row-parallel assembly, capped by ``VARFRAC_THREADS``."""
    env = os.environ.get("VARFRAC_THREADS")
    default = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), default))
        except ValueError:
            pass
    return default


def _moment_diff(p: np.ndarray, k: np.ndarray) -> np.ndarray:
    """``((k+1)**p - k**p) / p`` for ``k >= 0``, ``p > 0``."""
    out = np.empty(np.broadcast(p, k).shape)
    p = np.broadcast_to(p, out.shape)
    k = np.broadcast_to(k, out.shape)
    zero = k == 0
    out[zero] = 1.0 / p[zero]
    kk, pp = k[~zero], p[~zero]
    out[~zero] = kk**pp * np.expm1(pp * np.log1p(1.0 / kk)) / pp
    return out


def cell_weights(k, e):
    """Dimensionless (far, near) weights of one cell.

    ``k`` is the distance from the target to the near end of the cell in
    units of the cell width, ``e`` the frozen exponent (``e > -1``).
    """
    k = np.asarray(k, dtype=float)
    e = np.asarray(e, dtype=float)
    if np.any(e <= -1.0):
        raise QuadratureError("kernel exponent must exceed -1 to be integrable")
    p1 = _moment_diff(e + 1.0, k)
    p2 = _moment_diff(e + 2.0, k)
    far = p2 - k * p1
    near = (k + 1.0) * p1 - p2
    return far, near


def singular_product_quad(
    t: float,
    lower: float,
    upper: float,
    density: SampledFunction,
    exponent_fn: Callable,
    weight_fn: Callable | None = None,
) -> float:
    """Integrate ``weight * |t - tau|**exponent * density(tau)`` over ``[lower, upper]``.

    ``lower`` and ``upper`` must be grid nodes and ``t`` must lie outside
    the open interval ``(lower, upper)``, so the kernel is singular at most
    at one endpoint. ``exponent_fn(t, tau)`` and ``weight_fn(t, tau)`` are
    sampled once per cell at the cell midpoint.
    """
    grid = density.grid
    h = grid.h
    tol = 1e-9 * h
    if not (grid.a - tol <= t <= grid.b + tol):
        raise QuadratureError(f"target t={t} outside [{grid.a}, {grid.b}]")
    if not (grid.a - tol <= lower <= upper <= grid.b + tol):
        raise QuadratureError("integration range must satisfy a <= lower <= upper <= b")
    jl = (lower - grid.a) / h
    ju = (upper - grid.a) / h
    if abs(jl - round(jl)) > 1e-9 or abs(ju - round(ju)) > 1e-9:
        raise GridError("integration limits must be grid nodes")
    jl, ju = int(round(jl)), int(round(ju))
    if jl == ju:
        return 0.0
    cells = np.arange(jl, ju)
    left_of_t = t >= grid.nodes[ju] - tol
    if not left_of_t and t > grid.nodes[jl] + tol:
        raise QuadratureError("target must not lie strictly inside the integration range")

    mid = grid.midpoints[cells]
    e = np.broadcast_to(np.asarray(exponent_fn(t, mid), dtype=float), mid.shape)
    w = (np.ones_like(mid) if weight_fn is None
         else np.broadcast_to(np.asarray(weight_fn(t, mid), dtype=float), mid.shape))
    f = density.values
    if left_of_t:
        k = np.maximum((t - grid.nodes[cells + 1]) / h, 0.0)
        far, near = cell_weights(k, e)
        vals = far * f[cells] + near * f[cells + 1]
    else:
        k = np.maximum((grid.nodes[cells] - t) / h, 0.0)
        far, near = cell_weights(k, e)
        vals = near * f[cells] + far * f[cells + 1]
    return float(np.sum(w * h ** (e + 1.0) * vals))


def _assemble(grid: Grid, side: str, exponent_fn: Callable,
              weight_fn: Callable | None, cellwise: bool) -> np.ndarray:
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    n = grid.n
    h = grid.h
    t = grid.nodes
    mid = grid.midpoints
    W = np.zeros((n + 1, n if cellwise else n + 1))

    rows = np.arange(1, n + 1) if side == "left" else np.arange(0, n)
    step = max(1, _BLOCK_ENTRIES // max(n, 1))
    blocks = [rows[i : i + step] for i in range(0, len(rows), step)]

    def fill(block: np.ndarray) -> None:
        cells = np.arange(n)
        if side == "left":
            mask = cells[None, :] < block[:, None]
        else:
            mask = cells[None, :] >= block[:, None]
        ii, jj = np.nonzero(mask)
        i = block[ii]
        tt, ss = t[i], mid[jj]
        e = np.broadcast_to(np.asarray(exponent_fn(tt, ss), dtype=float), tt.shape)
        w = (np.ones_like(tt) if weight_fn is None
             else np.broadcast_to(np.asarray(weight_fn(tt, ss), dtype=float), tt.shape))
        if side == "left":
            k = (i - 1 - jj).astype(float)
            far_node, near_node = jj, jj + 1
        else:
            k = (jj - i).astype(float)
            far_node, near_node = jj + 1, jj
        if np.any(e <= -1.0):
            raise QuadratureError("kernel exponent must exceed -1 to be integrable")
        scale = w * h ** (e + 1.0)
        if cellwise:
            W[i, jj] = scale * _moment_diff(e + 1.0, k)
            return
        far, near = cell_weights(k, e)
        # each row receives at most two contributions per node, one from each
        # neighbouring cell; add.at keeps the summation order fixed
        np.add.at(W, (i, far_node), scale * far)
        np.add.at(W, (i, near_node), scale * near)

    workers = min(worker_count(), len(blocks))
    if workers <= 1:
        for blk in blocks:
            fill(blk)
    else:
        # blocks touch disjoint rows, so they can be filled concurrently
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, blocks))
    return W


def product_weight_matrix(grid: Grid, side: str, exponent_fn: Callable,
                          weight_fn: Callable | None = None) -> np.ndarray:
    """Matrix ``W`` with ``(W @ f)[i]`` the product quadrature at node ``t_i``.

    ``side="left"`` integrates over ``[a, t_i]``, ``side="right"`` over
    ``[t_i, b]``. ``exponent_fn(t, s)`` and ``weight_fn(t, s)`` receive the
    target node and the cell midpoint (as arrays of equal shape) and are only
    evaluated on pairs whose cell lies inside the integration range. The
    row of the degenerate endpoint (``t_0`` for left, ``t_N`` for right) is
    zero.
    """
    return _assemble(grid, side, exponent_fn, weight_fn, cellwise=False)


def cell_integral_matrix(grid: Grid, side: str, exponent_fn: Callable,
                         weight_fn: Callable | None = None) -> np.ndarray:
    """``(N+1) x N`` matrix of kernel integrals over whole cells.

    Entry ``(i, j)`` is ``int_cell_j weight * |t_i - tau|**e dtau`` with the
    same midpoint freezing as :func:`product_weight_matrix`; it is the
    weight a piecewise-constant density receives on cell ``j``. Each row
    equals the sum of the far and near weights of that row's cells.
    """
    return _assemble(grid, side, exponent_fn, weight_fn, cellwise=True)
