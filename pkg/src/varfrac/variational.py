"""Action functional, Euler-Lagrange residual and a direct minimizer."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import dsl
from .grid import SampledFunction, make_uniform_grid, trapezoid, trapezoid_weights
from .noether import bracket_minus, bracket_plus, interior_max
from .operators import left_rl_derivative, right_rl_derivative
from .problem import VariationalProblem, caputo_matrices, fractional_state

__all__ = [
    "evaluate_functional",
    "el_residual",
    "el_residual_rl_form",
    "SolverOptions",
    "SolveReport",
    "solve_direct",
]

logger = logging.getLogger(__name__)


def evaluate_functional(problem: VariationalProblem, q: SampledFunction) -> float:
    """Trapezoid rule for ``int_a^b L(t, q, C_left q, C_right q) dt``."""
    problem.check_boundary(q)
    st = fractional_state(problem, q)
    return trapezoid(st.lagrangian_values(problem.lagrangian))


def el_residual(problem: VariationalProblem, q: SampledFunction) -> SampledFunction:
    """Euler-Lagrange residual in bracket form.

    ``d_q L - sum_i minus[1, d_{d_i} L] - sum_i plus[1, d_{e_i} L]``, with the
    partials evaluated along ``q``.
    """
    problem.check_boundary(q)
    lag = problem.lagrangian
    st = fractional_state(problem, q)
    grid = q.grid
    one = SampledFunction(grid, np.ones(len(grid)))
    zero = SampledFunction(grid, np.zeros(len(grid)))
    res = st.partial_q(lag).values
    for p, alpha in zip(st.partials_left(lag), problem.alphas):
        res = res - bracket_minus(one, zero, p, alpha).values
    for p, beta in zip(st.partials_right(lag), problem.betas):
        res = res - bracket_plus(one, zero, p, beta).values
    return SampledFunction(grid, res)


def el_residual_rl_form(problem: VariationalProblem, q: SampledFunction) -> SampledFunction:
    """Same residual written with RL derivatives of the partials."""
    problem.check_boundary(q)
    lag = problem.lagrangian
    st = fractional_state(problem, q)
    res = st.partial_q(lag).values
    for p, alpha in zip(st.partials_left(lag), problem.alphas):
        res = res + right_rl_derivative(p, alpha).values
    for p, beta in zip(st.partials_right(lag), problem.betas):
        res = res + left_rl_derivative(p, beta).values
    return SampledFunction(q.grid, res)


# {{{ direct method


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-6
    max_iter: int = 5000
    fd_rel_step: float = 1e-6
    fd_scheme: str = "central"
    armijo: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 60


    def __post_init__(self) -> None:
        if self.fd_scheme not in ("central", "forward"):
            raise ValueError(f"fd_scheme must be 'central' or 'forward', got {self.fd_scheme!r}")
        if not (self.tol > 0 and self.max_iter >= 1 and self.fd_rel_step > 0):
            raise ValueError("need tol > 0, max_iter >= 1 and fd_rel_step > 0")


@dataclass
class SolveReport:
    iterations: int
    grad_norm: float
    J: float
    J_initial: float
    converged: bool
    diverged: bool = False
    message: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


class _DiscreteAction:
    """``J`` as a function of the node values, with batched perturbations.

    The Caputo derivatives are linear in ``q``, so perturbing node ``k`` by
    ``delta`` shifts every derivative by ``delta`` times column ``k`` of its
    matrix. All coordinate perturbations of one gradient are evaluated in a
    single vectorized pass.
    """

    def __init__(self, problem: VariationalProblem, grid):
        self.problem = problem
        self.grid = grid
        self.lag = problem.lagrangian
        self.left, self.right = caputo_matrices(problem, grid)
        self.w = trapezoid_weights(grid)
        self.t = grid.nodes
        self.free = np.arange(1, grid.n)

    def _env(self, q, left, right):
        env = {"t": self.t, "q": q}
        for i, d in enumerate(left, start=1):
            env[f"d{i}"] = d
        for i, e in enumerate(right, start=1):
            env[f"e{i}"] = e
        return env

    def value(self, q: np.ndarray) -> float:
        left = [C @ q for C in self.left]
        right = [C @ q for C in self.right]
        try:
            L = dsl.evaluate(self.lag.expr, self._env(q, left, right))
        except dsl.EvalError:
            return math.inf
        return float(np.dot(self.w, np.broadcast_to(L, q.shape)))

    def _shifted(self, q: np.ndarray, delta: np.ndarray) -> np.ndarray:
        # J at q + delta[m] * e_{free[m]} for every m, in one pass
        k = self.free
        Q = np.broadcast_to(q, (k.size, q.size)).copy()
        Q[np.arange(k.size), k] += delta
        left = [(C @ q)[None, :] + delta[:, None] * C[:, k].T for C in self.left]
        right = [(C @ q)[None, :] + delta[:, None] * C[:, k].T for C in self.right]
        L = dsl.evaluate(self.lag.expr, self._env(Q, left, right))
        return np.broadcast_to(L, Q.shape) @ self.w

    def gradient(self, q: np.ndarray, J: float, rel_step: float,
                 scheme: str = "central") -> np.ndarray:
        k = self.free
        delta = rel_step * np.maximum(1.0, np.abs(q[k]))
        g = np.zeros_like(q)
        if scheme == "forward":
            g[k] = (self._shifted(q, delta) - J) / delta
        else:
            g[k] = (self._shifted(q, delta) - self._shifted(q, -delta)) / (2.0 * delta)
        return g


def solve_direct(problem: VariationalProblem, N: int,
                 opts: SolverOptions | None = None,
                 initial: SampledFunction | None = None):
    """Minimize the discretized action over the interior node values.

    Endpoints are pinned to the boundary data; the initial guess defaults
    to the straight line between them. Gradient quotients use the step
    ``fd_rel_step * max(1, |q_k|)``. Each iteration takes a
    steepest-descent step whose trial length is the Barzilai-Borwein
    estimate from the previous iteration, halved until the Armijo
    condition holds.

    Gradients use central differences by default. The forward quotient
    (``fd_scheme="forward"``) is biased by ``step * J''/2`` per coordinate,
    which for stiff Lagrangians already exceeds ``tol`` at the exact
    minimizer.

    Returns ``(q, report)``; ``report.converged`` says whether the gradient
    max-norm reached ``opts.tol`` within ``opts.max_iter`` iterations.
    """
    opts = opts or SolverOptions()
    if N < 32:
        raise ValueError(f"solve_direct needs N >= 32, got {N}")
    grid = make_uniform_grid(problem.a, problem.b, N)
    act = _DiscreteAction(problem, grid)

    q = (problem.straight_line(grid) if initial is None else initial).values.copy()
    J = J0 = act.value(q)
    if not math.isfinite(J0):
        return (SampledFunction(grid, q),
                SolveReport(0, math.nan, J0, J0, False, True, "initial guess has non-finite J"))

    g = act.gradient(q, J, opts.fd_rel_step, opts.fd_scheme)
    gnorm = float(np.max(np.abs(g)))
    step = 1.0 / max(gnorm, 1e-300)
    q_prev = g_prev = None
    it = 0
    diverged = False
    message = ""
    while gnorm > opts.tol and it < opts.max_iter:
        if q_prev is not None:
            s, y = q - q_prev, g - g_prev
            sy = float(np.dot(s, y))
            if sy > 0:
                step = float(np.dot(s, s)) / sy
        gg = float(np.dot(g, g))
        for _ in range(opts.max_backtracks):
            trial = q - step * g
            Jt = act.value(trial)
            if math.isfinite(Jt) and Jt <= J - opts.armijo * step * gg:
                break
            step *= opts.shrink
        else:
            if not math.isfinite(Jt):
                diverged = True
                message = "non-finite J during line search"
            else:
                message = "line search failed to decrease J"
            break
        q_prev, g_prev = q, g
        q, J = trial, Jt
        g = act.gradient(q, J, opts.fd_rel_step, opts.fd_scheme)
        gnorm = float(np.max(np.abs(g)))
        it += 1
        if it % 500 == 0:
            logger.debug("iter %d J=%.12g |g|=%.3e", it, J, gnorm)

    converged = gnorm <= opts.tol
    if not message:
        message = "converged" if converged else "max_iter reached"
    report = SolveReport(it, gnorm, J, J0, converged, diverged, message)
    return SampledFunction(grid, q), report


# }}}


def el_residual_max_interior(problem: VariationalProblem, q: SampledFunction) -> float:
    return interior_max(el_residual(problem, q))
