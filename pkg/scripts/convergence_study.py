"""Resolution study for the translation-invariant demo.

Prints, for each N, the discrete action of the solver output, the
Euler-Lagrange residual on the interior nodes and on a trimmed window, and
the same Noether quantities for the sinusoid-perturbed straight line.

    python scripts/convergence_study.py --N 64 128 256 512 --window 0.1
"""

import argparse
import time

import numpy as np

from varfrac import (
    Lagrangian,
    OrderFunction,
    SampledFunction,
    SolverOptions,
    SymmetryGenerator,
    VariationalProblem,
    el_residual,
    solve_direct,
)
from varfrac.noether import interior_max, noether_residual


def window_max(res, frac):
    t = res.grid.nodes
    a, b = res.grid.a, res.grid.b
    m = (t >= a + frac * (b - a)) & (t <= b - frac * (b - a))
    return float(np.max(np.abs(res.values[m])))


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--N", type=int, nargs="+", default=[64, 128, 256, 512])
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("--window", type=float, default=0.1, help="trim fraction at each end")
    args = ap.parse_args()

    half = OrderFunction.constant_order(0.5)
    p = VariationalProblem(0.0, 1.0, 0.0, 1.0, [half], [half],
                           Lagrangian.from_string("0.5*d1^2 + 0.5*e1^2"))
    xi = SymmetryGenerator.from_string("1")
    print(f"{'N':>5} {'iters':>6} {'J':>12} {'EL int':>10} {'EL win':>10} "
          f"{'pert int':>10} {'pert win':>10} {'secs':>6}")
    for n in args.N:
        t0 = time.perf_counter()
        q, rep = solve_direct(p, n, SolverOptions(tol=args.tol))
        el = el_residual(p, q)
        t = q.grid.nodes
        qp = SampledFunction(q.grid, t + 0.2 * np.sin(np.pi * t))
        pert = noether_residual(p, qp, xi)
        dt = time.perf_counter() - t0
        print(f"{n:>5} {rep.iterations:>6} {rep.J:>12.8f} {interior_max(el):>10.3e} "
              f"{window_max(el, args.window):>10.3e} {interior_max(pert):>10.3e} "
              f"{window_max(pert, args.window):>10.3e} {dt:>6.2f}")


if __name__ == "__main__":
    main()
