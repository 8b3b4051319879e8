"""Command-line entry point.

    varfrac op-eval CONFIG --op {li,ri,ld,rd,lc,rc} --f EXPR --out FILE.csv
    varfrac check-ibp CONFIG --which {integrals,derivatives,derivatives-mirror} --f EXPR --g EXPR
    varfrac solve CONFIG --out DIR
    varfrac check-noether CONFIG --solution FILE.csv --out DIR
    varfrac schema

Exit codes: 0 ok, 2 config or input error, 3 identity check failed,
4 solver did not converge, 5 residual above threshold.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import dsl
from .grid import GridError, SampledFunction, make_uniform_grid, read_csv, write_csv
from .ibp import IBP_CHECKS
from .noether import interior_max, invariance_residual, noether_residual
from .operators import (
    left_caputo,
    left_rl_derivative,
    left_rl_integral,
    right_caputo,
    right_rl_derivative,
    right_rl_integral,
    sample_expression,
)
from .problem import Lagrangian, ProblemError, SymmetryGenerator, VariationalProblem
from .variational import SolverOptions, el_residual_max_interior, solve_direct
from .varorder import OrderError, OrderFunction, require_valid

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IDENTITY = 3
EXIT_NOT_CONVERGED = 4
EXIT_RESIDUAL = 5

DEFAULT_THRESHOLDS = {"ibp_rel": 5e-3, "invariance": 1e-10, "noether": 5e-2, "trim": 0.0}

_NUM = {"type": "number"}
_ORDER = {
    "type": "object",
    "required": ["expr", "declared_min", "declared_max"],
    "additionalProperties": False,
    "properties": {
        "expr": {"type": ["string", "number"]},
        "declared_min": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "declared_max": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "n": {"type": "integer", "minimum": 2},
    },
}

CONFIG_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "varfrac problem configuration",
    "type": "object",
    "required": ["interval", "grid", "orders"],
    "additionalProperties": False,
    "properties": {
        "interval": {
            "type": "object", "required": ["a", "b"], "additionalProperties": False,
            "properties": {"a": _NUM, "b": _NUM},
        },
        "boundary": {
            "type": "object", "required": ["qa", "qb"], "additionalProperties": False,
            "properties": {"qa": _NUM, "qb": _NUM},
        },
        "orders": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "alpha": {"type": "array", "items": _ORDER},
                "beta": {"type": "array", "items": _ORDER},
            },
        },
        "lagrangian": {
            "type": "object", "required": ["expr"], "additionalProperties": False,
            "properties": {
                "expr": {"type": "string"},
                "num_left": {"type": "integer", "minimum": 0},
                "num_right": {"type": "integer", "minimum": 0},
            },
        },
        "symmetry": {
            "type": "object", "required": ["xi_expr"], "additionalProperties": False,
            "properties": {"xi_expr": {"type": ["string", "number"]}},
        },
        "grid": {
            "type": "object", "required": ["N"], "additionalProperties": False,
            "properties": {"N": {"type": "integer", "minimum": 4}},
        },
        "solver": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "fd_scheme": {"enum": ["central", "forward"]},
            },
        },
        "thresholds": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "ibp_rel": {"type": "number", "minimum": 0},
                "invariance": {"type": "number", "minimum": 0},
                "noether": {"type": "number", "minimum": 0},
                "trim": {"type": "number", "minimum": 0, "exclusiveMaximum": 0.5},
            },
        },
    },
}


class ConfigError(Exception):
    pass


# {{{ config


@dataclass(frozen=True)
class ProblemConfig:
    a: float
    b: float
    N: int
    alphas: tuple
    betas: tuple
    qa: float | None = None
    qb: float | None = None
    lagrangian: Lagrangian | None = None
    xi: SymmetryGenerator | None = None
    solver: SolverOptions = field(default_factory=SolverOptions)
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))

    def orders(self, which: str) -> tuple:
        return self.alphas if which == "alpha" else self.betas

    def problem(self) -> VariationalProblem:
        if self.lagrangian is None or self.qa is None:
            raise ConfigError("this command needs 'lagrangian' and 'boundary' sections")
        return VariationalProblem(self.a, self.b, self.qa, self.qb,
                                  self.alphas, self.betas, self.lagrangian)


def _order(entry: dict) -> OrderFunction:
    src = entry["expr"]
    src = repr(float(src)) if isinstance(src, (int, float)) else src
    return OrderFunction.from_expression(src, entry["declared_min"], entry["declared_max"],
                                         entry.get("n", 4))


def parse_config(doc: Any) -> ProblemConfig:
    """Validate a config document and build the typed configuration."""
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    a, b = float(doc["interval"]["a"]), float(doc["interval"]["b"])
    if not a < b:
        raise ConfigError(f"interval needs a < b, got [{a}, {b}]")
    try:
        alphas = tuple(_order(o) for o in doc["orders"].get("alpha", []))
        betas = tuple(_order(o) for o in doc["orders"].get("beta", []))
        lag = None
        if "lagrangian" in doc:
            ld = doc["lagrangian"]
            lag = Lagrangian.from_string(ld["expr"], ld.get("num_left", len(alphas)),
                                         ld.get("num_right", len(betas)))
        xi = None
        if "symmetry" in doc:
            src = doc["symmetry"]["xi_expr"]
            xi = SymmetryGenerator.from_string(repr(float(src)) if not isinstance(src, str) else src)
    except (dsl.DSLError, OrderError, ProblemError) as exc:
        raise ConfigError(str(exc)) from None
    bnd = doc.get("boundary", {})
    sd = doc.get("solver", {})
    solver = SolverOptions(tol=sd.get("tol", 1e-6), max_iter=sd.get("max_iter", 5000),
                           fd_scheme=sd.get("fd_scheme", "central"))
    thresholds = dict(DEFAULT_THRESHOLDS)
    thresholds.update(doc.get("thresholds", {}))
    return ProblemConfig(a, b, int(doc["grid"]["N"]), alphas, betas,
                         bnd.get("qa"), bnd.get("qb"), lag, xi, solver, thresholds)


def load_config(path) -> ProblemConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(doc)


# }}}

# {{{ deterministic output


def _json_value(x, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(x, dict):
        if not x:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(x[k], indent, level + 1)}"
                 for k in sorted(x)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(x, (list, tuple)):
        if not x:
            return "[]"
        return "[\n" + ",\n".join(pad + _json_value(v, indent, level + 1) for v in x) + "\n" + end + "]"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return "null"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x if math.isfinite(x) else "null"
    return json.dumps(x)


def dumps(obj) -> str:
    """JSON with sorted keys and every float written with 17 significant digits."""
    return _json_value(obj, 2, 0) + "\n"


def _write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj))


# }}}

# {{{ commands


_OPS = {
    "li": (left_rl_integral, "integral", False),
    "ri": (right_rl_integral, "integral", False),
    "ld": (left_rl_derivative, "derivative", False),
    "rd": (right_rl_derivative, "derivative", False),
    "lc": (left_caputo, "derivative", True),
    "rc": (right_caputo, "derivative", True),
}


def _grid(cfg: ProblemConfig, N: int | None):
    return make_uniform_grid(cfg.a, cfg.b, N or cfg.N)


def _pick_order(cfg: ProblemConfig, which: str, index: int, mode: str, grid) -> OrderFunction:
    orders = cfg.orders(which)
    if not 0 <= index < len(orders):
        raise ConfigError(f"config has {len(orders)} {which} order(s), index {index} requested")
    order = orders[index]
    require_valid(order, grid, mode)
    return order


def _parse_t(src: str) -> dsl.Expr:
    return dsl.parse(src, ("t",))


def cmd_op_eval(args) -> int:
    cfg = load_config(args.config)
    grid = _grid(cfg, args.N)
    fn, mode, caputo = _OPS[args.op]
    order = _pick_order(cfg, args.order, args.index, mode, grid)
    expr = _parse_t(args.f)
    if caputo:
        f, fp = sample_expression(expr, grid, with_derivative=True)
        out = fn(f, fp, order)
    else:
        out = fn(sample_expression(expr, grid), order)
    write_csv(out, args.out)
    return EXIT_OK


def cmd_check_ibp(args) -> int:
    cfg = load_config(args.config)
    grid = _grid(cfg, args.N)
    order = _pick_order(cfg, args.order, args.index, "integral" if args.which == "integrals"
                        else "derivative", grid)
    fe, ge = _parse_t(args.f), _parse_t(args.g)
    g = sample_expression(ge, grid)
    check = IBP_CHECKS[args.which]
    if args.which == "integrals":
        res = check(sample_expression(fe, grid), g, order)
    else:
        f, fp = sample_expression(fe, grid, with_derivative=True)
        res = check(f, fp, g, order)
    report = res.as_dict()
    threshold = float(cfg.thresholds["ibp_rel"])
    report.update(which=args.which, threshold=threshold, passed=res.rel_diff <= threshold)
    text = dumps(report)
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    return EXIT_OK if report["passed"] else EXIT_IDENTITY


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    problem = cfg.problem()
    N = args.N or cfg.N
    problem.validate(make_uniform_grid(cfg.a, cfg.b, N))
    q, rep = solve_direct(problem, N, cfg.solver)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(q, out / "solution.csv")
    report = rep.as_dict()
    report["N"] = N
    try:
        report["el_residual_max_interior"] = el_residual_max_interior(problem, q)
    except dsl.EvalError as exc:
        report["el_residual_max_interior"] = None
        report["message"] += f"; residual not evaluable: {exc}"
    _write_json(report, out / "report.json")
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


def _trimmed_max(res: SampledFunction, trim: float) -> float:
    """Interior max-norm, further restricted to ``[a + trim L, b - trim L]``."""
    if trim <= 0:
        return interior_max(res)
    g = res.grid
    t = g.nodes
    length = g.b - g.a
    mask = (t >= g.a + trim * length) & (t <= g.b - trim * length)
    mask[:2] = False
    mask[-2:] = False
    v = res.values[mask]
    return float(np.max(np.abs(v))) if v.size else 0.0


def cmd_check_noether(args) -> int:
    cfg = load_config(args.config)
    problem = cfg.problem()
    if cfg.xi is None:
        raise ConfigError("check-noether needs a 'symmetry' section")
    try:
        q = read_csv(args.solution)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read solution: {exc}") from None
    if not (math.isclose(q.grid.a, cfg.a, abs_tol=1e-12) and math.isclose(q.grid.b, cfg.b, abs_tol=1e-12)):
        raise ConfigError("solution is sampled on a different interval than the config")
    # snap the grid to the configured interval so boundary checks compare exactly
    q = SampledFunction(make_uniform_grid(cfg.a, cfg.b, q.grid.n), q.values)
    try:
        problem.check_boundary(q, tol=1e-9)
    except ProblemError as exc:
        raise ConfigError(str(exc)) from None
    inv = invariance_residual(problem, q, cfg.xi)
    noe = noether_residual(problem, q, cfg.xi)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(inv, out / "invariance.csv")
    write_csv(noe, out / "noether.csv")
    trim = float(cfg.thresholds["trim"])
    summary = {
        "N": q.grid.n,
        "invariance_max": float(np.max(np.abs(inv.values))),
        "noether_max_interior": interior_max(noe),
        "noether_l2_interior": float(np.sqrt(q.grid.h * np.sum(noe.values[2:-2] ** 2))),
        "noether_max_checked": _trimmed_max(noe, trim),
        "trim": trim,
        "thresholds": {k: float(cfg.thresholds[k]) for k in ("invariance", "noether")},
    }
    ok = (summary["invariance_max"] <= cfg.thresholds["invariance"]
          and summary["noether_max_checked"] <= cfg.thresholds["noether"])
    summary["passed"] = ok
    _write_json(summary, out / "summary.json")
    return EXIT_OK if ok else EXIT_RESIDUAL


def cmd_schema(args) -> int:
    sys.stdout.write(json.dumps(CONFIG_SCHEMA, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


# }}}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="varfrac", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, order=True):
        sp.add_argument("config", help="problem configuration (JSON)")
        sp.add_argument("--N", type=int, default=None, help="override grid.N")
        if order:
            sp.add_argument("--order", choices=("alpha", "beta"), default="alpha",
                            help="which order list of the config to use")
            sp.add_argument("--index", type=int, default=0, help="position in that list")

    sp = sub.add_parser("op-eval", help="apply one operator to an expression in t")
    common(sp)
    sp.add_argument("--op", choices=sorted(_OPS), required=True)
    sp.add_argument("--f", required=True, help="expression in t")
    sp.add_argument("--out", required=True, help="output CSV")
    sp.set_defaults(func=cmd_op_eval)

    sp = sub.add_parser("check-ibp", help="check an integration-by-parts identity")
    common(sp)
    sp.add_argument("--which", choices=sorted(IBP_CHECKS), default="integrals")
    sp.add_argument("--f", required=True)
    sp.add_argument("--g", required=True)
    sp.add_argument("--out", default=None, help="also write the JSON report here")
    sp.set_defaults(func=cmd_check_ibp)

    sp = sub.add_parser("solve", help="minimize the action by the direct method")
    common(sp, order=False)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("check-noether", help="invariance and conservation-law residuals")
    sp.add_argument("config")
    sp.add_argument("--solution", required=True, help="solution CSV written by solve")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_check_noether)

    sp = sub.add_parser("schema", help="print the config JSON schema")
    sp.set_defaults(func=cmd_schema)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"varfrac: config error: {exc}", file=sys.stderr)
    except dsl.ParseError as exc:
        print(f"varfrac: parse error: {exc}", file=sys.stderr)
    except (dsl.DSLError, OrderError, ProblemError, GridError) as exc:
        print(f"varfrac: invalid input: {exc}", file=sys.stderr)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
