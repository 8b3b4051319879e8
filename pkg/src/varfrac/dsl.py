"""A tiny expression language for Lagrangians, order functions and symmetries.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

with ``FUNC`` one of ``sin cos exp ln abs sqrt``. Every ``NAME`` must be in
the declared variable set passed to :func:`parse`.

Evaluation works elementwise on floats or numpy arrays. Operations that
would silently produce NaN or infinity in IEEE arithmetic (``ln`` of a
non-positive number, ``sqrt`` of a negative one, division by zero,
overflow) raise :class:`EvalError` instead.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

__all__ = [
    "DSLError",
    "ParseError",
    "EvalError",
    "Expr",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "FUNCTIONS",
    "parse",
    "evaluate",
    "differentiate",
    "to_string",
    "free_vars",
]

FUNCTIONS = ("sin", "cos", "exp", "ln", "abs", "sqrt")
# produced by differentiating abs(); not part of the input grammar
_INTERNAL_FUNCTIONS = ("sign",)


class DSLError(ValueError):
    """Base class for expression errors."""


class ParseError(DSLError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.reason = message
        self.line = line
        self.column = column


class EvalError(DSLError):
    """Missing binding or a value outside an operation's domain."""


# {{{ AST


class Expr:
    """Base class of the immutable expression tree."""

    __slots__ = ()

    def evaluate(self, bindings: Mapping[str, object]):
        return evaluate(self, bindings)

    def diff(self, var: str) -> "Expr":
        return differentiate(self, var)

    def __str__(self) -> str:
        return to_string(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # one of + - * / ^
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


Number = Union[float, np.ndarray]

# }}}


# {{{ tokenizer and parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # num, name, op, end
    text: str
    line: int
    column: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    pos = 0
    line, col = 1, 1
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, col)
        text = m.group()
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    tokens.append(_Token("end", "", line, col))
    return tokens


class _Parser:
    def __init__(self, src: str, declared: frozenset[str]):
        self.tokens = _tokenize(src)
        self.pos = 0
        self.declared = declared

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok: _Token | None = None):
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.column)

    def expect(self, text: str) -> _Token:
        if self.tok.kind != "op" or self.tok.text != text:
            self.error(f"expected {text!r}, found {self._describe(self.tok)}")
        return self.advance()

    @staticmethod
    def _describe(tok: _Token) -> str:
        return "end of input" if tok.kind == "end" else repr(tok.text)

    def parse(self) -> Expr:
        if self.tok.kind == "end":
            self.error("empty expression")
        e = self.expr()
        if self.tok.kind != "end":
            self.error(f"unexpected {self._describe(self.tok)}")
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op_tok = self.advance()
            op = op_tok.text
            nxt = self.tok
            if (op == "*" and nxt.kind == "op" and nxt.text == "*"
                    and nxt.line == op_tok.line and nxt.column == op_tok.column + 1):
                self.error("'**' is not an operator; use '^' for powers", op_tok)
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if tok.text in FUNCTIONS:
                if not (self.tok.kind == "op" and self.tok.text == "("):
                    self.error(f"function {tok.text!r} must be called with one argument", tok)
                self.advance()
                if self.tok.kind == "op" and self.tok.text == ")":
                    self.error(f"function {tok.text!r} takes exactly 1 argument, got 0")
                arg = self.expr()
                if self.tok.kind == "op" and self.tok.text == ",":
                    self.error(f"function {tok.text!r} takes exactly 1 argument")
                self.expect(")")
                return Call(tok.text, arg)
            if tok.text not in self.declared:
                self.error(f"unknown identifier {tok.text!r}", tok)
            if self.tok.kind == "op" and self.tok.text == "(":
                self.error(f"{tok.text!r} is a variable, not a function")
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        self.error(f"expected a number, name or '(', found {self._describe(tok)}")


def parse(src: str, declared_vars) -> Expr:
    """Parse ``src`` into an expression over ``declared_vars``.

    Raises :class:`ParseError` carrying the 1-based line and column of the
    offending token.
    """
    if not isinstance(src, str):
        raise ParseError(f"expression must be a string, got {type(src).__name__}", 1, 1)
    declared = frozenset(declared_vars)
    clash = declared.intersection(FUNCTIONS)
    if clash:
        raise DSLError(f"variable names shadow functions: {sorted(clash)}")
    return _Parser(src, declared).parse()


# }}}


# {{{ evaluation


def _literal_exponent(e: Expr) -> float | None:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Neg) and isinstance(e.arg, Num):
        return -e.arg.value
    return None


def _check(ok, message: str):
    if not np.all(ok):
        raise EvalError(message)


def _eval(e: Expr, env: Mapping[str, object]):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise EvalError(f"no value bound to variable {e.name!r}") from None
    if isinstance(e, Neg):
        return -_eval(e.arg, env)
    if isinstance(e, Call):
        x = _eval(e.arg, env)
        f = e.func
        if f == "sin":
            return np.sin(x)
        if f == "cos":
            return np.cos(x)
        if f == "exp":
            return np.exp(x)
        if f == "ln":
            _check(np.asarray(x) > 0, "ln of a non-positive number")
            return np.log(x)
        if f == "sqrt":
            _check(np.asarray(x) >= 0, "sqrt of a negative number")
            return np.sqrt(x)
        if f == "abs":
            return np.abs(x)
        if f == "sign":
            return np.sign(x)
        raise EvalError(f"unknown function {f!r}")
    if isinstance(e, BinOp):
        x = _eval(e.left, env)
        if e.op == "^":
            c = _literal_exponent(e.right)
            if c is not None:
                xa = np.asarray(x)
                if c != math.floor(c):
                    _check(xa >= 0, "non-integer power of a negative number")
                if c < 0:
                    _check(xa != 0, "negative power of zero")
                if c == 2.0:
                    return x * x
                return np.power(x, c)
            y = _eval(e.right, env)
            # defined as exp(y ln x), hence the positive base; np.power gives
            # the same value with less rounding
            _check(np.asarray(x) > 0, "variable exponent requires a positive base")
            return np.power(x, y)
        y = _eval(e.right, env)
        if e.op == "+":
            return x + y
        if e.op == "-":
            return x - y
        if e.op == "*":
            return x * y
        if e.op == "/":
            _check(np.asarray(y) != 0, "division by zero")
            return x / y
        raise EvalError(f"unknown operator {e.op!r}")
    raise TypeError(f"not an expression: {e!r}")


def evaluate(e: Expr, bindings: Mapping[str, object]):
    """Evaluate ``e`` with variables taken from ``bindings``.

    Values may be floats or numpy arrays (broadcast together). Returns a
    float for scalar inputs and an array otherwise.
    """
    env = {k: (np.asarray(v, dtype=float) if not np.isscalar(v) else float(v))
           for k, v in bindings.items()}
    with np.errstate(all="ignore"):
        out = _eval(e, env)
    _check(np.isfinite(out), "result is not finite (overflow)")
    if np.ndim(out) == 0:
        return float(out)
    return np.asarray(out, dtype=float)


# }}}


# {{{ differentiation

_ZERO = Num(0.0)
_ONE = Num(1.0)


def _is(e: Expr, v: float) -> bool:
    return isinstance(e, Num) and e.value == v


def _add(a: Expr, b: Expr) -> Expr:
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return BinOp("+", a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if _is(b, 0):
        return a
    if _is(a, 0):
        return _neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    return BinOp("-", a, b)


def _neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a: Expr, b: Expr) -> Expr:
    if _is(a, 0) or _is(b, 0):
        return _ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    # fold a literal factor into a product that already leads with one
    if isinstance(a, Num) and isinstance(b, BinOp) and b.op == "*" and isinstance(b.left, Num):
        return _mul(Num(a.value * b.left.value), b.right)
    return BinOp("*", a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if _is(a, 0):
        return _ZERO
    if _is(b, 1):
        return a
    return BinOp("/", a, b)


def _pow(a: Expr, b: Expr) -> Expr:
    if _is(b, 1):
        return a
    if _is(b, 0):
        return _ONE
    return BinOp("^", a, b)


def differentiate(e: Expr, var: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to ``var``.

    Terms that are literally zero are dropped; no further simplification is
    attempted. ``abs`` differentiates to ``sign(u) * u'``, which is left
    symbolic (and evaluates to 0 at ``u = 0``).
    """
    d = differentiate
    if isinstance(e, Num):
        return _ZERO
    if isinstance(e, Var):
        return _ONE if e.name == var else _ZERO
    if isinstance(e, Neg):
        return _neg(d(e.arg, var))
    if isinstance(e, BinOp):
        u, v = e.left, e.right
        if e.op == "+":
            return _add(d(u, var), d(v, var))
        if e.op == "-":
            return _sub(d(u, var), d(v, var))
        if e.op == "*":
            return _add(_mul(d(u, var), v), _mul(u, d(v, var)))
        if e.op == "/":
            du, dv = d(u, var), d(v, var)
            return _sub(_div(du, v), _div(_mul(u, dv), _pow(v, Num(2.0))))
        if e.op == "^":
            c = _literal_exponent(v)
            du = d(u, var)
            if c is not None:
                return _mul(_mul(Num(c), _pow(u, Num(c - 1.0))), du)
            dv = d(v, var)
            inner = _add(_mul(dv, Call("ln", u)), _div(_mul(v, du), u))
            return _mul(e, inner)
    if isinstance(e, Call):
        u = e.arg
        du = d(u, var)
        if _is(du, 0):
            return _ZERO
        f = e.func
        if f == "sin":
            return _mul(Call("cos", u), du)
        if f == "cos":
            return _neg(_mul(Call("sin", u), du))
        if f == "exp":
            return _mul(e, du)
        if f == "ln":
            return _div(du, u)
        if f == "sqrt":
            return _div(du, _mul(Num(2.0), e))
        if f == "abs":
            return _mul(Call("sign", u), du)
        if f == "sign":
            return _ZERO
    raise TypeError(f"cannot differentiate {e!r}")


# }}}


# {{{ printing and inspection

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3
_ATOM_PREC = 5


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _NEG_PREC
    if isinstance(e, Num) and (e.value < 0 or math.copysign(1.0, e.value) < 0):
        return _NEG_PREC
    return _ATOM_PREC


def _fmt_num(v: float) -> str:
    s = repr(float(v))
    if s.endswith(".0"):
        s = s[:-2]
    return s


def to_string(e: Expr) -> str:
    """Render ``e`` in the input syntax, with minimal parentheses."""
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_string(e.arg)})"
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        if _prec(e.arg) < _PREC["^"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        ls, rs = to_string(e.left), to_string(e.right)
        if e.op == "^":
            if _prec(e.left) <= p:
                ls = f"({ls})"
            if _prec(e.right) < p:
                rs = f"({rs})"
            return f"{ls}^{rs}"
        if _prec(e.left) < p:
            ls = f"({ls})"
        # left-associative, so equal precedence on the right needs parentheses;
        # negated operands are always wrapped for readability
        if _prec(e.right) <= p or _prec(e.right) == _NEG_PREC:
            rs = f"({rs})"
        return f"{ls} {e.op} {rs}"
    raise TypeError(f"not an expression: {e!r}")


def free_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, Num):
        return frozenset()
    if isinstance(e, (Neg, Call)):
        return free_vars(e.arg)
    if isinstance(e, BinOp):
        return free_vars(e.left) | free_vars(e.right)
    raise TypeError(f"not an expression: {e!r}")


# }}}
