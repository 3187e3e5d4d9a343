"""Arithmetic expressions in the single variable t.

Parser (precedence climbing), IEEE-double evaluator and symbolic derivative
for the profile strings used in system definition files and CLI flags.

Grammar, loosest to tightest binding:

    + -            left associative
    * /            left associative
    unary -
    ^              right associative (maps to pow, fractional exponents allowed)
    atoms          numbers, t, pi, f(x) for f in sin cos tan exp log sqrt abs,
                   pow(x, y), parenthesised expressions

Whitespace is insignificant.  Evaluation signals domain errors (log/sqrt of
a negative, division by zero, non-finite results) instead of silently
returning inf/nan.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Expr", "Num", "Var", "Neg", "Bin", "Call",
    "ExprSyntaxError", "DomainError", "NonDifferentiableError",
    "parse", "evaluate", "differentiate", "to_string",
]


class ExprSyntaxError(ValueError):
    """Malformed expression source.  Carries the byte offset and the set of
    token kinds that would have been accepted there."""

    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(expected)
        detail = f"{message} at offset {offset}"
        if expected:
            detail += " (expected " + ", ".join(expected) + ")"
        super().__init__(detail)


class DomainError(ValueError):
    """Evaluation left the definition set (log/sqrt of a negative, division
    by zero, overflow).  Carries the offending subexpression."""

    def __init__(self, message, subexpr):
        self.subexpr = subexpr
        super().__init__(f"{message} in subexpression '{to_string(subexpr)}'")


class NonDifferentiableError(ValueError):
    """Symbolic derivative requested for a node that has none (abs)."""


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Bin:
    op: str          # one of + - * / ^
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str          # sin cos tan exp log sqrt abs
    arg: "Expr"


Expr = Num | Var | Neg | Bin | Call

_FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs")


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)

_BP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_BP = 30


class _Parser:
    def __init__(self, src):
        self.src = src
        self.pos = 0
        self.tok = None          # (kind, text, offset)
        self._advance()

    def _advance(self):
        src = self.src
        pos = self.pos
        while pos < len(src) and src[pos].isspace():
            pos += 1
        if pos >= len(src):
            self.tok = ("end", "", pos)
            self.pos = pos
            return
        m = _TOKEN_RE.match(src, pos)
        if m is None or m.start() != pos:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", pos,
                                  ("number", "identifier", "operator"))
        kind = m.lastgroup
        self.tok = (kind, m.group(kind), pos)
        self.pos = m.end()

    def _expect_op(self, op):
        kind, text, offset = self.tok
        if kind != "op" or text != op:
            raise ExprSyntaxError("unexpected " + (f"token {text!r}" if kind != "end" else "end of input"),
                                  offset, (f"'{op}'",))
        self._advance()

    def parse(self):
        expr = self.expression(0)
        kind, text, offset = self.tok
        if kind != "end":
            raise ExprSyntaxError(f"trailing input {text!r}", offset, ("operator", "end of input"))
        return expr

    def expression(self, min_bp):
        lhs = self.prefix()
        while True:
            kind, text, _ = self.tok
            if kind != "op" or text not in _BP or _BP[text] < min_bp:
                return lhs
            bp = _BP[text]
            self._advance()
            # '^' is right associative: allow the same binding power on the right
            rhs = self.expression(bp if text == "^" else bp + 1)
            lhs = Bin(text, lhs, rhs)

    def prefix(self):
        kind, text, offset = self.tok
        if kind == "num":
            self._advance()
            return Num(float(text))
        if kind == "ident":
            self._advance()
            if text == "t":
                return Var()
            if text == "pi":
                return Num(math.pi)
            if text == "pow":
                self._expect_op("(")
                x = self.expression(0)
                self._expect_op(",")
                y = self.expression(0)
                self._expect_op(")")
                return Bin("^", x, y)
            if text in _FUNCTIONS:
                self._expect_op("(")
                arg = self.expression(0)
                self._expect_op(")")
                return Call(text, arg)
            raise ExprSyntaxError(f"unknown identifier {text!r}", offset,
                                  ("t", "pi", "pow") + _FUNCTIONS)
        if kind == "op" and text == "-":
            self._advance()
            return Neg(self.expression(_UNARY_BP))
        if kind == "op" and text == "(":
            self._advance()
            inner = self.expression(0)
            self._expect_op(")")
            return inner
        raise ExprSyntaxError("unexpected " + (f"token {text!r}" if kind != "end" else "end of input"),
                              offset, ("number", "identifier", "'('", "'-'"))


def parse(src: str) -> Expr:
    """Parse an expression string into an AST.  Raises ExprSyntaxError."""
    return _Parser(src).parse()


# ---------------------------------------------------------------------------
# Evaluation (scalars or numpy arrays)
# ---------------------------------------------------------------------------

def _check(ok, message, node):
    if not np.all(ok):
        raise DomainError(message, node)


def _eval(node, t):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return t
    if isinstance(node, Neg):
        return -_eval(node.arg, t)
    if isinstance(node, Bin):
        x = _eval(node.lhs, t)
        y = _eval(node.rhs, t)
        op = node.op
        if op == "+":
            return x + y
        if op == "-":
            return x - y
        if op == "*":
            return x * y
        if op == "/":
            _check(y != 0, "division by zero", node)
            return x / y
        # power: negative base requires an integer exponent, zero base a
        # nonnegative one (0^0 = 1 by convention)
        y_arr = np.asarray(y)
        int_exp = y_arr == np.floor(y_arr)
        _check((np.asarray(x) >= 0) | int_exp, "fractional power of a negative", node)
        _check((np.asarray(x) != 0) | (y_arr >= 0), "negative power of zero", node)
        return x ** y
    x = _eval(node.arg, t)
    fn = node.fn
    if fn == "sin":
        return np.sin(x)
    if fn == "cos":
        return np.cos(x)
    if fn == "tan":
        return np.tan(x)
    if fn == "exp":
        return np.exp(x)
    if fn == "log":
        _check(np.asarray(x) > 0, "log of a non-positive", node)
        return np.log(x)
    if fn == "sqrt":
        _check(np.asarray(x) >= 0, "sqrt of a negative", node)
        return np.sqrt(x)
    return np.abs(x)


def evaluate(expr: Expr, t):
    """Evaluate at a float or a numpy array of floats.

    Raises DomainError if any point leaves the definition set or the result
    is not finite.
    """
    with np.errstate(all="ignore"):
        out = _eval(expr, t)
    if not np.all(np.isfinite(out)):
        raise DomainError("non-finite result", expr)
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(out)
    arr = np.asarray(out, dtype=float)
    if arr.shape != np.shape(t):
        arr = np.broadcast_to(arr, np.shape(t))
    return np.array(arr, dtype=float)


# ---------------------------------------------------------------------------
# Symbolic derivative with constant folding
# ---------------------------------------------------------------------------

def _num(x):
    return Num(float(x))

_ZERO = Num(0.0)
_ONE = Num(1.0)


def _is(node, value):
    return isinstance(node, Num) and node.value == value


def _add(x, y):
    if isinstance(x, Num) and isinstance(y, Num):
        return _num(x.value + y.value)
    if _is(x, 0.0):
        return y
    if _is(y, 0.0):
        return x
    return Bin("+", x, y)


def _sub(x, y):
    if isinstance(x, Num) and isinstance(y, Num):
        return _num(x.value - y.value)
    if _is(y, 0.0):
        return x
    if _is(x, 0.0):
        return Neg(y)
    return Bin("-", x, y)


def _mul(x, y):
    if isinstance(x, Num) and isinstance(y, Num):
        return _num(x.value * y.value)
    if _is(x, 0.0) or _is(y, 0.0):
        return _ZERO
    if _is(x, 1.0):
        return y
    if _is(y, 1.0):
        return x
    return Bin("*", x, y)


def _div(x, y):
    if isinstance(x, Num) and isinstance(y, Num) and y.value != 0:
        return _num(x.value / y.value)
    if _is(x, 0.0) and not _is(y, 0.0):
        return _ZERO
    if _is(y, 1.0):
        return x
    return Bin("/", x, y)


def _pow(x, y):
    if _is(y, 1.0):
        return x
    if _is(y, 0.0):
        return _ONE
    return Bin("^", x, y)


def _neg(x):
    if isinstance(x, Num):
        return _num(-x.value)
    if isinstance(x, Neg):
        return x.arg
    return Neg(x)


def differentiate(expr: Expr) -> Expr:
    """Symbolic d/dt.  Folds literal arithmetic, nothing more.

    Raises NonDifferentiableError for abs.
    """
    if isinstance(expr, Num):
        return _ZERO
    if isinstance(expr, Var):
        return _ONE
    if isinstance(expr, Neg):
        return _neg(differentiate(expr.arg))
    if isinstance(expr, Bin):
        u, v = expr.lhs, expr.rhs
        if expr.op == "+":
            return _add(differentiate(u), differentiate(v))
        if expr.op == "-":
            return _sub(differentiate(u), differentiate(v))
        if expr.op == "*":
            return _add(_mul(differentiate(u), v), _mul(u, differentiate(v)))
        if expr.op == "/":
            num = _sub(_mul(differentiate(u), v), _mul(u, differentiate(v)))
            return _div(num, _pow(v, _num(2.0)))
        if isinstance(v, Num):
            # d(u^c) = c u^(c-1) u'
            return _mul(_mul(v, _pow(u, _num(v.value - 1.0))), differentiate(u))
        # d(u^v) = u^v (v' log u + v u'/u)
        term = _add(_mul(differentiate(v), Call("log", u)),
                    _mul(v, _div(differentiate(u), u)))
        return _mul(_pow(u, v), term)
    du = differentiate(expr.arg)
    fn = expr.fn
    if fn == "sin":
        return _mul(Call("cos", expr.arg), du)
    if fn == "cos":
        return _neg(_mul(Call("sin", expr.arg), du))
    if fn == "tan":
        return _div(du, _pow(Call("cos", expr.arg), _num(2.0)))
    if fn == "exp":
        return _mul(Call("exp", expr.arg), du)
    if fn == "log":
        return _div(du, expr.arg)
    if fn == "sqrt":
        return _div(du, _mul(_num(2.0), Call("sqrt", expr.arg)))
    raise NonDifferentiableError("abs has no symbolic derivative; use smooth profiles")


# ---------------------------------------------------------------------------
# Canonical serializer
# ---------------------------------------------------------------------------

def _prec(node):
    if isinstance(node, Bin):
        return {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def _wrap(child, parent_prec):
    s = to_string(child)
    # parenthesise unless the child binds strictly tighter: exact grouping
    # survives the round trip, which is what the evaluator contract needs
    if _prec(child) > parent_prec:
        return s
    return f"({s})"


def to_string(expr: Expr) -> str:
    """Serialize so that parse(to_string(e)) evaluates identically to e."""
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, Var):
        return "t"
    if isinstance(expr, Neg):
        return "-" + _wrap(expr.arg, 3)
    if isinstance(expr, Bin):
        p = _prec(expr)
        return f"{_wrap(expr.lhs, p)} {expr.op} {_wrap(expr.rhs, p)}"
    return f"{expr.fn}({to_string(expr.arg)})"
