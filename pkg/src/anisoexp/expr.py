"""Small analytic expression language for coefficient entries and source terms.

Grammar (whitespace is ignored)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('+' | '-') unary | power
    power   := atom ('^' ['-'] INTEGER)?
    atom    := NUMBER | 'pi' | VAR | FUNC '(' expr ')' | '(' expr ')'

Variables are ``x1`` .. ``xN``; functions are ``sin``, ``cos`` and ``exp``.
Exponents must be integer literals. A negative exponent is the reciprocal
of the positive power.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Pow",
    "Call",
    "ScalarExpr",
    "ExprSyntaxError",
    "ExprEvalError",
    "parse",
    "evaluate",
    "to_string",
    "variables",
    "is_zero",
    "is_constant",
]

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}


class ExprSyntaxError(ValueError):
    """Raised for malformed expression text; carries the character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class ExprEvalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Const, Var, Neg, BinOp, Pow, Call]


@dataclass(frozen=True)
class ScalarExpr:
    """Parsed expression bound to a dimension ``nvars``."""

    ast: Node
    nvars: int
    text: str = ""

    def __post_init__(self):
        bad = [i for i in variables(self.ast) if not 1 <= i <= self.nvars]
        if bad:
            raise ValueError(f"unknown variable x{bad[0]}")

    def __call__(self, points):
        return evaluate(self, points)

    def __str__(self):
        return to_string(self.ast)

    def structurally_equal(self, other: "ScalarExpr") -> bool:
        return self.nvars == other.nvars and self.ast == other.ast


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)
_VAR = re.compile(r"x(\d+)")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, nvars: int):
        self.text = text
        self.nvars = nvars
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.tok
        if val != value or kind == "end":
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos)
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        kind, val, pos = self.tok
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.advance()[1]
            operand = self.unary()
            return Neg(operand) if op == "-" else operand
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.advance()
            sign = 1
            if self.tok[0] == "op" and self.tok[1] == "-":
                self.advance()
                sign = -1
            kind, val, pos = self.tok
            if kind != "num" or not val.isdigit():
                raise ExprSyntaxError("exponent must be an integer literal", pos)
            self.advance()
            base = Pow(base, sign * int(val))
            if self.tok[0] == "op" and self.tok[1] == "^":
                raise ExprSyntaxError("chained '^' is ambiguous; use parentheses", self.tok[2])
        return base

    def atom(self) -> Node:
        kind, val, pos = self.tok
        if kind == "num":
            self.advance()
            return Const(float(val))
        if kind == "name":
            self.advance()
            if val == "pi":
                return Const(math.pi)
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            m = _VAR.fullmatch(val)
            if m:
                index = int(m.group(1))
                if not 1 <= index <= self.nvars:
                    raise ExprSyntaxError(f"unknown variable {val}", pos)
                return Var(index)
            raise ExprSyntaxError(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {found}", pos)


def parse(text: str, nvars: int) -> ScalarExpr:
    """Parse ``text`` into a :class:`ScalarExpr` over variables ``x1..x{nvars}``.

    >>> parse("sin(x1)*sin(x2)", 2).ast
    BinOp(op='*', left=Call(func='sin', arg=Var(index=1)), right=Call(func='sin', arg=Var(index=2)))
    """
    if nvars < 2:
        raise ValueError("nvars must be at least 2")
    return ScalarExpr(_Parser(text, nvars).parse(), nvars, text)


# ---------------------------------------------------------------------------
# evaluation


def _eval(node: Node, coords):
    if isinstance(node, Const):
        return np.float64(node.value)
    if isinstance(node, Var):
        return coords[..., node.index - 1]
    if isinstance(node, Neg):
        return -_eval(node.operand, coords)
    if isinstance(node, BinOp):
        left = _eval(node.left, coords)
        right = _eval(node.right, coords)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if np.any(right == 0):
            raise ExprEvalError("division by zero")
        return left / right
    if isinstance(node, Pow):
        base = _eval(node.base, coords)
        n = abs(node.exponent)
        result = np.ones_like(base, dtype=np.float64) if n == 0 else base
        for _ in range(n - 1):
            result = result * base
        if node.exponent < 0:
            if np.any(result == 0):
                raise ExprEvalError("division by zero in negative power")
            result = 1.0 / result
        return result
    if isinstance(node, Call):
        return FUNCTIONS[node.func](_eval(node.arg, coords))
    raise TypeError(f"unknown node {node!r}")


def evaluate(e: ScalarExpr, points) -> np.ndarray | float:
    """Evaluate ``e`` at ``points`` whose last axis has length ``e.nvars``.

    A single point returns a float; a stack of points returns an array with
    the leading shape of ``points``.
    """
    coords = np.asarray(points, dtype=np.float64)
    if coords.shape[-1:] != (e.nvars,):
        raise ValueError(f"expected points with last axis {e.nvars}, got shape {coords.shape}")
    with np.errstate(all="ignore"):
        value = _eval(e.ast, coords)
    value = np.broadcast_to(value, coords.shape[:-1]).astype(np.float64)
    if coords.ndim == 1:
        return float(value)
    return value


# ---------------------------------------------------------------------------
# inspection


def to_string(node: Node) -> str:
    """Print ``node`` fully parenthesised so that re-parsing is lossless."""
    if isinstance(node, Const):
        if node.value == math.pi:
            return "pi"
        return repr(float(node.value))
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Neg):
        return f"(-{to_string(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_string(node.left)} {node.op} {to_string(node.right)})"
    if isinstance(node, Pow):
        return f"({to_string(node.base)}^{node.exponent})"
    if isinstance(node, Call):
        return f"{node.func}({to_string(node.arg)})"
    raise TypeError(f"unknown node {node!r}")


def variables(node: Node) -> set[int]:
    """1-based indices of all variables referenced by ``node``."""
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, Const):
        return set()
    if isinstance(node, (Neg,)):
        return variables(node.operand)
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    if isinstance(node, Pow):
        return variables(node.base)
    if isinstance(node, Call):
        return variables(node.arg)
    raise TypeError(f"unknown node {node!r}")


def is_zero(e: ScalarExpr | Node) -> bool:
    """Syntactic zero test: a literal 0, possibly negated."""
    node = e.ast if isinstance(e, ScalarExpr) else e
    while isinstance(node, Neg):
        node = node.operand
    return isinstance(node, Const) and node.value == 0.0


def is_constant(e: ScalarExpr | Node) -> bool:
    node = e.ast if isinstance(e, ScalarExpr) else e
    return not variables(node)
