"""Closed-form expressions in the time variables s and t.

A small fixed grammar: decimal literals, the variables ``s`` and ``t``,
the operators ``+ - * / ^`` (with ``^`` right-associative and binding
tighter than ``*``/``/``), unary minus, and a whitelist of elementary
functions.  ``-t^2`` parses as ``-(t^2)``; a negative base needs
parentheses, as in ``(-t)^2``.

Parsed expressions are immutable and evaluation is pure, so they can be
shared freely across threads.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

__all__ = [
    "TimeExpr",
    "parse",
    "restrict_variables",
    "ExprError",
    "ExprSyntaxError",
    "EvalDomainError",
    "FUNCTIONS",
]


class ExprError(Exception):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    """Raised when the input text does not match the grammar."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalDomainError(ExprError):
    """Raised when evaluation hits a point outside a function's domain."""

    def __init__(self, message: str, subexpr: "Node"):
        super().__init__(f"{message} in `{_to_str(subexpr, 0)}`")
        self.subexpr = subexpr


FUNCTIONS = {
    "exp": math.exp,
    "log": math.log,
    "sin": math.sin,
    "cos": math.cos,
    "sqrt": math.sqrt,
    "abs": abs,
}

VARIABLES = ("s", "t")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    lhs: "Node"
    rhs: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Call]

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            # allow trailing whitespace
            if text[pos:].strip() == "":
                break
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return (None, None, len(self.text))

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, value, offset = self.next()
        if kind != "op" or value != op:
            raise ExprSyntaxError(f"expected {op!r}", offset)

    def parse(self) -> Node:
        node = self.expr()
        kind, value, offset = self.peek()
        if kind is not None:
            raise ExprSyntaxError(f"unexpected trailing input {value!r}", offset)
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.next()
                node = BinOp(value, node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.next()
                node = BinOp(value, node, self.unary())
            else:
                return node

    def unary(self) -> Node:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.next()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.next()
            # right-associative; exponent may carry a unary minus (2^-3)
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, value, offset = self.next()
        if kind == "num":
            return Num(float(value))
        if kind == "name":
            nkind, nvalue, _ = self.peek()
            if nkind == "op" and nvalue == "(":
                if value not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function `{value}`", offset)
                self.next()
                arg = self.expr()
                self.expect_op(")")
                return Call(value, arg)
            if value not in VARIABLES:
                raise ExprSyntaxError(f"unknown identifier `{value}`", offset)
            return Var(value)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExprSyntaxError("expected a number, variable or '('", offset)


# precedence levels for printing
_LEVEL_ADD, _LEVEL_MUL, _LEVEL_UNARY, _LEVEL_POW, _LEVEL_ATOM = 1, 2, 3, 4, 5


def _level(node: Node) -> int:
    if isinstance(node, (Num, Var, Call)):
        return _LEVEL_ATOM
    if isinstance(node, Neg):
        return _LEVEL_UNARY
    return _LEVEL_ADD if node.op in "+-" else (_LEVEL_MUL if node.op in "*/" else _LEVEL_POW)


def _fmt_num(value: float) -> str:
    text = repr(value)
    if text.startswith("-"):
        # negative literals do not exist in the grammar
        return f"(0{text})"
    if text in ("inf", "nan"):
        raise ValueError(f"cannot print non-finite literal {text}")
    return text


def _to_str(node: Node, parent_level: int) -> str:
    if isinstance(node, Num):
        text = _fmt_num(node.value)
    elif isinstance(node, Var):
        text = node.name
    elif isinstance(node, Call):
        text = f"{node.func}({_to_str(node.arg, 0)})"
    elif isinstance(node, Neg):
        text = "-" + _to_str(node.operand, _LEVEL_UNARY)
    else:
        if node.op in "+-":
            lhs = _to_str(node.lhs, _LEVEL_ADD)
            rhs = _to_str(node.rhs, _LEVEL_ADD + 1)
        elif node.op in "*/":
            lhs = _to_str(node.lhs, _LEVEL_MUL)
            rhs = _to_str(node.rhs, _LEVEL_MUL + 1)
        else:
            # ^ is right-associative and its base must be an atom
            lhs = _to_str(node.lhs, _LEVEL_ATOM)
            rhs = _to_str(node.rhs, _LEVEL_UNARY)
        text = f"{lhs}{node.op}{rhs}"
    if _level(node) < parent_level:
        return f"({text})"
    return text


def _eval(node: Node, s: float, t: float) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return s if node.name == "s" else t
    if isinstance(node, Neg):
        return -_eval(node.operand, s, t)
    if isinstance(node, Call):
        arg = _eval(node.arg, s, t)
        if node.func == "log" and arg <= 0.0:
            raise EvalDomainError(f"log of non-positive value {arg}", node)
        if node.func == "sqrt" and arg < 0.0:
            raise EvalDomainError(f"sqrt of negative value {arg}", node)
        try:
            value = FUNCTIONS[node.func](arg)
        except (ValueError, OverflowError) as err:
            raise EvalDomainError(str(err), node) from err
        return _check_finite(value, node)
    lhs = _eval(node.lhs, s, t)
    rhs = _eval(node.rhs, s, t)
    if node.op == "+":
        value = lhs + rhs
    elif node.op == "-":
        value = lhs - rhs
    elif node.op == "*":
        value = lhs * rhs
    elif node.op == "/":
        if rhs == 0.0:
            raise EvalDomainError("division by zero", node)
        value = lhs / rhs
    else:
        try:
            value = math.pow(lhs, rhs)
        except (ValueError, OverflowError) as err:
            raise EvalDomainError(str(err), node) from err
    return _check_finite(value, node)


def _check_finite(value: float, node: Node) -> float:
    if not math.isfinite(value):
        raise EvalDomainError(f"non-finite result {value}", node)
    return value


def _collect_vars(node: Node, out: set[str]) -> None:
    if isinstance(node, Var):
        out.add(node.name)
    elif isinstance(node, Neg):
        _collect_vars(node.operand, out)
    elif isinstance(node, Call):
        _collect_vars(node.arg, out)
    elif isinstance(node, BinOp):
        _collect_vars(node.lhs, out)
        _collect_vars(node.rhs, out)


class TimeExpr:
    """An immutable parsed expression over the variables s and t."""

    __slots__ = ("root",)

    def __init__(self, root: Node):
        self.root = root

    def __call__(self, s: float, t: float) -> float:
        return _eval(self.root, s, t)

    def eval(self, s: float, t: float) -> float:
        return _eval(self.root, s, t)

    def eval_single(self, x: float) -> float:
        """Evaluate a single-variable expression at x (both s and t bound to x)."""
        return _eval(self.root, x, x)

    def variables(self) -> set[str]:
        out: set[str] = set()
        _collect_vars(self.root, out)
        return out

    def __str__(self) -> str:
        return _to_str(self.root, 0)

    def __repr__(self) -> str:
        return f"TimeExpr({str(self)!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, TimeExpr) and self.root == other.root

    def __hash__(self) -> int:
        return hash(self.root)


def parse(text: str) -> TimeExpr:
    """Parse text into a TimeExpr; raises ExprSyntaxError on bad input."""
    if not text or text.strip() == "":
        raise ExprSyntaxError("empty expression", 0)
    return TimeExpr(_Parser(text).parse())


def restrict_variables(expr: TimeExpr, allowed: set[str]) -> set[str]:
    """Return the set of variables used by expr but not allowed (empty = ok)."""
    return expr.variables() - set(allowed)
