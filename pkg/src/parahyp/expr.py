"""Small expression language for coefficient functions of one variable ``t``.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?          # right-associative
    primary := NUMBER | 't' | 'pi' | 'e' | FUNC '(' expr ')' | '(' expr ')'

with ``FUNC`` one of ``sin``, ``cos``, ``exp``, ``sqrt``. There is no unary
plus and no implicit multiplication.

Evaluation is vectorised over numpy arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "ExprError",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "EvaluationError",
    "Node",
    "Num",
    "Var",
    "Const",
    "Neg",
    "BinOp",
    "Call",
    "parse",
    "to_source",
]

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt}
CONSTANTS = {"pi": math.pi, "e": math.e}
VARIABLE = "t"


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    """Malformed expression text; ``pos`` is the 0-based character offset."""

    def __init__(self, message: str, pos: int, src: str = ""):
        self.pos = pos
        self.src = src
        super().__init__(f"{message} at offset {pos}")


class UnknownIdentifierError(ExprSyntaxError):
    pass


class EvaluationError(ExprError, ArithmeticError):
    """Evaluation produced a non-finite value (e.g. division by zero)."""


# --- tree -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float

    def eval(self, t):
        return np.full(np.shape(t), self.value, dtype=float)


@dataclass(frozen=True)
class Var:
    def eval(self, t):
        return np.asarray(t, dtype=float) * 1.0


@dataclass(frozen=True)
class Const:
    name: str

    def eval(self, t):
        return np.full(np.shape(t), CONSTANTS[self.name], dtype=float)


@dataclass(frozen=True)
class Neg:
    operand: "Node"

    def eval(self, t):
        return -self.operand.eval(t)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"

    def eval(self, t):
        a = self.left.eval(t)
        b = self.right.eval(t)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        return np.power(a, b)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"

    def eval(self, t):
        return FUNCTIONS[self.func](self.arg.eval(t))


Node = Union[Num, Var, Const, Neg, BinOp, Call]


# --- tokenizer --------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", pos, src)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def _error(self, message: str, pos: int | None = None):
        return ExprSyntaxError(message, self.tok[2] if pos is None else pos, self.src)

    def _accept(self, kind: str, text: str | None = None) -> bool:
        k, v, _ = self.tok
        if k == kind and (text is None or v == text):
            self.i += 1
            return True
        return False

    def _expect_op(self, text: str) -> None:
        if not self._accept("op", text):
            k, v, p = self.tok
            got = "end of input" if k == "end" else repr(v)
            raise self._error(f"expected {text!r}, got {got}")

    def parse(self) -> Node:
        if self.tok[0] == "end":
            raise self._error("empty expression")
        node = self.expr()
        if self.tok[0] != "end":
            raise self._error(f"unexpected token {self.tok[1]!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.tok[1]
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.tok[1]
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self._accept("op", "-"):
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if self._accept("op", "^"):
            return BinOp("^", base, self.unary())
        return base

    def primary(self) -> Node:
        kind, text, pos = self.tok
        if kind == "num":
            self.i += 1
            value = float(text)
            if not math.isfinite(value):
                raise self._error(f"numeric literal {text!r} overflows", pos)
            return Num(value)
        if kind == "name":
            self.i += 1
            if text == VARIABLE:
                return Var()
            if text in CONSTANTS:
                return Const(text)
            if text in FUNCTIONS:
                if not (self.tok[0] == "op" and self.tok[1] == "("):
                    raise self._error(f"function {text!r} requires '('")
                self.i += 1
                arg = self.expr()
                self._expect_op(")")
                return Call(text, arg)
            raise UnknownIdentifierError(f"unknown identifier {text!r}", pos, self.src)
        if self._accept("op", "("):
            node = self.expr()
            self._expect_op(")")
            return node
        if kind == "end":
            raise self._error("unexpected end of input")
        raise self._error(f"unexpected token {text!r}")


def parse(src: str) -> Node:
    """Parse expression text into a tree.

    Raises :class:`ExprSyntaxError` (with ``pos``) for malformed input and
    :class:`UnknownIdentifierError` for names outside the grammar.
    """
    if not isinstance(src, str):
        raise TypeError(f"expected str, got {type(src).__name__}")
    return _Parser(src).parse()


# --- printer ----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg) or (isinstance(node, Num) and node.value < 0):
        return _PREC["neg"]
    return 5


def to_source(node: Node) -> str:
    """Print a tree back to text that parses to an equivalent tree."""
    if isinstance(node, Num):
        if node.value < 0 or (node.value == 0 and math.copysign(1, node.value) < 0):
            return "-" + repr(-node.value)
        return repr(node.value)
    if isinstance(node, Var):
        return VARIABLE
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Neg):
        inner = to_source(node.operand)
        # the operand of unary minus is itself unary-level
        if _prec(node.operand) < _PREC["neg"]:
            inner = f"({inner})"
        return "-" + inner
    p = _PREC[node.op]
    left, right = to_source(node.left), to_source(node.right)
    if node.op == "^":
        # base must be a primary; exponent may be unary-level
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) < _PREC["neg"]:
            right = f"({right})"
    else:
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
    return f"{left}{node.op}{right}"
