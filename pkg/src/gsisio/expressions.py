"""A small arithmetic expression language for field and signal formulas.

Grammar (conventional precedence, left associative):

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | atom
    atom   := NUMBER | VARIABLE | FUNCNAME '(' expr ')' | '(' expr ')'

Numbers are decimal with optional fraction and exponent. State
variables are x1 .. xn; time signals use the single variable k.
Functions: sin, cos, tanh, exp. Division by a literal zero is a parse
error; all errors carry the offending source position.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "BinaryOp",
    "Call",
    "ExpressionAst",
    "Number",
    "ParseError",
    "UnaryNeg",
    "Variable",
    "evaluate",
    "parse_expression",
    "parse_time_expression",
    "to_source",
]

_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "exp": np.exp,
}


class ParseError(ValueError):
    """Syntax or name error with the 0-based source position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class UnaryNeg:
    operand: "ExpressionAst"


@dataclass(frozen=True)
class BinaryOp:
    op: str  # one of + - * /
    left: "ExpressionAst"
    right: "ExpressionAst"


@dataclass(frozen=True)
class Call:
    func: str
    argument: "ExpressionAst"


ExpressionAst = Union[Number, Variable, UnaryNeg, BinaryOp, Call]


_TOKEN_NUM = "num"
_TOKEN_NAME = "name"
_TOKEN_OP = "op"
_TOKEN_END = "end"


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    while i < len(src):
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < len(src) and src[i + 1].isdigit()):
            j = i
            while j < len(src) and (src[j].isdigit() or src[j] == "."):
                j += 1
            if j < len(src) and src[j] in "eE":
                k = j + 1
                if k < len(src) and src[k] in "+-":
                    k += 1
                if k < len(src) and src[k].isdigit():
                    j = k
                    while j < len(src) and src[j].isdigit():
                        j += 1
            text = src[i:j]
            try:
                float(text)
            except ValueError:
                raise ParseError(f"malformed number {text!r}", i) from None
            tokens.append((_TOKEN_NUM, text, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < len(src) and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append((_TOKEN_NAME, src[i:j], i))
            i = j
            continue
        if c in "+-*/()":
            tokens.append((_TOKEN_OP, c, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append((_TOKEN_END, "", len(src)))
    return tokens


def _is_literal_zero(node: ExpressionAst) -> bool:
    while isinstance(node, UnaryNeg):
        node = node.operand
    return isinstance(node, Number) and node.value == 0.0


class _Parser:
    def __init__(self, src: str, variables: frozenset[str]):
        self.tokens = _tokenize(src)
        self.pos = 0
        self.variables = variables

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str) -> None:
        kind, text, at = self.peek()
        if kind != _TOKEN_OP or text != op:
            raise ParseError(f"expected {op!r}, found {text or 'end of input'!r}", at)
        self.advance()

    def parse(self) -> ExpressionAst:
        node = self.expr()
        kind, text, at = self.peek()
        if kind != _TOKEN_END:
            raise ParseError(f"unexpected trailing input {text!r}", at)
        return node

    def expr(self) -> ExpressionAst:
        node = self.term()
        while True:
            kind, text, at = self.peek()
            if kind == _TOKEN_OP and text in "+-":
                self.advance()
                node = BinaryOp(text, node, self.term())
            else:
                return node

    def term(self) -> ExpressionAst:
        node = self.factor()
        while True:
            kind, text, at = self.peek()
            if kind == _TOKEN_OP and text in "*/":
                self.advance()
                right = self.factor()
                if text == "/" and _is_literal_zero(right):
                    raise ParseError("division by literal zero", at)
                node = BinaryOp(text, node, right)
            else:
                return node

    def factor(self) -> ExpressionAst:
        kind, text, at = self.peek()
        if kind == _TOKEN_OP and text == "-":
            self.advance()
            return UnaryNeg(self.factor())
        return self.atom()

    def atom(self) -> ExpressionAst:
        kind, text, at = self.advance()
        if kind == _TOKEN_NUM:
            return Number(float(text))
        if kind == _TOKEN_NAME:
            if text in _FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(text, arg)
            if text in self.variables:
                return Variable(text)
            raise ParseError(f"unknown name {text!r}", at)
        if kind == _TOKEN_OP and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ParseError(
            f"expected a value, found {text or 'end of input'!r}", at
        )


def parse_expression(src: str, n: int) -> ExpressionAst:
    """Parse a state expression over the variables x1 .. xn."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    names = frozenset(f"x{i + 1}" for i in range(n))
    return _Parser(src, names).parse()


def parse_time_expression(src: str) -> ExpressionAst:
    """Parse a time-signal expression over the single variable k."""
    return _Parser(src, frozenset(("k",))).parse()


def evaluate(node: ExpressionAst, env: dict[str, np.ndarray | float]):
    """Evaluate an AST over scalars or numpy arrays from env."""
    if isinstance(node, Number):
        return node.value
    if isinstance(node, Variable):
        return env[node.name]
    if isinstance(node, UnaryNeg):
        return -evaluate(node.operand, env)
    if isinstance(node, Call):
        return _FUNCTIONS[node.func](evaluate(node.argument, env))
    if isinstance(node, BinaryOp):
        left = evaluate(node.left, env)
        right = evaluate(node.right, env)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        return np.divide(left, right)
    raise TypeError(f"not an expression node: {node!r}")


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def _emit(node: ExpressionAst, parent_prec: int, right_side: bool) -> str:
    if isinstance(node, Number):
        return repr(node.value)
    if isinstance(node, Variable):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({_emit(node.argument, 0, False)})"
    if isinstance(node, UnaryNeg):
        inner = _emit(node.operand, 3, False)
        text = f"-{inner}"
        # a negation below a product or on the right of anything binds
        # visually wrong without parentheses
        return f"({text})" if parent_prec >= 2 or right_side else text
    if isinstance(node, BinaryOp):
        prec = _PRECEDENCE[node.op]
        left = _emit(node.left, prec, False)
        right = _emit(node.right, prec, True)
        text = f"{left} {node.op} {right}"
        if prec < parent_prec or (prec == parent_prec and right_side):
            return f"({text})"
        return text
    raise TypeError(f"not an expression node: {node!r}")


def to_source(node: ExpressionAst) -> str:
    """Render an AST back to parseable source.

    Re-parsing the result yields an expression that evaluates
    identically; parenthesization is minimal up to that guarantee.
    """
    return _emit(node, 0, False)
