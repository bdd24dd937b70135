"""Arithmetic expressions for fields on a grid and functions of a parameter.

Grammar (recursive descent)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := atom ('^' number)?
    atom   := number | variable | 'pi' | func '(' expr ')' | '(' expr ')' | '-' atom
    func   := 'sin' | 'cos' | 'exp'

Variables are ``x1 .. xd`` by default; a parameter name such as ``t`` can be
allowed instead. Because unary minus binds inside ``atom``, ``-x1^2`` reads as
``(-x1)^2``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import ExpressionSyntaxError
from .grid import ScalarField, TorusGrid

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
CONSTANTS = {"pi": math.pi}

_TOKEN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        pos = 0
        while pos < len(line):
            if line[pos:].strip() == "":
                break
            m = _TOKEN.match(line, pos)
            if not m or m.end() == pos:
                col = pos + len(line[pos:]) - len(line[pos:].lstrip()) + 1
                raise ExpressionSyntaxError(f"unexpected character {line[col - 1]!r}", lineno, col)
            kind = m.lastgroup
            tokens.append(_Token(kind, m.group(kind), lineno, m.start(kind) + 1))
            pos = m.end()
    lines = text.split("\n")
    tokens.append(_Token("end", "", len(lines), len(lines[-1]) + 1))
    return tokens


class _Parser:
    def __init__(self, text, variables):
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = variables

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, message, tok=None):
        tok = tok or self.tok
        return ExpressionSyntaxError(message, tok.line, tok.column)

    def take(self):
        tok = self.tok
        self.i += 1
        return tok

    def expect(self, text):
        if self.tok.text != text:
            found = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
            raise self.error(f"expected {text!r}, found {found}")
        return self.take()

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-"):
            op = self.take().text
            rhs = self.term()
            node = ("add" if op == "+" else "sub", node, rhs)
        return node

    def term(self):
        node = self.factor()
        while self.tok.text in ("*", "/"):
            op = self.take().text
            rhs = self.factor()
            node = ("mul" if op == "*" else "div", node, rhs)
        return node

    def factor(self):
        node = self.atom()
        if self.tok.text == "^":
            self.take()
            if self.tok.kind != "number":
                raise self.error("exponent must be a number")
            node = ("pow", node, float(self.take().text))
        return node

    def atom(self):
        tok = self.tok
        if tok.kind == "number":
            self.take()
            return ("num", float(tok.text))
        if tok.text == "-":
            self.take()
            return ("neg", self.atom())
        if tok.text == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "name":
            self.take()
            if tok.text in FUNCTIONS:
                self.expect("(")
                if self.tok.text == ")":
                    raise self.error(f"{tok.text} takes exactly one argument, got none")
                arg = self.expr()
                if self.tok.text == ",":
                    raise self.error(f"{tok.text} takes exactly one argument")
                self.expect(")")
                return ("call", tok.text, arg)
            if tok.text in CONSTANTS:
                return ("num", CONSTANTS[tok.text])
            if tok.text in self.variables:
                return ("var", tok.text)
            allowed = ", ".join(self.variables) or "none"
            raise self.error(f"unknown identifier {tok.text!r} (variables: {allowed})", tok)
        if tok.kind == "end":
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected {tok.text!r}")


def _compile(node) -> Callable[[dict], np.ndarray]:
    kind = node[0]
    if kind == "num":
        value = node[1]
        return lambda env: value
    if kind == "var":
        name = node[1]
        return lambda env: env[name]
    if kind == "neg":
        inner = _compile(node[1])
        return lambda env: -inner(env)
    if kind == "call":
        func, arg = FUNCTIONS[node[1]], _compile(node[2])
        return lambda env: func(arg(env))
    if kind == "pow":
        base, p = _compile(node[1]), node[2]
        return lambda env: np.power(base(env), p)
    lhs, rhs = _compile(node[1]), _compile(node[2])
    op = {"add": np.add, "sub": np.subtract, "mul": np.multiply, "div": np.divide}[kind]
    return lambda env: op(lhs(env), rhs(env))


@dataclass(frozen=True)
class FieldExpression:
    """A parsed expression; evaluate with keyword arguments for each variable."""

    source: str
    tree: tuple
    variables: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "_fn", _compile(self.tree))

    def __call__(self, **env):
        with np.errstate(all="ignore"):
            return self._fn(env)

    def on_grid(self, grid: TorusGrid) -> ScalarField:
        """Evaluate once at every lattice site."""
        coords = grid.coordinates()
        env = {f"x{i + 1}": c for i, c in enumerate(coords)}
        return grid.field(np.broadcast_to(np.asarray(self(**env), dtype=float), grid.shape))

    def as_function(self, name: str = "t") -> Callable[[float], float]:
        return lambda v: float(self(**{name: v}))


def parse_expression(text: str, variables=None, d: int | None = None) -> FieldExpression:
    """Parse ``text``; ``variables`` defaults to ``x1 .. xd`` (``d`` defaults to 9).

    Raises
    ------
    ExpressionSyntaxError
        With the line and column of the offending token.
    """
    if variables is None:
        variables = tuple(f"x{i}" for i in range(1, (9 if d is None else d) + 1))
    variables = tuple(variables)
    tree = _Parser(text, variables).parse()
    return FieldExpression(text, tree, variables)
