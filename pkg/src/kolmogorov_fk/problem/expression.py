"""Infix expression parser for user-supplied coefficients.

Grammar (``^`` and ``**`` are the same operator, right associative)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := number | 't' | 'x<k>' | 'pi' | func '(' expr (',' expr)* ')' | '(' expr ')'

``func`` is one of exp, log, sqrt, abs, sin, cos, tanh (one argument) or
min, max (two or more).  Evaluation is vectorised over rows of ``X``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Tuple

import numpy as np

UNARY_FUNCS = ("exp", "log", "sqrt", "abs", "sin", "cos", "tanh")
VARIADIC_FUNCS = ("min", "max")


class ExpressionSyntaxError(ValueError):
    def __init__(self, message, position, source):
        super().__init__(f"{message} at position {position}: {source!r}")
        self.position = position
        self.source = source


class ExpressionDomainError(ArithmeticError):
    """Raised when an operation leaves its domain; carries the offending row and point."""

    def __init__(self, message, index=None, point=None):
        where = ""
        if point is not None:
            where = f" at row {index}, point {tuple(float(v) for v in point)}"
        super().__init__(message + where)
        self.index = index
        self.point = point


@dataclass(frozen=True)
class Node:
    kind: str  # const | var | neg | add | sub | mul | div | pow | func
    value: float = 0.0
    name: str = ""
    index: int = 0  # 0 means t, k >= 1 means x_k
    args: Tuple["Node", ...] = ()


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(src):
    tokens = []
    pos = 0
    n = len(src)
    while pos < n:
        if src[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            raise ExpressionSyntaxError(f"unexpected character {src[pos]!r}", pos, src)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, src, d):
        self.src = src
        self.d = d
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            raise ExpressionSyntaxError(f"expected {value!r}, found {found}", pos, self.src)

    def parse(self):
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected token {text!r}", pos, self.src)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Node("add" if op == "+" else "sub", args=(node, self.term()))
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Node("mul" if op == "*" else "div", args=(node, self.unary()))
        return node

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Node("neg", args=(self.unary(),))
        if kind == "op" and text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text in ("^", "**"):
            self.take()
            return Node("pow", args=(base, self.unary()))
        return base

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            value = float(text)
            if not math.isfinite(value):
                raise ExpressionSyntaxError(f"literal {text} overflows", pos, self.src)
            return Node("const", value=value)
        if kind == "id":
            if text == "t":
                return Node("var", name="t", index=0)
            if text == "pi":
                return Node("const", value=math.pi)
            m = re.fullmatch(r"x([1-9]\d*)", text)
            if m:
                k = int(m.group(1))
                if k > self.d:
                    raise ExpressionSyntaxError(
                        f"variable {text} exceeds dimension d={self.d}", pos, self.src
                    )
                return Node("var", name=text, index=k)
            if text in UNARY_FUNCS or text in VARIADIC_FUNCS:
                self.expect("(")
                args = [self.expr()]
                while self.peek()[0] == "op" and self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if text in UNARY_FUNCS and len(args) != 1:
                    raise ExpressionSyntaxError(f"{text} takes one argument", pos, self.src)
                if text in VARIADIC_FUNCS and len(args) < 2:
                    raise ExpressionSyntaxError(f"{text} takes at least two arguments", pos, self.src)
                return Node("func", name=text, args=tuple(args))
            raise ExpressionSyntaxError(f"unknown identifier {text!r}", pos, self.src)
        if kind == "op" and text == "(":
            node = self.expr()
            if self.peek()[1] != ")" or self.peek()[0] != "op":
                raise ExpressionSyntaxError("unbalanced parenthesis", pos, self.src)
            self.take()
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExpressionSyntaxError(f"unexpected {found}", pos, self.src)


def _domain_fail(mask, X, message):
    idx = int(np.flatnonzero(mask)[0])
    raise ExpressionDomainError(message, idx, X[idx])


class ExpressionTree:
    """Parsed expression over ``t, x1..xd``."""

    def __init__(self, root: Node, d: int, source: str = ""):
        self.root = root
        self.d = d
        self.source = source

    def __repr__(self):
        return f"ExpressionTree({self.to_text()!r}, d={self.d})"

    def variables(self):
        """Set of referenced variable indices (0 is t)."""
        found = set()

        def walk(node):
            if node.kind == "var":
                found.add(node.index)
            for a in node.args:
                walk(a)

        walk(self.root)
        return found

    def max_index(self):
        return max(self.variables(), default=0)

    def depends_on_x(self):
        return self.max_index() > 0

    def depends_on_t(self):
        return 0 in self.variables()

    def evaluate(self, t, X):
        """Evaluate at time ``t`` (scalar) and points ``X`` of shape (n, d); returns (n,)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        n = X.shape[0]
        with np.errstate(all="ignore"):
            out = self._eval(self.root, float(t), X)
        return np.broadcast_to(np.asarray(out, dtype=np.float64), (n,)).copy()

    def __call__(self, t, X):
        return self.evaluate(t, X)

    def _eval(self, node, t, X):
        k = node.kind
        if k == "const":
            return node.value
        if k == "var":
            return t if node.index == 0 else X[:, node.index - 1]
        if k == "neg":
            return -self._eval(node.args[0], t, X)
        if k == "func":
            vals = [self._eval(a, t, X) for a in node.args]
            return self._func(node.name, vals, X)
        a = self._eval(node.args[0], t, X)
        b = self._eval(node.args[1], t, X)
        if k == "add":
            return a + b
        if k == "sub":
            return a - b
        if k == "mul":
            return a * b
        if k == "div":
            bad = np.broadcast_to(np.asarray(b) == 0.0, (X.shape[0],))
            if bad.any():
                _domain_fail(bad, X, "division by zero")
            return a / b
        # pow
        a_arr = np.asarray(a, dtype=np.float64)
        b_arr = np.asarray(b, dtype=np.float64)
        bad = (a_arr < 0) & (b_arr != np.round(b_arr))
        bad = bad | ((a_arr == 0) & (b_arr < 0))
        bad = np.broadcast_to(bad, (X.shape[0],))
        if bad.any():
            _domain_fail(bad, X, "power outside its domain")
        return np.power(a_arr, b_arr)

    @staticmethod
    def _func(name, vals, X):
        n = X.shape[0]
        if name == "min":
            return np.minimum.reduce([np.broadcast_to(v, (n,)) for v in vals])
        if name == "max":
            return np.maximum.reduce([np.broadcast_to(v, (n,)) for v in vals])
        v = np.asarray(vals[0], dtype=np.float64)
        if name == "log":
            bad = np.broadcast_to(v <= 0, (n,))
            if bad.any():
                _domain_fail(bad, X, "log of a non-positive value")
            return np.log(v)
        if name == "sqrt":
            bad = np.broadcast_to(v < 0, (n,))
            if bad.any():
                _domain_fail(bad, X, "sqrt of a negative value")
            return np.sqrt(v)
        return getattr(np, name)(v)

    def to_text(self):
        """Fully parenthesised source that reparses to the same values."""
        return _to_text(self.root)


def _to_text(node):
    k = node.kind
    if k == "const":
        v = node.value
        return repr(v) if v >= 0 else f"(-{repr(-v)})"
    if k == "var":
        return node.name
    if k == "neg":
        return f"(-{_to_text(node.args[0])})"
    if k == "func":
        return f"{node.name}(" + ", ".join(_to_text(a) for a in node.args) + ")"
    op = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}[k]
    return f"({_to_text(node.args[0])} {op} {_to_text(node.args[1])})"


def parse_expression(src: str, d: int) -> ExpressionTree:
    """Parse ``src`` as an expression over ``t, x1..xd``.

    >>> parse_expression("x1^2 + 1", 1).evaluate(0.0, [[2.0]])
    array([5.])
    """
    if d < 1:
        raise ValueError("dimension must be at least 1")
    root = _Parser(src, d).parse()
    return ExpressionTree(root, d, src)
