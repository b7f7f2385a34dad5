"""Tiny arithmetic expressions for profiles given on the command line.

Grammar: numeric literals, pi, named variables, sin/cos/exp, the operators
+ - * / ^ and parentheses.  ^ (also accepted as **) is right-associative
and binds tighter than unary minus, so -2^2 is -4 and 2^3^2 is 512.
"""

import math
import re

import numpy as np

__all__ = ["Expression", "ExpressionError", "parse_expression"]

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()])"
    r")"
)

_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_CONSTANTS = {"pi": math.pi}


class ExpressionError(ValueError):
    """Malformed expression text."""


class Expression:
    """Parsed expression; call with keyword values for the variables it uses."""

    def __init__(self, fn, text: str, variables: tuple):
        self._fn = fn
        self.text = text
        self.variables = variables  # the variables actually referenced

    def __call__(self, **env):
        missing = [v for v in self.variables if v not in env]
        if missing:
            raise ExpressionError(f"missing variable values: {', '.join(missing)}")
        return self._fn(env)

    def unary(self, name: str):
        """Single-argument callable binding everything to ``name``."""
        others = [v for v in self.variables if v != name]
        if others:
            raise ExpressionError(
                f"expression also uses {', '.join(others)}; cannot bind to {name!r} alone")
        return lambda value: self._fn({name: value})


class _Parser:
    def __init__(self, text: str, variables: tuple):
        self.text = text
        self.variables = variables
        self.used = set()
        self.tokens = []
        pos = 0
        while pos < len(text):
            match = _TOKEN_RE.match(text, pos)
            if match is None or match.end() == pos:
                raise ExpressionError(f"bad token at position {pos}: {text[pos:pos + 10]!r}")
            self.tokens.append((match.lastgroup, match.group(match.lastgroup), pos))
            pos = match.end()
        self.index = 0

    def peek(self):
        return self.tokens[self.index] if self.index < len(self.tokens) else (None, None, len(self.text))

    def take(self):
        token = self.peek()
        self.index += 1
        return token

    def expect_op(self, op: str):
        kind, value, pos = self.take()
        if kind != "op" or value != op:
            raise ExpressionError(f"expected {op!r} at position {pos}")

    def parse(self):
        fn = self.expr()
        kind, value, pos = self.peek()
        if kind is not None:
            raise ExpressionError(f"unexpected {value!r} at position {pos}")
        return fn

    def expr(self):
        fn = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.take()
                rhs = self.term()
                fn = (lambda a, b: lambda env: a(env) + b(env))(fn, rhs) if value == "+" \
                    else (lambda a, b: lambda env: a(env) - b(env))(fn, rhs)
            else:
                return fn

    def term(self):
        fn = self.factor()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.take()
                rhs = self.factor()
                fn = (lambda a, b: lambda env: a(env) * b(env))(fn, rhs) if value == "*" \
                    else (lambda a, b: lambda env: a(env) / b(env))(fn, rhs)
            else:
                return fn

    def factor(self):
        kind, value, _ = self.peek()
        if kind == "op" and value in "+-":
            self.take()
            inner = self.factor()
            if value == "-":
                return lambda env: -inner(env)
            return inner
        return self.power()

    def power(self):
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value in ("^", "**"):
            self.take()
            exponent = self.factor()
            return lambda env: base(env) ** exponent(env)
        return base

    def atom(self):
        kind, value, pos = self.take()
        if kind == "number":
            number = float(value)
            return lambda env: number
        if kind == "name":
            if value in _FUNCTIONS:
                func = _FUNCTIONS[value]
                self.expect_op("(")
                inner = self.expr()
                self.expect_op(")")
                return lambda env: func(inner(env))
            if value in _CONSTANTS:
                constant = _CONSTANTS[value]
                return lambda env: constant
            if value in self.variables:
                name = value
                self.used.add(name)
                return lambda env: env[name]
            raise ExpressionError(f"unknown name {value!r} at position {pos}")
        if kind == "op" and value == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise ExpressionError(f"unexpected {'end of input' if kind is None else repr(value)} at position {pos}")


def parse_expression(text: str, variables: tuple = ("t",)) -> Expression:
    """Parse ``text`` into an :class:`Expression` over the named variables."""
    if not text.strip():
        raise ExpressionError("empty expression")
    parser = _Parser(text, tuple(variables))
    fn = parser.parse()
    return Expression(fn, text, tuple(v for v in variables if v in parser.used))
