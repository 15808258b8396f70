"""Recursive-descent parser for the expression grammar.

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' INT)?
    atom   := INT | IDENT | 'I' ['*' 'sqrt' '(' rational ')'] | '(' expr ')'

``I`` and ``sqrt`` are reserved only when an extension field is declared.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Sequence

from ..errors import ParseError, UnknownIdentifier
from .scalar import ScalarExpr, _norm_D

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z][A-Za-z0-9_]*)|(\S))")


def tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        if m.group(1) is not None:
            out.append(("int", m.group(1), m.start(1)))
        elif m.group(2) is not None:
            out.append(("id", m.group(2), m.start(2)))
        elif m.group(3) is not None:
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise ParseError(f"unexpected character {ch!r}", m.start(3), text)
            out.append(("op", ch, m.start(3)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text, variables, D):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.vars = tuple(variables)
        self.D = D

    def peek(self, k=0):
        return self.toks[self.i + k]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind, value=None):
        t = self.take()
        if t[0] != kind or (value is not None and t[1] != value):
            want = value if value is not None else kind
            got = t[1] if t[0] != "end" else "end of input"
            raise ParseError(f"expected {want!r}, found {got!r}", t[2], self.text)
        return t

    def parse(self):
        if self.peek()[0] == "end":
            raise ParseError("empty expression", 0, self.text)
        e = self.expr()
        t = self.peek()
        if t[0] != "end":
            raise ParseError(f"unexpected token {t[1]!r}", t[2], self.text)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            t = self.take()
            rhs = self.unary()
            if t[1] == "*":
                e = e * rhs
            else:
                if rhs.is_zero():
                    raise ParseError("division by zero", t[2], self.text)
                e = e / rhs
        return e

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return -self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            t = self.expect("int")
            k = int(t[1])
            if base.is_zero() and k == 0:
                return ScalarExpr.constant(1, self.vars, self.D)
            base = base ** k
        return base

    def _rational(self):
        t = self.expect("int")
        q = Fraction(int(t[1]))
        if self.peek()[0] == "op" and self.peek()[1] == "/":
            self.take()
            q /= int(self.expect("int")[1])
        return q

    def atom(self):
        t = self.take()
        kind, val, pos = t
        if kind == "int":
            return ScalarExpr.constant(int(val), self.vars, self.D)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect("op", ")")
            return e
        if kind == "id":
            if val in self.vars:
                return ScalarExpr.variable(val, self.vars, self.D)
            if val == "I" and self.D is not None:
                return self._imag(pos)
            raise UnknownIdentifier(val, pos)
        got = val if kind != "end" else "end of input"
        raise ParseError(f"unexpected {got!r}", pos, self.text)

    def _imag(self, pos):
        # I*sqrt(D) is the adjoined element; bare I only when sqrt(D) is rational
        if (self.peek()[1] == "*" and self.peek(1)[0] == "id" and self.peek(1)[1] == "sqrt"
                and self.peek(2)[1] == "("):
            self.take()
            self.take()
            self.take()
            q = self._rational()
            self.expect("op", ")")
            root = _rational_sqrt(self.D / q) if q else None
            if root is None:
                raise ParseError(f"sqrt({q}) does not lie in the declared field", pos, self.text)
            return ScalarExpr.imaginary_unit(self.D, self.vars) / root
        root = _rational_sqrt(self.D)
        if root is None:
            raise ParseError("bare I requires D to be a rational square", pos, self.text)
        return ScalarExpr.imaginary_unit(self.D, self.vars) / root


def _rational_sqrt(q: Fraction):
    from math import isqrt
    q = Fraction(q)
    if q < 0:
        return None
    a, b = isqrt(q.numerator), isqrt(q.denominator)
    if a * a == q.numerator and b * b == q.denominator:
        return Fraction(a, b)
    return None


def parse_expr(text: str, variables: Sequence[str], D=None) -> ScalarExpr:
    """Parse ``text`` into a canonical ScalarExpr over the declared variables."""
    D = _norm_D(D)
    variables = tuple(variables)
    for v in variables:
        if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", v):
            raise ParseError(f"invalid variable name {v!r}")
    if D is not None and ("I" in variables or "sqrt" in variables):
        raise ParseError("I and sqrt are reserved when an extension field is declared")
    return _Parser(text, variables, D).parse()
