"""Exact multivariate rational functions over QQ or QQ(i*sqrt(D)).

A ``ScalarExpr`` wraps a sympy ``FracElement``.  Cancellation is delegated to
sympy's sparse gcd; on top of that the denominator is made monic with respect
to graded-lex order so that equal values have identical representations.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import sympy
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.fields import FracField
from sympy.polys.orderings import grlex

from ..errors import FieldMismatch, MissingAssignment, PoleError, UnknownVariable

_MPQ = type(QQ(1, 2))


def _norm_D(D):
    if D is None:
        return None
    D = Fraction(D)
    if D <= 0:
        raise FieldMismatch("extension parameter D must be a positive rational")
    return D


@lru_cache(maxsize=None)
def constant_domain(D):
    """Constant field for the tag ``D`` (None means QQ)."""
    if D is None:
        return QQ
    if D == 1:
        return QQ_I
    return QQ.algebraic_field(sympy.sqrt(-sympy.Rational(D.numerator, D.denominator)))


@lru_cache(maxsize=None)
def _theta(D):
    # the element i*sqrt(D) inside the constant domain
    dom = constant_domain(D)
    if D == 1:
        return QQ_I(0, 1)
    return dom.from_sympy(sympy.I * sympy.sqrt(sympy.Rational(D.numerator, D.denominator)))


@lru_cache(maxsize=None)
def _field(names: tuple, D) -> FracField:
    return FracField(list(names), constant_domain(D), grlex)


def merge_D(a, b):
    if a is None:
        return b
    if b is None or a == b:
        return a
    raise FieldMismatch(f"cannot combine constant fields i*sqrt({a}) and i*sqrt({b})")


def to_domain(value, D):
    """Convert a python/gmpy rational (or a domain element) into the domain of ``D``."""
    dom = constant_domain(D)
    if isinstance(value, bool):
        value = int(value)
    if isinstance(value, int):
        return dom.convert_from(QQ(value), QQ) if D is not None else QQ(value)
    if isinstance(value, Fraction):
        q = QQ(value.numerator, value.denominator)
        return dom.convert_from(q, QQ) if D is not None else q
    if isinstance(value, _MPQ):
        return dom.convert_from(value, QQ) if D is not None else value
    if isinstance(value, ScalarExpr):
        if not value.is_constant():
            raise TypeError("expected a constant")
        return to_domain(value.constant_value(), D) if value._D != D else value.constant_value()
    try:
        if dom.of_type(value):
            return value
    except Exception:  # pragma: no cover - defensive
        pass
    raise TypeError(f"cannot convert {value!r} to a constant")


def split_constant(c, D):
    """Return (a, b) with c = a + b*i*sqrt(D), both Fractions."""
    if D is None:
        return Fraction(int(c.numerator), int(c.denominator)), Fraction(0)
    if D == 1:
        x, y = c.x, c.y
        return (Fraction(int(x.numerator), int(x.denominator)),
                Fraction(int(y.numerator), int(y.denominator)))
    s = sympy.expand(constant_domain(D).to_sympy(c))
    re, im = s.as_real_imag()
    b = sympy.nsimplify(im / sympy.sqrt(sympy.Rational(D.numerator, D.denominator)))
    re = sympy.Rational(re)
    b = sympy.Rational(b)
    return Fraction(int(re.p), int(re.q)), Fraction(int(b.p), int(b.q))


def join_constant(a, b, D):
    dom = constant_domain(D)
    val = to_domain(Fraction(a), D)
    if b:
        if D is None:
            raise FieldMismatch("imaginary constant requires an extension field")
        val = val + to_domain(Fraction(b), D) * _theta(D)
    return val


def _frac_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_constant(c, D) -> str:
    a, b = split_constant(c, D)
    if not b:
        return _frac_str(a)
    im = "I" + ("" if D is None or D == 1 else f"*sqrt({_frac_str(D)})")
    if b == 1:
        bs = im
    elif b == -1:
        bs = "-" + im
    else:
        bs = f"{_frac_str(b)}*{im}"
    if not a:
        return bs
    if bs.startswith("-"):
        return f"{_frac_str(a)} - {bs[1:]}"
    return f"{_frac_str(a)} + {bs}"


def _is_one(p) -> bool:
    return p.is_ground and bool(p) and p.LC == p.ring.domain.one


class ScalarExpr:
    """Canonical rational function in an ordered tuple of named variables."""

    __slots__ = ("_f", "_vars", "_D", "_hash")

    def __init__(self, frac, variables: tuple, D=None, _normalized=False):
        self._vars = variables
        self._D = D
        if not _normalized:
            den = frac.denom
            lc = den.LC
            if lc != den.ring.domain.one:
                frac = frac.field.raw_new(frac.numer.quo_ground(lc), den.quo_ground(lc))
        self._f = frac
        self._hash = None

    # construction -------------------------------------------------
    @classmethod
    def constant(cls, value, variables: Sequence[str] = (), D=None) -> "ScalarExpr":
        D = _norm_D(D)
        variables = tuple(variables)
        K = _field(variables, D)
        return cls(K.ground_new(to_domain(value, D)), variables, D)

    @classmethod
    def variable(cls, name: str, variables: Sequence[str] | None = None, D=None) -> "ScalarExpr":
        D = _norm_D(D)
        variables = tuple(variables) if variables is not None else (name,)
        if name not in variables:
            raise UnknownVariable(name)
        K = _field(variables, D)
        return cls(K.gens[variables.index(name)], variables, D, True)

    @classmethod
    def imaginary_unit(cls, D, variables: Sequence[str] = ()) -> "ScalarExpr":
        """The constant i*sqrt(D)."""
        D = _norm_D(D)
        variables = tuple(variables)
        return cls(_field(variables, D).ground_new(_theta(D)), variables, D)

    @classmethod
    def from_polys(cls, numer, denom, variables, D=None):
        K = _field(tuple(variables), D)
        return cls(K.new(numer, denom), tuple(variables), D)

    # basic data ---------------------------------------------------
    @property
    def variables(self) -> tuple:
        return self._vars

    @property
    def constant_field(self):
        """None for QQ, otherwise the rational D of QQ(i*sqrt(D))."""
        return self._D

    @property
    def numer(self):
        return self._f.numer

    @property
    def denom(self):
        return self._f.denom

    @property
    def frac(self):
        return self._f

    def numerator(self) -> "ScalarExpr":
        return ScalarExpr(self._f.field(self._f.numer), self._vars, self._D, True)

    def denominator(self) -> "ScalarExpr":
        return ScalarExpr(self._f.field(self._f.denom), self._vars, self._D, True)

    def is_zero(self) -> bool:
        return not self._f.numer

    def is_one(self) -> bool:
        return _is_one(self._f.denom) and _is_one(self._f.numer)

    def is_constant(self) -> bool:
        return self._f.numer.is_ground and self._f.denom.is_ground

    def is_polynomial(self) -> bool:
        return self._f.denom.is_ground

    def constant_value(self):
        if not self.is_constant():
            raise ValueError("not a constant")
        return self._f.numer.LC if self._f.numer else self._f.field.domain.zero

    def to_fraction(self) -> Fraction:
        a, b = split_constant(self.constant_value(), self._D)
        if b:
            raise ValueError("constant is not rational")
        return a

    def real_imag(self) -> tuple:
        return split_constant(self.constant_value(), self._D)

    def free_variables(self) -> tuple:
        used = set()
        for p in (self._f.numer, self._f.denom):
            for mon in p.itermonoms():
                for i, e in enumerate(mon):
                    if e:
                        used.add(i)
        return tuple(v for i, v in enumerate(self._vars) if i in used)

    # coercion -----------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, ScalarExpr):
            if other._vars == self._vars and other._D == self._D:
                return self, other
            variables = self._vars + tuple(v for v in other._vars if v not in self._vars)
            D = merge_D(self._D, other._D)
            return self.embed(variables, D), other.embed(variables, D)
        try:
            c = to_domain(other, self._D)
        except TypeError:
            return None
        return self, ScalarExpr(self._f.field.ground_new(c), self._vars, self._D)

    def embed(self, variables: Sequence[str], D=None) -> "ScalarExpr":
        """Re-express in a larger variable list and/or larger constant field."""
        variables = tuple(variables)
        D = merge_D(self._D, _norm_D(D))
        if variables == self._vars and D == self._D:
            return self
        missing = [v for v in self.free_variables() if v not in variables]
        if missing:
            raise UnknownVariable(f"variables {missing} not in target list")
        K = _field(variables, D)
        num = self._f.numer.set_ring(K.ring)
        den = self._f.denom.set_ring(K.ring)
        return ScalarExpr(K.raw_new(num, den), variables, D)

    # arithmetic ---------------------------------------------------
    def __add__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        a, b = pair
        if b.is_zero():
            return a
        if a.is_zero():
            return b
        return ScalarExpr(a._f + b._f, a._vars, a._D)

    __radd__ = __add__

    def __neg__(self):
        return ScalarExpr(-self._f, self._vars, self._D, True)

    def __pos__(self):
        return self

    def __sub__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        a, b = pair
        if b.is_zero():
            return a
        return ScalarExpr(a._f - b._f, a._vars, a._D)

    def __rsub__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        a, b = pair
        return ScalarExpr(b._f - a._f, a._vars, a._D)

    def __mul__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        a, b = pair
        if a.is_zero():
            return a
        if b.is_zero():
            return b
        if b.is_one():
            return a
        if a.is_one():
            return b
        return ScalarExpr(a._f * b._f, a._vars, a._D)

    __rmul__ = __mul__

    def __truediv__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        a, b = pair
        if b.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        if b.is_one():
            return a
        return ScalarExpr(a._f / b._f, a._vars, a._D)

    def __rtruediv__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        a, b = pair
        return b / a

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            if self.is_zero():
                raise ZeroDivisionError("negative power of zero")
            return ScalarExpr(self._f ** k, self._vars, self._D)
        return ScalarExpr(self._f ** k, self._vars, self._D)

    def inverse(self):
        return 1 / self

    # comparison ---------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, ScalarExpr) and other._vars == self._vars and other._D == self._D:
            return self._f.numer == other._f.numer and self._f.denom == other._f.denom
        try:
            pair = self._coerce(other)
        except FieldMismatch:
            return False
        if pair is None:
            return NotImplemented
        a, b = pair
        return a._f.numer == b._f.numer and a._f.denom == b._f.denom

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self):
        if self._hash is None:
            # hash only on the free content so equal values embedded differently agree
            self._hash = hash(str(self))
        return self._hash

    def __bool__(self):
        return not self.is_zero()

    # calculus -----------------------------------------------------
    def diff(self, var: str) -> "ScalarExpr":
        try:
            i = self._vars.index(var)
        except ValueError:
            raise UnknownVariable(var) from None
        num, den = self._f.numer, self._f.denom
        dn = num.diff(i)
        if den.is_ground:
            if not dn:
                return ScalarExpr(self._f.field.zero, self._vars, self._D, True)
            return ScalarExpr(self._f.field.raw_new(dn, den), self._vars, self._D, True)
        dd = den.diff(i)
        return ScalarExpr(self._f.field.new(dn * den - num * dd, den * den), self._vars, self._D)

    def subs(self, assignment: Mapping[str, object]) -> "ScalarExpr":
        """Partial substitution of constants; the variable list is kept."""
        items = []
        for name, value in assignment.items():
            if name not in self._vars:
                raise UnknownVariable(name)
            items.append((self._vars.index(name), to_domain(value, self._D) if not (
                isinstance(value, ScalarExpr) and value._D != self._D) else value.constant_value()))
        if not items:
            return self
        num = self._f.numer.subs(items)
        den = self._f.denom.subs(items)
        if not den:
            raise PoleError("denominator vanishes under substitution")
        return ScalarExpr(self._f.field.new(num, den), self._vars, self._D)

    def evaluate(self, assignment: Mapping[str, object]) -> "ScalarExpr":
        """Exact value at a point, returned as a constant ScalarExpr."""
        needed = self.free_variables()
        missing = [v for v in needed if v not in assignment]
        if missing:
            raise MissingAssignment(f"no value for {', '.join(missing)}")
        D = self._D
        for v in assignment.values():
            if isinstance(v, ScalarExpr):
                D = merge_D(D, v._D)
        e = self.embed(self._vars, D) if D != self._D else self
        vals = {}
        for name in needed:
            v = assignment[name]
            vals[name] = v.constant_value() if isinstance(v, ScalarExpr) and v._D == D else to_domain(v, D)
        items = [(e._vars.index(k), v) for k, v in vals.items()]
        num = e._f.numer.subs(items) if items else e._f.numer
        den = e._f.denom.subs(items) if items else e._f.denom
        if not den:
            raise PoleError("denominator vanishes at the evaluation point")
        dom = constant_domain(D)
        nv = num.LC if num else dom.zero
        dv = den.LC
        return ScalarExpr.constant(dom.quo(nv, dv), (), D)

    # presentation -------------------------------------------------
    def _poly_str(self, p) -> str:
        if not p:
            return "0"
        D = self._D
        pieces = []
        terms = p.terms()
        for mon, c in terms:
            mstr = "*".join(
                (v if e == 1 else f"{v}^{e}") for v, e in zip(self._vars, mon) if e
            )
            a, b = split_constant(c, D)
            if b and a:
                cs = format_constant(c, D)
                if not mstr and len(terms) == 1:
                    pieces.append(cs)
                else:
                    pieces.append(f"({cs})" + (f"*{mstr}" if mstr else ""))
                continue
            cs = format_constant(c, D)
            if not mstr:
                pieces.append(cs)
            elif cs == "1":
                pieces.append(mstr)
            elif cs == "-1":
                pieces.append("-" + mstr)
            else:
                pieces.append(f"{cs}*{mstr}")
        out = pieces[0]
        for s in pieces[1:]:
            out += (" - " + s[1:]) if s.startswith("-") else (" + " + s)
        return out

    def __str__(self) -> str:
        num, den = self._f.numer, self._f.denom
        ns = self._poly_str(num)
        if _is_one(den):
            return ns
        if len(num) > 1:
            ns = f"({ns})"
        ds = self._poly_str(den)
        single_power = len(den) == 1 and den.LC == den.ring.domain.one and sum(1 for e in den.LM if e) == 1
        if not single_power:
            ds = f"({ds})"
        return f"{ns}/{ds}"

    def __repr__(self) -> str:
        return f"ScalarExpr({str(self)!r}, vars={list(self._vars)})"

    def to_sympy(self):
        return self._f.as_expr()

    def total_degree(self) -> int:
        if not self._f.numer:
            return 0
        return max(sum(m) for p in (self._f.numer, self._f.denom) for m in p.itermonoms())


def const(value, variables=(), D=None) -> ScalarExpr:
    return ScalarExpr.constant(value, variables, D)


def var(name, variables=None, D=None) -> ScalarExpr:
    return ScalarExpr.variable(name, variables, D)


def variables_of(*exprs: Iterable) -> tuple:
    out: list = []
    for e in exprs:
        if isinstance(e, ScalarExpr):
            for v in e.variables:
                if v not in out:
                    out.append(v)
    return tuple(out)


def differentiate(expr, var_name: str):
    """Exact partial derivative of a ScalarExpr or JetScalar."""
    return expr.diff(var_name)


def evaluate(expr: ScalarExpr, assignment: Mapping[str, object]) -> ScalarExpr:
    return expr.evaluate(assignment)
