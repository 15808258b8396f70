"""Truncated power series (jets) in one or more distinguished variables.

A jet stores the monomials of total degree <= ``order`` in the distinguished
variables.  ``order=None`` marks an exact polynomial.  Coefficients are either
ScalarExpr values in the remaining variables or plain gmpy rationals.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import product as iproduct
from typing import Iterable, Mapping, Sequence

from sympy.polys.domains import QQ

from ..errors import PoleError, ZeroConstantTerm
from .scalar import ScalarExpr, _field, _MPQ

_INF = float("inf")


def _num(x):
    # normalise python numbers to gmpy rationals so coefficient arithmetic stays fast
    if isinstance(x, bool):
        x = int(x)
    if isinstance(x, int):
        return QQ(x)
    if isinstance(x, Fraction):
        return QQ(x.numerator, x.denominator)
    return x


def _is_zero(c) -> bool:
    if isinstance(c, ScalarExpr):
        return c.is_zero()
    return not c


def _cdiff(c, name):
    if isinstance(c, ScalarExpr):
        if name in c.variables:
            return c.diff(name)
        return 0
    return 0


def _omin(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


class JetScalar:
    __slots__ = ("dist", "terms", "order")

    def __init__(self, terms: Mapping[tuple, object], dist: Sequence[str], order=None, _clean=False):
        self.dist = tuple(dist)
        self.order = order
        if _clean:
            self.terms = dict(terms)
        else:
            k = len(self.dist)
            out = {}
            for mon, c in terms.items():
                if len(mon) != k:
                    raise ValueError("exponent length mismatch")
                if order is not None and sum(mon) > order:
                    continue
                c = _num(c)
                if not _is_zero(c):
                    out[tuple(mon)] = c
            self.terms = out

    # construction -------------------------------------------------
    @classmethod
    def from_coefficients(cls, coeffs: Sequence, var: str, order=None) -> "JetScalar":
        """Univariate jet c0 + c1*var + ... with the given truncation order."""
        if order is None:
            order = len(coeffs) - 1
        return cls({(k,): c for k, c in enumerate(coeffs)}, (var,), order)

    @classmethod
    def constant(cls, c, dist: Sequence[str], order=None) -> "JetScalar":
        return cls({(0,) * len(dist): c}, dist, order)

    @classmethod
    def variable(cls, name: str, dist: Sequence[str], order=None) -> "JetScalar":
        dist = tuple(dist)
        mon = tuple(1 if d == name else 0 for d in dist)
        return cls({mon: 1}, dist, order)

    # queries ------------------------------------------------------
    def __getitem__(self, mon):
        if isinstance(mon, int):
            mon = (mon,)
        if self.order is not None and sum(mon) > self.order:
            raise IndexError("coefficient beyond truncation order")
        return self.terms.get(tuple(mon), 0)

    def coefficients(self) -> list:
        """c_0..c_m for a univariate jet (zeros filled in)."""
        if len(self.dist) != 1:
            raise ValueError("coefficients() needs a univariate jet")
        m = self.order if self.order is not None else max((k[0] for k in self.terms), default=0)
        return [self.terms.get((k,), 0) for k in range(m + 1)]

    def valuation(self):
        if not self.terms:
            return _INF if self.order is None else self.order + 1
        return min(sum(m) for m in self.terms)

    def is_zero(self) -> bool:
        """True when every retained coefficient vanishes."""
        return not self.terms

    def is_exact(self) -> bool:
        return self.order is None

    def constant_term(self):
        return self.terms.get((0,) * len(self.dist), 0)

    def homogeneous_part(self, d: int) -> dict:
        return {m: c for m, c in self.terms.items() if sum(m) == d}

    # coercion -----------------------------------------------------
    def _lift(self, other) -> "JetScalar":
        if isinstance(other, JetScalar):
            if other.dist != self.dist:
                raise ValueError(f"jets over different variables {self.dist} vs {other.dist}")
            return other
        if isinstance(other, ScalarExpr):
            if any(d in other.free_variables() for d in self.dist):
                return jet_of(other, self.dist, self.order if self.order is not None else 0)
        if isinstance(other, (int, Fraction, _MPQ, ScalarExpr)):
            return JetScalar({(0,) * len(self.dist): other}, self.dist, None)
        return NotImplemented

    def truncate(self, order) -> "JetScalar":
        o = _omin(self.order, order)
        if o == self.order:
            return self
        return JetScalar(self.terms, self.dist, o)

    # arithmetic ---------------------------------------------------
    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return NotImplemented
        order = _omin(self.order, o.order)
        out = dict(self.terms) if order == self.order else {
            m: c for m, c in self.terms.items() if sum(m) <= order}
        for m, c in o.terms.items():
            if order is not None and sum(m) > order:
                continue
            if m in out:
                s = out[m] + c
                if _is_zero(s):
                    del out[m]
                else:
                    out[m] = s
            else:
                out[m] = c
        return JetScalar(out, self.dist, order, True)

    __radd__ = __add__

    def __neg__(self):
        return JetScalar({m: -c for m, c in self.terms.items()}, self.dist, self.order, True)

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return NotImplemented
        return o + (-self)

    def scale(self, c) -> "JetScalar":
        c = _num(c)
        if _is_zero(c):
            return JetScalar({}, self.dist, self.order, True)
        out = {}
        for m, v in self.terms.items():
            p = v * c
            if not _is_zero(p):
                out[m] = p
        return JetScalar(out, self.dist, self.order, True)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, _MPQ)) or (
                isinstance(other, ScalarExpr) and not any(d in other.free_variables() for d in self.dist)):
            return self.scale(other)
        o = self._lift(other)
        if o is NotImplemented:
            return NotImplemented
        va, vb = self.valuation(), o.valuation()
        cand = []
        if self.order is not None:
            cand.append(self.order + vb)
        if o.order is not None:
            cand.append(o.order + va)
        order = None
        if cand:
            m = min(cand)
            order = None if m == _INF else int(m)
        out: dict = {}
        for ma, ca in self.terms.items():
            da = sum(ma)
            for mb, cb in o.terms.items():
                if order is not None and da + sum(mb) > order:
                    continue
                mon = tuple(x + y for x, y in zip(ma, mb))
                p = ca * cb
                if mon in out:
                    out[mon] = out[mon] + p
                else:
                    out[mon] = p
        out = {m: c for m, c in out.items() if not _is_zero(c)}
        return JetScalar(out, self.dist, order, True)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return jet_invert(self) ** (-k)
        result = JetScalar.constant(1, self.dist, None)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, _MPQ)):
            if not other:
                raise ZeroDivisionError("division by zero")
            return self.scale(1 / _num(other))
        if isinstance(other, ScalarExpr) and not any(d in other.free_variables() for d in self.dist):
            return self.scale(1 / other)
        o = self._lift(other)
        if o is NotImplemented:
            return NotImplemented
        return self * jet_invert(o, self.order)

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return NotImplemented
        return o * jet_invert(self, o.order)

    def __eq__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return NotImplemented
        return (self - o).is_zero()

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    __hash__ = None

    # calculus -----------------------------------------------------
    def diff(self, name: str) -> "JetScalar":
        if name in self.dist:
            i = self.dist.index(name)
            out = {}
            for m, c in self.terms.items():
                e = m[i]
                if e == 0:
                    continue
                mon = m[:i] + (e - 1,) + m[i + 1:]
                out[mon] = c * e
            order = None if self.order is None else self.order - 1
            return JetScalar(out, self.dist, order, True)
        out = {}
        for m, c in self.terms.items():
            d = _cdiff(c, name)
            if not _is_zero(d):
                out[m] = d
        return JetScalar(out, self.dist, self.order, True)

    def map_coefficients(self, fn) -> "JetScalar":
        return JetScalar({m: fn(c) for m, c in self.terms.items()}, self.dist, self.order)

    def restrict(self, **values) -> "JetScalar":
        """Set some distinguished variables to zero."""
        idx = [self.dist.index(k) for k, v in values.items() if v == 0]
        keep = [i for i in range(len(self.dist)) if i not in idx]
        out: dict = {}
        for m, c in self.terms.items():
            if any(m[i] for i in idx):
                continue
            mon = tuple(m[i] for i in keep)
            out[mon] = c
        return JetScalar(out, tuple(self.dist[i] for i in keep), self.order)

    def __str__(self):
        parts = []
        for m in sorted(self.terms, key=lambda t: (sum(t), tuple(-x for x in t))):
            c = self.terms[m]
            mono = "*".join(v if e == 1 else f"{v}^{e}" for v, e in zip(self.dist, m) if e)
            cs = str(c)
            if mono:
                parts.append(f"({cs})*{mono}")
            else:
                parts.append(f"({cs})")
        body = " + ".join(parts) if parts else "0"
        if self.order is not None:
            big = "+".join(self.dist)
            body += f" + O(({big})^{self.order + 1})"
        return body

    __repr__ = __str__


def jet_invert(j: JetScalar, order=None) -> JetScalar:
    """Multiplicative inverse of a jet with a nonzero constant term."""
    c0 = j.constant_term()
    if _is_zero(c0):
        raise ZeroConstantTerm("jet_invert needs a nonzero constant term")
    target = _omin(j.order, order)
    if target is None:
        if len(j.terms) == 1:
            return JetScalar.constant(1 / _num(c0), j.dist, None)
        raise ValueError("inverse of a non-constant exact jet needs a truncation order")
    inv0 = 1 / _num(c0)
    # b_d = -inv0 * sum_{k=1..d} a_k b_{d-k}, on homogeneous parts
    parts = {}
    for m, c in j.terms.items():
        d = sum(m)
        if d <= target:
            parts.setdefault(d, {})[m] = c
    b = {0: {(0,) * len(j.dist): inv0}}
    for d in range(1, target + 1):
        acc: dict = {}
        for k in range(1, d + 1):
            ak = parts.get(k)
            bk = b.get(d - k)
            if not ak or not bk:
                continue
            for ma, ca in ak.items():
                for mb, cb in bk.items():
                    mon = tuple(x + y for x, y in zip(ma, mb))
                    p = ca * cb
                    acc[mon] = acc[mon] + p if mon in acc else p
        b[d] = {m: -(c * inv0) for m, c in acc.items() if not _is_zero(c)}
    terms = {}
    for d in b.values():
        terms.update(d)
    return JetScalar(terms, j.dist, target)


def _split_poly(p, idx_dist, idx_rest, rest_ring, order):
    out: dict = {}
    for mon, c in p.terms():
        dm = tuple(mon[i] for i in idx_dist)
        if order is not None and sum(dm) > order:
            continue
        rm = tuple(mon[i] for i in idx_rest)
        out.setdefault(dm, {})[rm] = c
    return out


def jet_of(expr, dist: Sequence[str], order: int, coeff_vars: Sequence[str] | None = None) -> JetScalar:
    """Taylor jet of a rational function at the origin of the distinguished variables."""
    dist = tuple(dist)
    if isinstance(expr, JetScalar):
        return expr.truncate(order)
    if not isinstance(expr, ScalarExpr):
        return JetScalar.constant(expr, dist, order)
    names = expr.variables
    idx_dist = [names.index(d) if d in names else None for d in dist]
    present = [i for i in idx_dist if i is not None]
    rest_names = tuple(v for v in names if v not in dist)
    if coeff_vars is not None:
        coeff_vars = tuple(coeff_vars)
        extra = [v for v in rest_names if v not in coeff_vars]
        if any(v in expr.free_variables() for v in extra):
            raise ValueError(f"coefficient variables {extra} not declared")
    idx_rest = [names.index(v) for v in rest_names]
    D = expr.constant_field
    plain = not rest_names and D is None and coeff_vars is None
    target_vars = coeff_vars if coeff_vars is not None else rest_names
    K = _field(rest_names, D)

    def conv(dmap):
        if plain:
            return dmap.get((), 0) if dmap else 0
        poly = K.ring.from_dict(dmap) if dmap else K.ring.zero
        s = ScalarExpr(K(poly), rest_names, D, True)
        return s.embed(target_vars, D) if target_vars != rest_names else s

    def build(p):
        raw = _split_poly(p, present, idx_rest, K.ring, order)
        terms = {}
        for dm, dmap in raw.items():
            full = []
            it = iter(dm)
            for i in idx_dist:
                full.append(next(it) if i is not None else 0)
            terms[tuple(full)] = conv(dmap)
        return JetScalar(terms, dist, order)

    num = build(expr.numer)
    den = build(expr.denom)
    if len(den.terms) == 1 and den.constant_term() != 0 and sum(next(iter(den.terms))) == 0:
        return num.scale(1 / den.constant_term()) if not isinstance(den.constant_term(), int) else num
    if _is_zero(den.constant_term()):
        raise PoleError("denominator vanishes at the expansion point")
    return (num * jet_invert(den, order)).truncate(order)


def jet_exp(j: JetScalar, order=None) -> JetScalar:
    """exp of a jet whose constant term vanishes."""
    if not _is_zero(j.constant_term()):
        raise ValueError("jet_exp needs a zero constant term")
    target = _omin(j.order, order)
    if target is None:
        raise ValueError("jet_exp of an exact jet needs a truncation order")
    j = j.truncate(target)
    result = JetScalar.constant(1, j.dist, target)
    term = JetScalar.constant(1, j.dist, target)
    for k in range(1, target + 1):
        term = (term * j).scale(QQ(1, k))
        if term.is_zero():
            break
        result = result + term
    return result.truncate(target)
