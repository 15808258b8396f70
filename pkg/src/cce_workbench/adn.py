"""ADN ellipticity and the complementing condition for constant-coefficient symbols.

Symbols are polynomials in xi0..xi{n-1} (ScalarExpr).  The boundary is
x^0 = 0 with inward normal covector nu = e_0 by default, so evaluating a
symbol at xi_t + tau nu gives a polynomial in tau (TauPolynomial).  All
arithmetic is exact over QQ, QQ(i) or QQ(i sqrt(D)), optionally with rational
parameters (symbolic-xi mode).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Sequence

import numpy as np
import sympy

from .errors import (
    ConditionCountMismatch, DimensionError, FieldMismatch, InvalidWeights, UnsupportedFactor,
)
from .kernel.parser import parse_expr
from .kernel.scalar import ScalarExpr, _field, merge_D
from .tensors import algebra as al
from .tensors.algebra import is_zero

TAU = "tau"


def xi_names(n: int) -> tuple:
    return tuple(f"xi{a}" for a in range(n))


# ----------------------------------------------------------------------
# polynomials in tau


def _as_scalar(c, params, D):
    if isinstance(c, ScalarExpr):
        if c.variables == params and c.constant_field == D:
            return c
        return c.embed(params, merge_D(c.constant_field, D))
    return ScalarExpr.constant(c, params, D)


class TauPolynomial:
    """Dense polynomial in tau; coefficients (low to high) are ScalarExpr over params."""

    __slots__ = ("coeffs", "params", "D", "factors")

    def __init__(self, coeffs, params: Sequence[str] = (), D=None, factors=None):
        params = tuple(params)
        cs = [_as_scalar(c, params, D) for c in coeffs]
        while cs and cs[-1].is_zero():
            cs.pop()
        self.coeffs = cs
        self.params = params
        self.D = D
        # optional known factorisation: (unit, [(quadratic TauPolynomial, multiplicity)])
        self.factors = factors

    # construction ---------------------------------------------------
    @classmethod
    def constant(cls, c, params=(), D=None):
        return cls([c], params, D)

    @classmethod
    def linear(cls, root, params=(), D=None):
        """tau - root."""
        return cls([-_as_scalar(root, params, D), 1], params, D)

    @classmethod
    def from_scalar(cls, s: ScalarExpr, params=(), D=None):
        """Read off tau-coefficients of a ScalarExpr polynomial in tau."""
        if TAU not in s.variables:
            return cls([s], params, D)
        i = s.variables.index(TAU)
        den = s.denom
        if any(m[i] for m in den.itermonoms()):
            raise ValueError("denominator depends on tau")
        ring = s.numer.ring
        groups: dict = {}
        for mon, c in s.numer.terms():
            k = mon[i]
            m2 = mon[:i] + (0,) + mon[i + 1:]
            groups.setdefault(k, {})[m2] = c
        deg = max(groups) if groups else -1
        coeffs = []
        for k in range(deg + 1):
            num = ring.from_dict(groups.get(k, {})) if k in groups else ring.zero
            part = ScalarExpr.from_polys(num, den, s.variables, s.constant_field)
            coeffs.append(part.embed(params, merge_D(s.constant_field, D)) if not part.is_zero()
                          else ScalarExpr.constant(0, params, merge_D(s.constant_field, D)))
        return cls(coeffs, params, merge_D(s.constant_field, D))

    # basic data -----------------------------------------------------
    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def lc(self):
        return self.coeffs[-1]

    def _zero(self):
        return ScalarExpr.constant(0, self.params, self.D)

    def _lift(self, other):
        if isinstance(other, TauPolynomial):
            D = merge_D(self.D, other.D)
            if other.params != self.params:
                raise FieldMismatch("tau polynomials over different parameter lists")
            a = self if D == self.D else TauPolynomial(self.coeffs, self.params, D)
            b = other if D == other.D else TauPolynomial(other.coeffs, other.params, D)
            return a, b
        return self, TauPolynomial([other], self.params, self.D)

    # arithmetic -----------------------------------------------------
    def __add__(self, other):
        a, b = self._lift(other)
        n = max(len(a.coeffs), len(b.coeffs))
        out = []
        for k in range(n):
            x = a.coeffs[k] if k < len(a.coeffs) else None
            y = b.coeffs[k] if k < len(b.coeffs) else None
            out.append(x + y if x is not None and y is not None else (x if y is None else y))
        return TauPolynomial(out, a.params, a.D)

    __radd__ = __add__

    def __neg__(self):
        return TauPolynomial([-c for c in self.coeffs], self.params, self.D)

    def __sub__(self, other):
        return self + (-other if isinstance(other, TauPolynomial) else -_as_scalar(other, self.params, self.D))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, TauPolynomial):
            c = _as_scalar(other, self.params, merge_D(self.D, getattr(other, "constant_field", None)))
            if c.is_zero():
                return TauPolynomial([], self.params, self.D)
            return TauPolynomial([x * c for x in self.coeffs], self.params, c.constant_field)
        a, b = self._lift(other)
        if a.is_zero() or b.is_zero():
            return TauPolynomial([], a.params, a.D)
        out = [None] * (len(a.coeffs) + len(b.coeffs) - 1)
        for i, x in enumerate(a.coeffs):
            if x.is_zero():
                continue
            for j, y in enumerate(b.coeffs):
                if y.is_zero():
                    continue
                p = x * y
                out[i + j] = p if out[i + j] is None else out[i + j] + p
        return TauPolynomial([a._zero() if v is None else v for v in out], a.params, a.D)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        result = TauPolynomial.constant(1, self.params, self.D)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def divmod(self, other: "TauPolynomial"):
        a, b = self._lift(other)
        if b.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        rem = list(a.coeffs)
        db = b.degree
        inv = 1 / b.lc
        q = [a._zero() for _ in range(max(len(rem) - db, 0))]
        for k in range(len(rem) - 1, db - 1, -1):
            c = rem[k]
            if c.is_zero():
                continue
            f = c * inv
            q[k - db] = f
            for j, y in enumerate(b.coeffs):
                if not y.is_zero():
                    rem[k - db + j] = rem[k - db + j] - f * y
        return TauPolynomial(q, a.params, a.D), TauPolynomial(rem[:db], a.params, a.D)

    def __mod__(self, other):
        return self.divmod(other)[1]

    def __call__(self, x):
        acc = self._zero()
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def divide_root(self, root):
        """(quotient, remainder value) of synthetic division by tau - root."""
        if self.is_zero():
            return self, self._zero()
        out = []
        acc = self._zero()
        for c in reversed(self.coeffs):
            acc = acc * root + c
            out.append(acc)
        rem = out.pop()
        return TauPolynomial(list(reversed(out)), self.params, merge_D(self.D, getattr(root, "constant_field", None))), rem

    def __eq__(self, other):
        if not isinstance(other, TauPolynomial):
            other = TauPolynomial([other], self.params, self.D)
        return (self - other).is_zero()

    __hash__ = None

    def __str__(self):
        if self.is_zero():
            return "0"
        parts = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if c.is_zero():
                continue
            mon = "" if k == 0 else ("tau" if k == 1 else f"tau^{k}")
            cs = str(c)
            if mon:
                cs = mon if cs == "1" else (f"-{mon}" if cs == "-1" else f"({cs})*{mon}")
            parts.append(cs)
        out = parts[0]
        for s in parts[1:]:
            out += (" - " + s[1:]) if s.startswith("-") else (" + " + s)
        return out

    def __repr__(self):
        return f"TauPolynomial({str(self)!r})"


# ----------------------------------------------------------------------
# symbol systems


@dataclass
class SymbolSystem:
    """Constant-coefficient principal-part candidates with ADN weights."""

    n: int
    L: np.ndarray
    B: np.ndarray
    w_u: list
    w_L: list
    w_B: list
    blocks: list = field(default_factory=list)
    unknowns: list = field(default_factory=list)
    D: object = None

    @property
    def N(self) -> int:
        return self.L.shape[0]

    @property
    def M(self) -> int:
        return self.B.shape[0]

    @property
    def m(self) -> int:
        """Half the degree of det L'(xi), read off the weights."""
        total = sum(self.w_L) + sum(self.w_u)
        if total % 2:
            raise InvalidWeights("weights give an odd determinant degree")
        return total // 2

    @classmethod
    def from_strings(cls, n, L_rows, B_rows, w_u, w_L, w_B, blocks=None) -> "SymbolSystem":
        names = xi_names(n)
        text = " ".join(str(x) for row in list(L_rows) + list(B_rows) for x in row)
        D = 1 if re.search(r"\bI\b", text) else None

        def conv(x):
            if isinstance(x, ScalarExpr):
                return x
            return parse_expr(str(x), names, D)

        L = al.zeros((len(L_rows), len(L_rows[0]) if L_rows else 0))
        for i, row in enumerate(L_rows):
            for j, x in enumerate(row):
                L[i, j] = conv(x)
        ncols = L.shape[1]
        B = al.zeros((len(B_rows), ncols))
        for i, row in enumerate(B_rows):
            if len(row) != ncols:
                raise DimensionError(f"boundary row {i} has {len(row)} entries, expected {ncols}")
            for j, x in enumerate(row):
                B[i, j] = conv(x)
        sysm = cls(n, al.clean(L), al.clean(B), list(w_u), list(w_L), list(w_B), blocks or [], [], D)
        validate_weights(sysm)
        return sysm

    def to_strings(self) -> dict:
        return {
            "n": self.n,
            "L": [[str(x) for x in row] for row in self.L],
            "B": [[str(x) for x in row] for row in self.B],
            "w_u": list(self.w_u), "w_L": list(self.w_L), "w_B": list(self.w_B),
        }


def _degree(x) -> int:
    if is_zero(x):
        return -1
    if isinstance(x, ScalarExpr):
        if not x.is_polynomial():
            raise InvalidWeights("symbol entries must be polynomials in xi")
        return x.total_degree()
    return 0


def validate_weights(sysm: SymbolSystem):
    N, M = sysm.L.shape[0], sysm.B.shape[0]
    if sysm.L.shape != (N, N):
        raise InvalidWeights("interior matrix must be square")
    if len(sysm.w_u) != N or len(sysm.w_L) != N or len(sysm.w_B) != M:
        raise InvalidWeights("weight arrays do not match the matrix sizes")
    if any(w > 0 for w in sysm.w_L) or max(sysm.w_L) != 0:
        raise InvalidWeights("equation weights must be <= 0 with maximum 0")
    for s in range(N):
        for t in range(N):
            if _degree(sysm.L[s, t]) > sysm.w_L[s] + sysm.w_u[t]:
                raise InvalidWeights(f"deg L[{s},{t}] exceeds w(L_s) + w(u^t)")
    for r in range(M):
        for t in range(N):
            if _degree(sysm.B[r, t]) > sysm.w_B[r] + sysm.w_u[t]:
                raise InvalidWeights(f"deg B[{r},{t}] exceeds w(B_r) + w(u^t)")


def _homogeneous_part(x, d: int):
    if is_zero(x) or d < 0:
        return 0
    if not isinstance(x, ScalarExpr):
        return x if d == 0 else 0
    num = x.numer
    ring = num.ring
    terms = {m: c for m, c in num.terms() if sum(m) == d}
    if not terms:
        return 0
    part = ScalarExpr.from_polys(ring.from_dict(terms), x.denom, x.variables, x.constant_field)
    return 0 if part.is_zero() else part


def principal_parts(sysm: SymbolSystem):
    """(L', B'): the terms of order exactly w(row) + w(u^t)."""
    validate_weights(sysm)
    N, M = sysm.N, sysm.M
    Lp = al.zeros((N, N))
    Bp = al.zeros((M, N))
    for s in range(N):
        for t in range(N):
            Lp[s, t] = _homogeneous_part(sysm.L[s, t], sysm.w_L[s] + sysm.w_u[t])
    for r in range(M):
        for t in range(N):
            Bp[r, t] = _homogeneous_part(sysm.B[r, t], sysm.w_B[r] + sysm.w_u[t])
    return Lp, Bp


# ----------------------------------------------------------------------
# evaluation at xi_t + tau nu


def _normal(n, nu):
    if nu is None:
        return [1] + [0] * (n - 1)
    nu = list(nu)
    if len(nu) != n:
        raise DimensionError("normal covector has the wrong length")
    return nu


def tangential(n: int, xi_t) -> list:
    """Full covector (0, xi_1, ..., xi_{n-1}) from tangential components."""
    if isinstance(xi_t, (int, Fraction, ScalarExpr)):
        xi_t = [xi_t]
    xi_t = list(xi_t)
    if len(xi_t) != n - 1:
        raise DimensionError(f"tangential covector needs {n - 1} components, got {len(xi_t)}")
    if all(is_zero(x) for x in xi_t):
        raise ValueError("tangential covector must be nonzero")
    return [0] + [Fraction(x) if isinstance(x, (int, str)) else x for x in xi_t]


def _params_of(xi):
    out = []
    for x in xi:
        if isinstance(x, ScalarExpr):
            for v in x.free_variables():
                if v not in out:
                    out.append(v)
    return tuple(out)


def symbol_at(entry, xi_full, nu, params=(), D=None) -> TauPolynomial:
    """entry(xi_full + tau nu) as a TauPolynomial."""
    if is_zero(entry):
        return TauPolynomial([], params, D)
    if not isinstance(entry, ScalarExpr):
        return TauPolynomial([entry], params, D)
    D = merge_D(D, entry.constant_field)
    names = entry.variables
    lin = {}
    for a, name in enumerate(names):
        k = int(name[2:]) if name.startswith("xi") else None
        if k is None:
            raise InvalidWeights(f"symbol variable {name!r} is not of the form xi<k>")
        lin[a] = TauPolynomial([xi_full[k], nu[k]], params, D)
    if not entry.denom.is_ground:
        raise InvalidWeights("symbol entries must be polynomials")
    den = entry.denom.LC
    powers: dict = {}

    def pw(a, e):
        key = (a, e)
        if key not in powers:
            powers[key] = lin[a] ** e
        return powers[key]

    acc = TauPolynomial([], params, D)
    for mon, c in entry.numer.terms():
        term = TauPolynomial([ScalarExpr.constant(c, params, entry.constant_field)], params, D)
        for a, e in enumerate(mon):
            if e:
                term = term * pw(a, e)
        acc = acc + term
    inv = ScalarExpr.constant(1, params, entry.constant_field) / ScalarExpr.constant(den, params, entry.constant_field)
    return acc * inv


def _matrix_at(A, xi_full, nu, params, D):
    out = np.empty(A.shape, dtype=object)
    for idx in np.ndindex(A.shape):
        out[idx] = symbol_at(A[idx], xi_full, nu, params, D)
    return out


def _tau_scalar(p: TauPolynomial) -> ScalarExpr:
    """TauPolynomial -> ScalarExpr over (tau,) + params."""
    vars_ = (TAU,) + p.params
    t = ScalarExpr.variable(TAU, vars_, p.D)
    acc = ScalarExpr.constant(0, vars_, p.D)
    for c in reversed(p.coeffs):
        acc = acc * t + c.embed(vars_, p.D)
    return acc


# ----------------------------------------------------------------------
# characteristic polynomial and roots


@dataclass
class CharacteristicPolynomial:
    poly: TauPolynomial
    plus: list      # [(root, multiplicity)]
    minus: list
    unit: object    # leading coefficient
    D: object       # field tag of the roots

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.plus) + sum(e for _, e in self.minus)


def _is_diagonal_power(Lp, quad):
    """[(c_t, k_t)] if L' = diag(c_t quad^k_t) with constants c_t, else None."""
    N = Lp.shape[0]
    out = []
    for s in range(N):
        for t in range(N):
            if s != t and not is_zero(Lp[s, t]):
                return None
        x = Lp[s, s]
        if is_zero(x):
            return None
        k = 0
        while isinstance(x, ScalarExpr) and not x.is_constant():
            y = x / quad
            if not y.is_polynomial():
                return None
            x, k = y, k + 1
        out.append((x, k))
    return out


def _quadratic_form(n, D=None):
    names = xi_names(n)
    q = ScalarExpr.constant(0, names, D)
    for a in names:
        v = ScalarExpr.variable(a, names, D)
        q = q + v * v
    return q


def _squarefree_split(q: Fraction):
    """q = (s/den)^2 * D0 with D0 a squarefree positive integer; returns (s/den, D0)."""
    num = q.numerator * q.denominator
    den = q.denominator
    s, D0 = 1, 1
    m = num
    p = 2
    while p * p <= m:
        while m % (p * p) == 0:
            m //= p * p
            s *= p
        if m % p == 0:
            m //= p
            D0 *= p
        p += 1
    D0 *= m
    return Fraction(s, den), D0


def _real(c: ScalarExpr) -> bool:
    if c.constant_field is None:
        return True
    return not c.to_sympy().has(sympy.I)


def _rational_sqrt(expr, syms):
    """Square root of a rational function with nonnegative leading sign, or None."""
    num, den = sympy.fraction(sympy.together(expr))
    out = sympy.Integer(1)
    for part, sign in ((num, 1), (den, -1)):
        c, facs = sympy.factor_list(sympy.expand(part), *syms)
        q = Fraction(int(sympy.fraction(c)[0]), int(sympy.fraction(c)[1]))
        if q < 0:
            return None
        a, b = isqrt(q.numerator), isqrt(q.denominator)
        if a * a != q.numerator or b * b != q.denominator:
            return None
        out *= sympy.Rational(a, b) ** sign
        for f, e in facs:
            if e % 2:
                return None
            out *= f ** (sign * (e // 2))
    return out


def _quadratic_roots(a, b, c, params):
    """Roots (plus, minus, D) of a tau^2 + b tau + c with real coefficients and no real root."""
    for x in (a, b, c):
        if not _real(x):
            raise UnsupportedFactor("quadratic factor with non-real coefficients")
    disc = a * c * 4 - b * b
    if not params or disc.is_constant():
        val = disc.to_fraction() if disc.constant_field is None else disc.real_imag()[0]
        if val <= 0:
            raise UnsupportedFactor("real characteristic root: the symbol is not elliptic here")
        r, D0 = _squarefree_split(val)
        D = Fraction(D0)
        im = ScalarExpr.imaginary_unit(D, params) * r
    else:
        syms = [sympy.Symbol(p) for p in params]
        root = _rational_sqrt(disc.to_sympy(), syms)
        if root is None:
            raise UnsupportedFactor("discriminant is not a perfect square of a rational function")
        D = Fraction(1)
        K = _field(params, D)
        r = ScalarExpr(K.from_expr(root), params, D)
        # choose the branch that is positive at a regular sample point
        pt = {p: k + 1 for k, p in enumerate(params)}
        if r.evaluate(pt).real_imag()[0] < 0:
            r = -r
        im = ScalarExpr.imaginary_unit(D, params) * r
    a, b = a.embed(params, D), b.embed(params, D)
    re_part = -b / (a * 2)
    shift = im / (a * 2)
    return re_part + shift, re_part - shift, D


def _factor_constant_poly(p: TauPolynomial):
    """[(roots..)] via sympy factorisation for a polynomial with constant coefficients."""
    tau = sympy.Symbol(TAU)
    expr = sum(c.to_sympy() * tau ** k for k, c in enumerate(p.coeffs))
    gaussian = expr.has(sympy.I)
    if gaussian and p.D != 1:
        raise UnsupportedFactor("complex coefficients outside QQ(i)")
    unit, facs = sympy.factor_list(expr, tau, gaussian=True) if gaussian else sympy.factor_list(expr, tau)
    return facs


def characteristic_polynomial(Lp, xi_t, nu=None, n=None) -> CharacteristicPolynomial:
    """det L'(xi_t + tau nu) with its roots split by the sign of the imaginary part."""
    N = Lp.shape[0]
    if n is None:
        n = _symbol_dimension(Lp)
    xi_full = tangential(n, xi_t)
    nuv = _normal(n, nu)
    params = _params_of(xi_full)
    D0 = None
    for x in Lp.reshape(-1):
        if isinstance(x, ScalarExpr):
            D0 = merge_D(D0, x.constant_field)
    quad = _quadratic_form(n, D0)
    diag = _is_diagonal_power(Lp, quad)
    if diag is not None:
        # structured path: det = prod c_t * q(tau)^K with q = |xi_t + tau nu|^2
        q = symbol_at(quad, xi_full, nuv, params, D0)
        if q.degree != 2:
            raise UnsupportedFactor("normal covector is characteristic")
        K = sum(k for _, k in diag)
        unit = ScalarExpr.constant(1, params, D0)
        for c, _ in diag:
            unit = unit * _as_scalar(c, params, D0)
        plus, minus, D = _quadratic_roots(q.coeffs[2], q.coeffs[1], q.coeffs[0], params)
        a = q.coeffs[2].embed(params, D)
        poly = None if params else (q ** K) * unit
        cp = CharacteristicPolynomial(poly, [(plus, K)], [(minus, K)], unit * a ** K, D)
        cp.structure = (diag, q)
        return cp
    if params:
        raise UnsupportedFactor("symbolic-xi mode needs a diagonal system of powers of |xi|^2")
    M = _matrix_at(Lp, xi_full, nuv, (), D0)
    S = np.empty(M.shape, dtype=object)
    for idx in np.ndindex(M.shape):
        S[idx] = _tau_scalar(M[idx]) if not M[idx].is_zero() else 0
    det = al.determinant(al.clean(S))
    if is_zero(det):
        raise UnsupportedFactor("det L' vanishes identically in tau: not elliptic")
    poly = TauPolynomial.from_scalar(det if isinstance(det, ScalarExpr) else ScalarExpr.constant(det, (TAU,), D0), (), D0)
    facs = _factor_constant_poly(poly)
    plus, minus = [], []
    Dr = None
    tau = sympy.Symbol(TAU)
    for f, e in facs:
        fp = sympy.Poly(f, tau)
        deg = fp.degree()
        if deg == 0:
            continue
        if deg == 1:
            r = -fp.all_coeffs()[1] / fp.all_coeffs()[0]
            re_, im_ = sympy.re(r), sympy.im(r)
            if im_ == 0:
                raise UnsupportedFactor("real characteristic root: the symbol is not elliptic here")
            Dr = merge_D(Dr, Fraction(1))
            val = (ScalarExpr.constant(Fraction(int(sympy.fraction(re_)[0]), int(sympy.fraction(re_)[1])), (), 1)
                   + ScalarExpr.imaginary_unit(1) * Fraction(int(sympy.fraction(im_)[0]), int(sympy.fraction(im_)[1])))
            (plus if im_ > 0 else minus).append((val, e))
            continue
        if deg == 2:
            cs = [Fraction(int(sympy.fraction(x)[0]), int(sympy.fraction(x)[1])) for x in fp.all_coeffs()]
            a, b, c = (ScalarExpr.constant(x) for x in cs)
            rp, rm, D = _quadratic_roots(a, b, c, ())
            Dr = merge_D(Dr, D)
            plus.append((rp, e))
            minus.append((rm, e))
            continue
        raise UnsupportedFactor(f"irreducible factor of degree {deg} in tau is not supported")
    cp = CharacteristicPolynomial(poly, plus, minus, poly.lc, Dr)
    cp.structure = None
    return cp


def char_poly(Lp, xi_t, nu=None, n=None) -> TauPolynomial:
    cp = characteristic_polynomial(Lp, xi_t, nu, n)
    if cp.poly is None:
        diag, q = cp.structure
        K = sum(k for _, k in diag)
        unit = cp.unit / q.coeffs[2].embed(q.params, cp.D) ** K
        cp.poly = (TauPolynomial(q.coeffs, q.params, cp.D) ** K) * unit
    out = cp.poly
    out.factors = cp
    return out


def _roots_of(cp):
    if isinstance(cp, TauPolynomial):
        if cp.factors is None:
            raise ValueError("use char_poly to build a polynomial with known roots")
        cp = cp.factors
    return cp


def m_plus(cp) -> TauPolynomial:
    """prod (tau - tau_r) over roots with positive imaginary part."""
    cp = _roots_of(cp)
    params = cp.plus[0][0].variables if cp.plus else ()
    out = TauPolynomial.constant(1, params, cp.D)
    for r, e in cp.plus:
        out = out * TauPolynomial.linear(r, params, cp.D) ** e
    return out


def m_minus(cp) -> TauPolynomial:
    cp = _roots_of(cp)
    params = cp.minus[0][0].variables if cp.minus else ()
    out = TauPolynomial.constant(1, params, cp.D)
    for r, e in cp.minus:
        out = out * TauPolynomial.linear(r, params, cp.D) ** e
    return out


def _symbol_dimension(A) -> int:
    n = 0
    for x in np.asarray(A).reshape(-1):
        if isinstance(x, ScalarExpr):
            for v in x.variables:
                if v.startswith("xi"):
                    n = max(n, int(v[2:]) + 1)
    if n == 0:
        raise DimensionError("cannot infer the symbol dimension; pass n")
    return n


# ----------------------------------------------------------------------
# adjugate


def adjugate_symbol(Lp, xi_t, nu=None, n=None):
    """adj L'(xi_t + tau nu) as a matrix of TauPolynomial (pointwise samples)."""
    N = Lp.shape[0]
    if n is None:
        n = _symbol_dimension(Lp)
    xi_full = tangential(n, xi_t)
    nuv = _normal(n, nu)
    params = _params_of(xi_full)
    D0 = None
    for x in Lp.reshape(-1):
        if isinstance(x, ScalarExpr):
            D0 = merge_D(D0, x.constant_field)
    M = _matrix_at(Lp, xi_full, nuv, params, D0)
    out = np.empty((N, N), dtype=object)
    if N == 1:
        out[0, 0] = TauPolynomial.constant(1, params, D0)
        return out
    S = np.empty((N, N), dtype=object)
    for idx in np.ndindex(N, N):
        S[idx] = _tau_scalar(M[idx]) if not M[idx].is_zero() else 0
    S = al.clean(S)
    det = al.determinant(S)
    if is_zero(det):
        raise UnsupportedFactor("singular symbol matrix")
    inv = al.solve_inverse(S)
    for idx in np.ndindex(N, N):
        x = inv[idx]
        if is_zero(x):
            out[idx] = TauPolynomial([], params, D0)
        else:
            out[idx] = TauPolynomial.from_scalar(x * det, params, D0)
    return out


def _matmul(A, B, params, D):
    r, k = A.shape
    k2, c = B.shape
    out = np.empty((r, c), dtype=object)
    for i in range(r):
        for j in range(c):
            acc = TauPolynomial([], params, D)
            for t in range(k):
                a, b = A[i, t], B[t, j]
                if a.is_zero() or b.is_zero():
                    continue
                acc = acc + a * b
            out[i, j] = acc
    return out


# ----------------------------------------------------------------------
# exact linear algebra over the coefficient field


def _rref(rows):
    """Row-reduce a list of lists of ScalarExpr; returns (reduced rows, pivot columns)."""
    A = [list(r) for r in rows]
    if not A:
        return A, []
    ncol = len(A[0])
    pivots = []
    r = 0
    for c in range(ncol):
        piv = None
        for i in range(r, len(A)):
            if not A[i][c].is_zero():
                piv = i
                break
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv if not x.is_zero() else x for x in A[r]]
        for i in range(len(A)):
            if i != r and not A[i][c].is_zero():
                f = A[i][c]
                A[i] = [x - f * y if not y.is_zero() else x for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == len(A):
            break
    return A, pivots


def left_kernel_vector(mat, zero):
    """A nonzero c with c . mat = 0, or None when the rows are independent."""
    M = len(mat)
    K = len(mat[0]) if M else 0
    cols = [[mat[r][k] for r in range(M)] for k in range(K)]  # transpose: K x M
    if not cols:
        vec = [zero + 0 for _ in range(M)]
        if M:
            vec[0] = zero + 1
        return vec if M else None
    R, piv = _rref(cols)
    if len(piv) == M:
        return None
    free = next(j for j in range(M) if j not in piv)
    vec = [zero for _ in range(M)]
    vec[free] = zero + 1
    for i, p in enumerate(piv):
        vec[p] = -R[i][free]
    return vec


# ----------------------------------------------------------------------
# complementing condition


@dataclass
class ComplementingResult:
    passed: bool
    sample: tuple
    M: int
    m: int
    rank: int
    modulus: TauPolynomial          # M+ after common-root reduction
    m_plus: TauPolynomial | None
    certificate: list | None = None
    certificate_verified: bool | None = None
    reductions: dict = field(default_factory=dict)
    mode: str = "pointwise"

    def summary(self) -> dict:
        return {
            "passed": self.passed, "M": self.M, "m": self.m, "rank": self.rank,
            "sample": [str(x) for x in self.sample], "mode": self.mode,
            "modulus": str(self.modulus),
            "certificate": None if self.certificate is None else [str(c) for c in self.certificate],
            "certificate_verified": self.certificate_verified,
            "reductions": dict(self.reductions),
        }


def _all_vanish(rows, root) -> bool:
    for row in rows:
        for p in row:
            if not p.is_zero() and not p(root).is_zero():
                return False
    return True


def _divide_rows(rows, root):
    out = []
    for row in rows:
        new = []
        for p in row:
            q, _ = p.divide_root(root)
            new.append(q)
        out.append(new)
    return out


def _factor_out(rows, P, roots_plus, roots_minus, counts):
    """Lemma-style reduction: strip common roots of all row entries."""
    nonzero = any(not p.is_zero() for row in rows for p in row)
    if not nonzero:
        return rows, P
    changed = True
    while changed:
        changed = False
        for root in roots_plus:
            if _all_vanish(rows, root):
                rows = _divide_rows(rows, root)
                counts["plus"] = counts.get("plus", 0) + 1
                if P.degree > 0 and P(root).is_zero():
                    P, _ = P.divide_root(root)
                    counts["modulus"] = counts.get("modulus", 0) + 1
                changed = True
        for root in roots_minus:
            if _all_vanish(rows, root):
                rows = _divide_rows(rows, root)
                counts["minus"] = counts.get("minus", 0) + 1
                changed = True
    return rows, P


def _remainder_matrix(rows, P):
    d = P.degree
    mat = []
    for row in rows:
        vec = []
        for p in row:
            r = p % P if d > 0 else TauPolynomial([], P.params, P.D)
            cs = list(r.coeffs) + [P._zero()] * (d - len(r.coeffs))
            vec.extend(c.embed(P.params, P.D) for c in cs[:d])
        mat.append(vec)
    return mat


def complementing_check(sysm: SymbolSystem, xi_t, nu=None, symbolic: bool | None = None) -> ComplementingResult:
    """Rows of B' adj L' at xi_t + tau nu, tested for independence modulo M+.

    xi_t may contain ScalarExpr entries in free parameters (symbolic-xi mode);
    then the rank is taken over the rational-function field in the parameters.
    """
    n = sysm.n
    Lp, Bp = principal_parts(sysm)
    m = sysm.m
    if sysm.M != m:
        raise ConditionCountMismatch(f"M = {sysm.M} boundary conditions but m = {m}")
    xi_full = tangential(n, xi_t)
    nuv = _normal(n, nu)
    params = _params_of(xi_full)
    cp = characteristic_polynomial(Lp, xi_t, nu, n)
    if cp.degree != 2 * m:
        raise ConditionCountMismatch(f"deg det L' = {cp.degree} but 2m = {2 * m}")
    D = cp.D
    for x in Bp.reshape(-1):
        if isinstance(x, ScalarExpr):
            D = merge_D(D, x.constant_field)
    if sysm.D is not None:
        D = merge_D(D, sysm.D)
    plus = [r.embed(params, D) for r, _ in cp.plus]
    minus = [r.embed(params, D) for r, _ in cp.minus]
    Mplus = TauPolynomial.constant(1, params, D)
    for (r, e) in cp.plus:
        Mplus = Mplus * TauPolynomial.linear(r.embed(params, D), params, D) ** e
    Bt = _matrix_at(Bp, xi_full, nuv, params, D)
    counts: dict = {}
    structure = getattr(cp, "structure", None)
    if structure is not None:
        # adj = diag(prod_{s != t} c_s q^(K - k_t)); strip q^(K - kmax) structurally
        diag, q = structure
        K = sum(k for _, k in diag)
        kmax = max(k for _, k in diag)
        qD = TauPolynomial(q.coeffs, params, D)
        common = K - kmax
        counts["plus"] = counts["minus"] = common
        counts["modulus"] = common
        P = TauPolynomial.constant(1, params, D)
        for (r, e) in cp.plus:
            P = P * TauPolynomial.linear(r.embed(params, D), params, D) ** (e - common)
        cols = []
        for t, (c_t, k_t) in enumerate(diag):
            coef = ScalarExpr.constant(1, params, D)
            for s, (c_s, _) in enumerate(diag):
                if s != t:
                    coef = coef * _as_scalar(c_s, params, D)
            cols.append(qD ** (kmax - k_t) * coef)
        rows = [[Bt[r, t] * cols[t] for t in range(sysm.N)] for r in range(sysm.M)]
        adj_full = None
    else:
        adj = adjugate_symbol(Lp, xi_t, nu, n)
        adj = np.vectorize(lambda p: TauPolynomial(p.coeffs, params, D), otypes=[object])(adj)
        prod = _matmul(Bt, adj, params, D)
        rows = [[prod[r, t] for t in range(sysm.N)] for r in range(sysm.M)]
        adj_full = prod
        P = Mplus
    rows, P = _factor_out(rows, P, plus, minus, counts)
    mat = _remainder_matrix(rows, P)
    zero = ScalarExpr.constant(0, params, D)
    cert = left_kernel_vector(mat, zero) if mat and mat[0] else (
        [zero + 1] + [zero] * (sysm.M - 1) if sysm.M else None)
    rank = sysm.M if cert is None else _rank(mat)
    res = ComplementingResult(cert is None, tuple(xi_full[1:]), sysm.M, m, rank, P,
                              Mplus, cert, None, counts,
                              "symbolic" if params else "pointwise")
    if cert is not None:
        res.certificate_verified = _verify_certificate(cert, Bt, params, D, Mplus, adj_full, structure)
    return res


def _rank(mat) -> int:
    if not mat or not mat[0]:
        return 0
    _, piv = _rref(mat)
    return len(piv)


def _structured_adjugate(structure, params, D):
    """Diagonal adjugate prod_{s != t} c_s q^(K - k_t) for L' = diag(c_t q^k_t)."""
    diag, q = structure
    K = sum(k for _, k in diag)
    qD = TauPolynomial(q.coeffs, params, D)
    out = []
    for t, (_, k_t) in enumerate(diag):
        coef = ScalarExpr.constant(1, params, D)
        for s, (c_s, _) in enumerate(diag):
            if s != t:
                coef = coef * _as_scalar(c_s, params, D)
        out.append(qD ** (K - k_t) * coef)
    return out


def _verify_certificate(cert, Bt, params, D, Mplus, prod, structure) -> bool:
    """c^r B'_rt adj^tq is divisible by M+ in every column q."""
    M, N = Bt.shape
    if prod is None:
        adj = _structured_adjugate(structure, params, D)
        cols = []
        for t in range(N):
            acc = TauPolynomial([], params, D)
            for r in range(M):
                if not cert[r].is_zero() and not Bt[r, t].is_zero():
                    acc = acc + Bt[r, t] * cert[r]
            cols.append(acc * adj[t])
    else:
        cols = []
        for t in range(N):
            acc = TauPolynomial([], params, D)
            for r in range(M):
                if not cert[r].is_zero() and not prod[r, t].is_zero():
                    acc = acc + prod[r, t] * cert[r]
            cols.append(acc)
    if Mplus.degree <= 0:
        return True
    return all((c % Mplus).is_zero() for c in cols)


# ----------------------------------------------------------------------
# uniform ellipticity


@dataclass
class EllipticityResult:
    passed: bool
    degree: int
    m: int | None
    constant: object
    reason: str = ""


def uniform_ellipticity_check(Lp, n: int | None = None) -> EllipticityResult:
    """det L'(xi) = c |xi|^(2m) exactly with c a nonzero real constant."""
    if n is None:
        n = _symbol_dimension(Lp)
    D0 = None
    for x in np.asarray(Lp).reshape(-1):
        if isinstance(x, ScalarExpr):
            D0 = merge_D(D0, x.constant_field)
    quad = _quadratic_form(n, D0)
    N = Lp.shape[0]
    lower = all(is_zero(Lp[s, t]) for s in range(N) for t in range(s + 1, N))
    upper = all(is_zero(Lp[s, t]) for s in range(N) for t in range(s))
    if lower or upper:
        factors = [Lp[t, t] for t in range(N)]
    else:
        factors = [al.determinant(al.clean(np.array(Lp, dtype=object)))]
    const = Fraction(1)
    power = 0
    degree = 0
    for f in factors:
        if is_zero(f):
            return EllipticityResult(False, -1, None, 0, "det L' vanishes identically")
        x = f
        k = 0
        while isinstance(x, ScalarExpr) and not x.is_constant():
            y = x / quad
            if not y.is_polynomial():
                deg = f.total_degree() if isinstance(f, ScalarExpr) else 0
                return EllipticityResult(False, degree + deg, None, None,
                                         "det L' is not a constant multiple of a power of |xi|^2")
            x, k = y, k + 1
        c = x.to_fraction() if isinstance(x, ScalarExpr) else Fraction(x)
        const *= c
        power += k
        degree += 2 * k
    if const == 0:
        return EllipticityResult(False, degree, None, 0, "zero constant")
    return EllipticityResult(True, degree, power, const, "")


# ----------------------------------------------------------------------
# the concrete system for constant scalar curvature compactifications


def paper_unknowns(n: int) -> list:
    """Tangential components (lexicographic), then g_0i, then g_00 last."""
    tang = [(i, j) for i in range(1, n) for j in range(i, n)]
    return tang + [(0, i) for i in range(1, n)] + [(0, 0)]


def build_paper_system(n: int) -> SymbolSystem:
    """Principal symbols at the identity metric with weights w(u) = n, w(B_r) = s - n."""
    if n % 2 or n < 4:
        raise DimensionError("the system is built for even n >= 4")
    names = xi_names(n)
    xi = [ScalarExpr.variable(a, names) for a in names]
    zero = ScalarExpr.constant(0, names)
    Q = zero
    for v in xi:
        Q = Q + v * v
    Qt = Q - xi[0] * xi[0]
    unknowns = paper_unknowns(n)
    col = {}
    for k, (a, b) in enumerate(unknowns):
        col[(a, b)] = col[(b, a)] = k
    N = len(unknowns)
    T = N - n
    L = al.zeros((N, N))
    for t in range(N):
        L[t, t] = Q ** (n // 2)
    rows, w_B, blocks = [], [], []

    def new_row():
        return [zero for _ in range(N)]

    def block(name, order, rs):
        blocks.append({"name": name, "order": order, "start": len(rows), "size": len(rs)})
        rows.extend(rs)
        w_B.extend([order - n] * len(rs))

    # order 0: g_ij = h_ij
    rs = []
    for k in range(T):
        r = new_row()
        r[k] = zero + 1
        rs.append(r)
    block("order0", 0, rs)
    # order 2(a): D g_ij
    rs = []
    for k in range(T):
        r = new_row()
        r[k] = Q
        rs.append(r)
    block("order2a", 2, rs)
    # order 2(b): normal derivative of the harmonic condition with difA substituted
    c1 = Fraction(2 * (2 - n), n - 1)
    c3 = -Fraction(2 - n, n - 1)
    half = Fraction(1, 2)
    rs = []
    for i in range(1, n):
        r = new_row()
        for k in range(1, n):
            r[col[(0, k)]] += xi[i] * xi[k] * c1
        r[col[(0, i)]] -= Qt
        for k in range(1, n):
            r[col[(k, k)]] += xi[0] * xi[i] * (c3 - half)
        for j in range(1, n):
            r[col[(i, j)]] += xi[0] * xi[j]
        r[col[(0, 0)]] -= xi[0] * xi[i] * half
        rs.append(r)
    r = new_row()
    for b in range(n):
        r[col[(0, b)]] += xi[b] * xi[0]
    for e in range(n):
        r[col[(e, e)]] -= xi[0] * xi[0] * half
    rs.append(r)
    block("order2b", 2, rs)
    # order 3: g^eb d_e D g_ab
    rs = []
    for a in list(range(1, n)) + [0]:
        r = new_row()
        for b in range(n):
            r[col[(a, b)]] += xi[b] * Q
        rs.append(r)
    block("order3", 3, rs)
    # order 2l: D_l g
    for l in range(2, n // 2):
        rs = []
        for t in range(N):
            r = new_row()
            r[t] = Q ** l
            rs.append(r)
        block(f"order{2 * l}", 2 * l, rs)
    B = al.zeros((len(rows), N))
    for i, r in enumerate(rows):
        for j, x in enumerate(r):
            B[i, j] = x
    sysm = SymbolSystem(n, al.clean(L), al.clean(B), [n] * N, [0] * N, w_B, blocks, unknowns, None)
    validate_weights(sysm)
    return sysm


def zero_block(sysm: SymbolSystem, name: str) -> SymbolSystem:
    """Copy of the system with one block of boundary rows set to zero."""
    B = sysm.B.copy()
    for blk in sysm.blocks:
        if blk["name"] == name:
            for r in range(blk["start"], blk["start"] + blk["size"]):
                for t in range(sysm.N):
                    B[r, t] = 0
            break
    else:
        raise KeyError(name)
    return SymbolSystem(sysm.n, sysm.L, B, sysm.w_u, sysm.w_L, sysm.w_B, sysm.blocks, sysm.unknowns, sysm.D)


def pythagorean_sample(n: int, params=None):
    """Rational parametrisation of tangential directions with |xi_t| = 1 + sum t_k^2.

    xi_t = (2 t_1, ..., 2 t_{n-2}, 1 - sum t_k^2).
    """
    k = n - 2
    params = tuple(params) if params else tuple(f"t{j + 1}" for j in range(k))
    t = [ScalarExpr.variable(p, params) for p in params]
    s = ScalarExpr.constant(0, params)
    for v in t:
        s = s + v * v
    return [v * 2 for v in t] + [1 - s], 1 + s


def pythagorean_points(n: int, count: int = 5) -> list:
    """Integer tangential covectors with |xi_t| an integer."""
    out = []
    k = n - 1
    for a in range(0, 12):
        for b in range(0, 12):
            vals = [a, b] + [0] * (k - 2) if k >= 2 else [a]
            if k == 1:
                vals = [a] if a else None
            if not vals or not any(vals):
                continue
            for perm_shift in range(k):
                v = vals[perm_shift:] + vals[:perm_shift]
                s = sum(x * x for x in v)
                r = isqrt(s)
                if r * r == s and tuple(v) not in [tuple(o) for o in out]:
                    out.append(v)
                    if len(out) >= count:
                        return out
    return out


def f_block(n: int, xi_t, tau) -> np.ndarray:
    """Rightmost n x n minor of the order-2(b) rows, evaluated at (tau, xi_t)."""
    sysm = build_paper_system(n)
    blk = next(b for b in sysm.blocks if b["name"] == "order2b")
    xi_full = tangential(n, xi_t)
    N = sysm.N
    F = al.zeros((n, n))
    D = getattr(tau, "constant_field", None)
    for i in range(n):
        for j in range(n):
            e = sysm.B[blk["start"] + i, N - n + j]
            p = symbol_at(e, xi_full, _normal(n, None), (), D)
            F[i, j] = p(_as_scalar(tau, (), D)) if not p.is_zero() else 0
    return al.clean(F)


def f_block_column_reduce(F, tau):
    """Column operations clearing the bottom row: returns (A', v', w', b')."""
    n = F.shape[0]
    b = F[n - 1, n - 1]
    G = F.copy()
    for k in range(n - 1):
        w = G[n - 1, k]
        if not is_zero(w):
            f = w / b
            for i in range(n):
                G[i, k] = G[i, k] - f * G[i, n - 1]
    for i in range(n):
        G[i, n - 1] = G[i, n - 1] / tau
    G = al.clean(G)
    return G[: n - 1, : n - 1], G[: n - 1, n - 1], G[n - 1, : n - 1], G[n - 1, n - 1]


def a_prime_formula(n: int, xi_t):
    """((3-n)/(n-1)) xi xi^T - |xi|^2 I on tangential components."""
    xs = [Fraction(x) for x in xi_t]
    s = sum(x * x for x in xs)
    c = Fraction(3 - n, n - 1)
    out = al.zeros((n - 1, n - 1))
    for i in range(n - 1):
        for j in range(n - 1):
            out[i, j] = c * xs[i] * xs[j] - (s if i == j else 0)
    return al.clean(out)


def rank_one_charpoly(n: int, xi_t, var: str = "lam") -> ScalarExpr:
    """det(lam I - ((3-n)/(n-1)) xi xi^T) as a polynomial in lam."""
    xs = [Fraction(x) for x in xi_t]
    c = Fraction(3 - n, n - 1)
    lam = ScalarExpr.variable(var, (var,))
    Mx = al.zeros((n - 1, n - 1))
    for i in range(n - 1):
        for j in range(n - 1):
            Mx[i, j] = (lam if i == j else 0) - c * xs[i] * xs[j]
    return al.determinant(al.clean(Mx))
