"""Square roots of a fixed scalar carried symbolically.

``Surd(c, b, h)`` stands for c * b**(h/2) with h in {0, 1}.  Products with the
same base collapse b**(1/2) * b**(1/2) = b, so identities involving sqrt(g^00)
are checked exactly without leaving the rational-function field.
"""
from __future__ import annotations

from fractions import Fraction


def _zero(x) -> bool:
    if hasattr(x, "is_zero"):
        return x.is_zero()
    return not x


def _constant_sqrt(x):
    """Rational square root of a constant base, or None."""
    from math import isqrt

    if hasattr(x, "is_constant"):
        if not x.is_constant() or x.constant_field is not None:
            return None
        x = x.to_fraction()
    q = Fraction(x)
    if q < 0:
        return None
    a, b = isqrt(q.numerator), isqrt(q.denominator)
    if a * a != q.numerator or b * b != q.denominator:
        return None
    return Fraction(a, b)


class Surd:
    __slots__ = ("coef", "base", "half")

    def __init__(self, coef, base, half: int = 1):
        half = int(half)
        if isinstance(coef, int):
            coef = Fraction(coef)
        # move whole powers of the base into the coefficient
        q, r = divmod(half, 2)
        if q > 0:
            for _ in range(q):
                coef = coef * base
        elif q < 0:
            for _ in range(-q):
                coef = coef / base
        self.coef = coef
        self.base = base
        self.half = r

    @classmethod
    def sqrt(cls, base) -> "Surd":
        return cls(1, base, 1)

    def _check(self, other: "Surd"):
        if not (self.base is other.base or (self.base - other.base) == 0):
            raise ValueError("surds with different radicands cannot be combined")

    def _wrap(self, other):
        if isinstance(other, Surd):
            return other
        return Surd(other, self.base, 0)

    def __add__(self, other):
        o = self._wrap(other)
        self._check(o)
        if _zero(o.coef):
            return self
        if _zero(self.coef):
            return o
        if o.half != self.half:
            raise ValueError("cannot add rational and irrational parts of a surd")
        return Surd(self.coef + o.coef, self.base, self.half)

    __radd__ = __add__

    def __neg__(self):
        return Surd(-self.coef, self.base, self.half)

    def __sub__(self, other):
        return self + (-self._wrap(other))

    def __rsub__(self, other):
        return self._wrap(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, Surd):
            self._check(other)
            return Surd(self.coef * other.coef, self.base, self.half + other.half)
        return Surd(self.coef * other, self.base, self.half)

    __rmul__ = __mul__

    def inverse(self) -> "Surd":
        return Surd(1 / self.coef, self.base, -self.half)

    def __truediv__(self, other):
        if isinstance(other, Surd):
            return self * other.inverse()
        return Surd(self.coef / other, self.base, self.half)

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = Surd(1, self.base, 0)
        for _ in range(k):
            out = out * self
        return out

    def diff(self, name: str) -> "Surd":
        dc = self.coef.diff(name) if hasattr(self.coef, "diff") else 0
        if self.half == 0:
            return Surd(dc, self.base, 0)
        db = self.base.diff(name)
        return Surd(dc + self.coef * db / (2 * self.base), self.base, 1)

    def is_zero(self) -> bool:
        return _zero(self.coef)

    def is_rational(self) -> bool:
        return self.half == 0 or self.is_zero()

    def squared(self):
        """The rational value of self**2."""
        s = self * self
        return s.coef

    def rational_part(self):
        """The value as a scalar; needs a rational part or a base that is a constant square."""
        if not self.half or self.is_zero():
            return self.coef
        r = _constant_sqrt(self.base)
        if r is None:
            raise ValueError("surd has an irrational part")
        return self.coef * r

    def __eq__(self, other):
        try:
            return (self - other).is_zero()
        except ValueError:
            return False

    __hash__ = None

    def __repr__(self):
        if self.half == 0:
            return f"Surd({self.coef})"
        return f"Surd(({self.coef}) * sqrt({self.base}))"
