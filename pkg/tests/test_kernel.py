from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cce_workbench.errors import (
    FieldMismatch, MissingAssignment, ParseError, PoleError, UnknownIdentifier, ZeroConstantTerm,
)
from cce_workbench.kernel import (
    JetScalar, ScalarExpr, Surd, differentiate, jet_exp, jet_invert, jet_of, parse_expr,
)

X = ("x0", "x1")
X3 = ("x0", "x1", "x2")


def P(s, names=X, D=None):
    return parse_expr(s, names, D)


# ----------------------------------------------------------------------
# parser and evaluation


def test_parse_and_evaluate():
    e = P("x0^2 + 1/2*x1")
    assert e.evaluate({"x0": 2, "x1": 4}).to_fraction() == 6


def test_rational_evaluation():
    e = P("(x0*x1)/(x0+x1)")
    assert e.evaluate({"x0": 1, "x1": 1}).to_fraction() == Fraction(1, 2)


def test_pole_error():
    with pytest.raises(PoleError):
        P("1/x0").evaluate({"x0": 0})


def test_missing_assignment():
    with pytest.raises(MissingAssignment):
        P("x0 + x1").evaluate({"x0": 0})


def test_syntax_error_has_position():
    with pytest.raises(ParseError) as exc:
        P("x0 +")
    assert exc.value.position == 4


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier) as exc:
        P("x0 + y")
    assert exc.value.name == "y"


def test_gaussian_unit_squares_to_minus_one():
    i = ScalarExpr.imaginary_unit(1)
    assert (i * i).to_fraction() == -1


def test_extension_constant_printing():
    assert str(P("3 + 4*I", (), 1)) == "3 + 4*I"
    assert str(P("2*I*sqrt(3)", (), 3)) == "2*I*sqrt(3)"


def test_field_mismatch():
    a = ScalarExpr.imaginary_unit(1)
    b = ScalarExpr.imaginary_unit(2)
    with pytest.raises(FieldMismatch):
        a + b


def test_rationals_print_lowest_terms():
    assert str(P("2/4*x0")) == "1/2*x0"


@pytest.mark.parametrize("text", ["x0^2 + 1/2*x1", "(x0 - x1)^3/(1 + x0^2)", "-x0*x1 + 7/3", "1/(x0*x1)"])
def test_parse_print_parse_fixed_point(text):
    e = P(text)
    assert P(str(e)) == e
    assert str(P(str(e))) == str(e)


# ----------------------------------------------------------------------
# differentiation


def test_power_rule():
    assert differentiate(P("1/x0"), "x0") == P("-1/x0^2")


def test_partial_derivative():
    assert differentiate(P("x0^2*x1"), "x0") == P("2*x0*x1")


def test_mixed_partials():
    f = P("x0^3*x1^2")
    a = differentiate(differentiate(f, "x0"), "x1")
    b = differentiate(differentiate(f, "x1"), "x0")
    assert a == b == P("6*x0^2*x1")


# ----------------------------------------------------------------------
# jets


def test_binomial_jet():
    j = jet_of(parse_expr("(1 - r^2/4)^2", ("r",)), ("r",), 4)
    assert [Fraction(int(c.numerator), int(c.denominator)) if c else 0 for c in j.coefficients()] == [
        1, 0, Fraction(-1, 2), 0, Fraction(1, 16)]


def test_jet_derivative_drops_order():
    j = JetScalar.from_coefficients([5, 1, 3], "r")
    d = j.diff("r")
    assert d.order == 1
    assert d == JetScalar.from_coefficients([1, 6], "r")


def test_jet_invert_examples():
    inv = jet_invert(JetScalar.from_coefficients([1, 1, 0], "r"))
    assert inv == JetScalar.from_coefficients([1, -1, 1], "r")
    assert jet_invert(JetScalar.from_coefficients([2], "r")) == JetScalar.from_coefficients([Fraction(1, 2)], "r")
    j = jet_of(parse_expr("1 - r^2/2 + r^4/16", ("r",)), ("r",), 4)
    expect = JetScalar.from_coefficients([1, 0, Fraction(1, 2), 0, Fraction(3, 16)], "r")
    assert jet_invert(j) == expect
    # oracle: the product is 1 modulo r^5
    assert (j * expect).truncate(4) == JetScalar.constant(1, ("r",), 4)


def test_jet_invert_zero_constant():
    with pytest.raises(ZeroConstantTerm):
        jet_invert(JetScalar.from_coefficients([0, 1], "r"))


def test_jet_exp_log_series():
    j = JetScalar.from_coefficients([0, 1, 0, 0], "r")
    e = jet_exp(j)
    assert e == JetScalar.from_coefficients([1, 1, Fraction(1, 2), Fraction(1, 6)], "r")


def test_jet_coefficients_in_other_variables():
    j = jet_of(P("x1/(1 - x0)"), ("x0",), 3)
    for k in range(4):
        assert j[(k,)] == P("x1", ("x1",))


# ----------------------------------------------------------------------
# surds


def test_surd_square_is_rational():
    s = Surd.sqrt(P("x0^2 + 1"))
    assert s.squared() == P("x0^2 + 1")
    assert (s * s).rational_part() == P("x0^2 + 1")


def test_surd_inverse():
    s = Surd.sqrt(P("x0^2 + 1"))
    prod = s * s.inverse()
    assert prod.rational_part() == 1


# ----------------------------------------------------------------------
# properties

small = st.fractions(min_value=-5, max_value=5, max_denominator=5)
coeffs = st.lists(small, min_size=3, max_size=3)


def _poly(c, names=X):
    a, b, d = c
    return parse_expr(f"({a})*x0^2 + ({b})*x0*x1 + ({d})*x1 + 1", names)


@settings(max_examples=30, deadline=None)
@given(coeffs, coeffs, coeffs)
def test_field_axioms(c1, c2, c3):
    a, b, c = _poly(c1), _poly(c2), _poly(c3)
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert (a / b) * b == a
    assert a * a.inverse() == 1


@settings(max_examples=30, deadline=None)
@given(coeffs, coeffs)
def test_canonical_form_idempotent(c1, c2):
    e = _poly(c1) / _poly(c2)
    again = ScalarExpr.from_polys(e.numer, e.denom, e.variables, e.constant_field)
    assert again == e and str(again) == str(e)
    assert parse_expr(str(e), X) == e


@settings(max_examples=25, deadline=None)
@given(coeffs, coeffs, st.integers(min_value=0, max_value=4))
def test_jet_ring_homomorphism(c1, c2, order):
    a, b = _poly(c1), _poly(c2)
    ja = jet_of(a, ("x0",), order)
    jb = jet_of(b, ("x0",), order)
    assert jet_of(a * b, ("x0",), order) == (ja * jb).truncate(order)
    assert jet_of(a / b, ("x0",), order) == (ja * jet_invert(jb)).truncate(order)


@settings(max_examples=25, deadline=None)
@given(coeffs, st.integers(min_value=1, max_value=4))
def test_differentiation_commutes_with_truncation(c1, order):
    e = _poly(c1) / parse_expr("1 + x0", X)
    j = jet_of(e, ("x0",), order)
    assert jet_of(differentiate(e, "x1"), ("x0",), order) == j.diff("x1")


@settings(max_examples=25, deadline=None)
@given(coeffs, coeffs)
def test_mixed_partials_commute(c1, c2):
    f = _poly(c1) / _poly(c2)
    assert differentiate(differentiate(f, "x0"), "x1") == differentiate(differentiate(f, "x1"), "x0")
