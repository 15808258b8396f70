from fractions import Fraction

import pytest
import sympy as sp

from cce_workbench.errors import ChartError, DimensionError, RecursionDegenerate
from cce_workbench.fg import (
    almost_geodesic_jet, boundary_curvature, einstein_residual_full, fg_expand,
    geodesic_defect, geodesic_metric_from_expansion, lowest_residual_order, series_residual,
)
from cce_workbench.kernel import parse_expr
from cce_workbench.tensors import MetricChart, schouten
from cce_workbench.tensors import algebra as al
from cce_workbench.tensors.metric import second_fundamental_form

from conftest import jet_metric

Y3 = ("y1", "y2", "y3")
Y4 = ("y1", "y2", "y3", "y4")
Y5 = ("y1", "y2", "y3", "y4", "y5")


def sphere(names):
    return MetricChart.conformally_flat("4/(1+" + "+".join(f"{y}^2" for y in names) + ")^2", names)


def test_flat_boundary_has_trivial_expansion():
    e = fg_expand(MetricChart.diagonal(["1"] * 3, Y3), 4, 2)
    assert al.all_zero(e.coefficient(1))
    assert al.all_zero(e.coefficient(2))


def test_sphere_n4_second_coefficient():
    h = sphere(Y3)
    e = fg_expand(h, 4, 2)
    assert al.all_zero(e.coefficient(1))
    assert al.all_zero(al.add(e.coefficient(2), al.scal(Fraction(1, 2), h.g)))
    # independent route: g2 = -P(h)
    assert al.all_zero(al.add(e.coefficient(2), schouten(h).components))


def test_sphere_n6_fourth_coefficient():
    # hyperbolic space: drho^2 + (1 - rho^2/4)^2 h
    h = sphere(Y5)
    e = fg_expand(h, 6, 4)
    assert al.all_zero(al.add(e.coefficient(2), al.scal(Fraction(1, 2), h.g)))
    assert al.all_zero(e.coefficient(3))
    assert al.all_zero(al.sub(e.coefficient(4), al.scal(Fraction(1, 16), h.g)))


def test_degenerate_order_refused():
    with pytest.raises(RecursionDegenerate):
        fg_expand(sphere(Y3), 4, 3)
    with pytest.raises(DimensionError):
        fg_expand(sphere(Y3), 5, 2)


def test_odd_coefficients_vanish_on_jets():
    e = fg_expand(jet_metric(0, Y4, 3), 5, 3)
    assert al.all_zero(e.coefficient(1))
    assert al.all_zero(e.coefficient(3))
    assert not al.all_zero(e.coefficient(2))


def test_series_metric_block_form():
    e = fg_expand(sphere(Y3), 4, 2)
    gs = geodesic_metric_from_expansion(e)
    assert gs.coords == ("rho",) + Y3
    assert gs.g[0, 0] == 1 or al.is_zero(gs.g[0, 0] - 1)
    for i in range(1, 4):
        assert al.is_zero(gs.g[0, i])
    assert second_fundamental_form(gs).is_zero()


def test_series_residual_orders():
    h = sphere(Y3)
    assert lowest_residual_order(series_residual(fg_expand(h, 4, 2), 2)) == 3
    # dropping g2 leaves a mismatch one order earlier
    assert lowest_residual_order(series_residual(fg_expand(h, 4, 1), 2)) == 1


def test_full_bulk_residual_agrees():
    e = fg_expand(sphere(Y3), 4, 2)
    R = einstein_residual_full(geodesic_metric_from_expansion(e, 3))
    low = lowest_residual_order(R)
    assert low is None or low >= 2


# ----------------------------------------------------------------------
# geodesic defining function


X3 = ("x0", "x1", "x2")


def _adapted(entries):
    g = MetricChart.diagonal(entries, X3)
    return MetricChart(g.g, X3, boundary_adapted=True)


def test_almost_geodesic_jet_example():
    g = _adapted(["1/(1+x0*x1)", "1+x0^2", "1"])
    u = almost_geodesic_jet(g, 3)
    x1 = parse_expr("x1", ("x1",))
    assert al.is_zero(u[(1,)] + x1 / 2)
    assert geodesic_defect(g, u).is_zero()

    # sympy oracle: e^(-2u) g^00 (d(e^u x0)/dx0)^2 + tangential terms = 1 mod x0^4
    a, b = sp.symbols("x0 x1")
    U = sum(sp.sympify(str(u[(k,)]).replace("^", "**"), locals={"x1": b}) * a ** k for k in range(1, 4))
    r = sp.exp(U) * a
    norm = sp.exp(-2 * U) * ((1 + a * b) * sp.diff(r, a) ** 2 + sp.diff(r, b) ** 2 / (1 + a ** 2))
    assert sp.series(norm - 1, a, 0, 4).removeO() == 0


def test_almost_geodesic_needs_adapted_chart():
    with pytest.raises(ChartError):
        almost_geodesic_jet(MetricChart.diagonal(["1"] * 3, X3), 2)


# ----------------------------------------------------------------------
# boundary curvature


def test_boundary_scalar_sphere_n6():
    ric, S = boundary_curvature(sphere(Y5), 6, 0)
    assert al.is_zero(S - 25)


def test_boundary_scalar_matches_intrinsic():
    h = MetricChart.diagonal(["1+y2^2/4", "1", "1", "1", "1"], Y5)
    _, S = boundary_curvature(h, 6, 0)
    # g'' = -2P at rho = 0 gives S = S(h) + 2 tr P = 5/4 S(h) in boundary dimension 5
    assert al.is_zero(S - Fraction(5, 4) * h.scalar)
    assert not al.is_zero(S)


@pytest.mark.parametrize("p", [0, 1])
def test_boundary_curvature_ignores_higher_coefficients(p):
    h = MetricChart.diagonal(["1+y2^2/4", "1", "1", "1", "1"], Y5)
    r0, s0 = boundary_curvature(h, 6, p)
    bump = {(0, 1): parse_expr("y2", Y5), (2, 2): parse_expr("y1*y3", Y5)}
    r1, s1 = boundary_curvature(h, 6, p, bump)
    assert not al.all_zero(r0)
    assert al.all_zero(al.sub(r0, r1))
    assert al.all_zero(al.sub(s0, s1))


def test_boundary_curvature_range():
    with pytest.raises(ValueError):
        boundary_curvature(sphere(Y5), 6, 3)
