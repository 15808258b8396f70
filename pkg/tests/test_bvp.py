from fractions import Fraction

import pytest

from cce_workbench.bvp import (
    bianchi_residual, leading_coefficient, leading_symbol_residual, verify_bvp,
    verify_conformal_boundary_chain, verify_order0, verify_order1, verify_order2_structure,
    verify_order2l, verify_order3, verify_system_structure,
)
from cce_workbench.errors import ChartError, DimensionError
from cce_workbench.kernel import parse_expr
from cce_workbench.tensors import MetricChart
from cce_workbench.tensors import algebra as al

X4 = ("x0", "x1", "x2", "x3")
Y3 = X4[1:]


def adapted(entries, names=X4):
    return MetricChart(MetricChart.diagonal(entries, names).g, names, boundary_adapted=True)


EUCLID = adapted(["1"] * 4)
FLAT3 = MetricChart.diagonal(["1"] * 3, Y3)
PHI = parse_expr("1 + x0*(x1^2 + x2)", X4)


def test_order0_restriction():
    g = adapted(["1", "1 + x0*x1", "1 + x2^2", "1"])
    h = MetricChart.diagonal(["1", "1 + x2^2", "1"], Y3)
    assert verify_order0(g, h).is_zero()
    assert not verify_order0(g, FLAT3).is_zero()


def test_order0_chart_mismatch():
    with pytest.raises(ChartError):
        verify_order0(EUCLID, MetricChart.diagonal(["1"] * 3, ("y1", "y2", "y3")))


def test_order1_harmonic_gauge():
    assert verify_order1(EUCLID).is_zero()
    # Christoffel oracle: g^eb d_e g_ab - 1/2 g^eb d_a g_eb = g_ae Gamma^e
    g = MetricChart.diagonal(["1", "1 + x0^2*x1", "1", "1"], X4)
    gam = al.einsum("bc,abc->a", g.inv, g.christoffel_array)
    low = al.einsum("ae,e->a", g.g, gam)
    assert al.all_zero(al.sub(verify_order1(g).components, low))
    assert not verify_order1(g).is_zero()


def test_order3_bianchi_and_principal():
    g = adapted(["1", "1 + x0*x1/4", "1", "1 + x2^2/4"])
    o3 = verify_order3(g)
    assert bianchi_residual(g).is_zero()
    assert o3["bianchi"].is_zero()
    assert o3["principal_full"].is_zero()
    assert not o3["applicable"] and o3["principal"] is None


def test_order3_reduced_form_constant_metric():
    g = MetricChart.diagonal(["1", "2", "3", "1/5"], X4)
    o3 = verify_order3(g)
    assert o3["applicable"]
    assert o3["principal"].is_zero()


# ----------------------------------------------------------------------
# boundary chain


def test_conformal_chain_with_matching_constant():
    rep = verify_conformal_boundary_chain(EUCLID, PHI, 0)
    assert rep.all_pass
    assert al.is_zero(rep.extras["scalar_constant"])
    assert rep.notes["difA"].startswith("verified via derivation chain")


def test_conformal_chain_wrong_constant_flips_only_lapphi():
    rep = verify_conformal_boundary_chain(EUCLID, PHI, 1)
    assert rep.failing() == ["lapphi"]
    # the two routes agree: the law fails exactly when S(gbar) - c is nonzero on the boundary
    assert not al.is_zero(rep.extras["scalar_constant"])


def test_conformal_chain_requires_unit_factor():
    with pytest.raises(ChartError):
        verify_conformal_boundary_chain(EUCLID, parse_expr("2 + x0", X4))
    with pytest.raises(ChartError):
        verify_conformal_boundary_chain(MetricChart.diagonal(["1"] * 4, X4), PHI)


def test_tangential_ricci_identity():
    s = verify_order2_structure(EUCLID, PHI, FLAT3)
    assert s["conricij"].is_zero()
    # with the default constant the scalar law does not hold for this phi
    assert not s["order2"].is_zero()


def test_order2l_two_routes_n6():
    names = tuple(f"y{k}" for k in range(1, 6))
    h = MetricChart.diagonal(["1 + y1^2", "1", "1", "1", "1"], names)
    assert verify_order2l(h, 6, 2).is_zero()
    bump = {(0, 0): parse_expr("y2^3", names)}
    assert verify_order2l(h, 6, 2, bump).is_zero()


def test_order2l_range():
    with pytest.raises(DimensionError):
        verify_order2l(FLAT3, 4, 2)


# ----------------------------------------------------------------------
# interior system


def test_leading_coefficients():
    assert leading_coefficient(4) == Fraction(-1, 4)
    assert leading_coefficient(6) == Fraction(1, 16)


@pytest.mark.parametrize("n", [4, 6])
def test_leading_symbol(n):
    assert al.all_zero(leading_symbol_residual(n))


def test_leading_symbol_odd():
    with pytest.raises(DimensionError):
        leading_symbol_residual(5)


def test_system_structure_euclidean_and_constant():
    for g in (EUCLID, MetricChart.diagonal(["1", "2", "3", "1/5"], X4)):
        rep = verify_system_structure(g)
        assert rep.passed == {"identity": True, "reduced": True}


def test_system_structure_hyperbolic():
    rep = verify_system_structure(MetricChart.conformally_flat("1/x0^2", X4))
    assert rep.passed == {"identity": True}
    assert "not applicable" in rep.notes["reduced"]


def test_system_structure_odd():
    with pytest.raises(DimensionError):
        verify_system_structure(MetricChart.diagonal(["1"] * 3, X4[:3]))


def test_verify_bvp_euclidean():
    rep = verify_bvp(EUCLID, FLAT3)
    assert rep.all_pass
    assert set(rep.passed) >= {"order0", "order1", "order3_bianchi", "order3_principal", "system_reduced"}


def test_verify_bvp_negative_control():
    g = adapted(["1", "1 + x0^2*x1", "1", "1"])
    rep = verify_bvp(g, FLAT3)
    assert rep.failing() == ["order1"]
