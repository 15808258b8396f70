from fractions import Fraction

import pytest

from cce_workbench.errors import DimensionError
from cce_workbench.kernel import parse_expr
from cce_workbench.obstruction import (
    bach, fg_obstruction, obstruction_leading, obstruction_prefactor, weyl,
)
from cce_workbench.tensors import MetricChart, TensorField, laplacian_power, schouten
from cce_workbench.tensors import algebra as al

from conftest import jet_metric

X4 = ("x0", "x1", "x2", "x3")
Y4 = ("y1", "y2", "y3", "y4")


def test_euclidean_bach_zero():
    assert bach(MetricChart.diagonal(["1"] * 4, X4)).is_zero


def test_bach_of_rescaled_hyperbolic_space():
    # phi^2 delta/x0^2 with phi = x0 (1 + x1^2)
    g = MetricChart.conformally_flat("(1 + x1^2)^2", X4)
    assert bach(g).is_zero
    assert bach(g, "weyl").is_zero


BACH_FIXTURE = {
    (0, 0): "(-7/96*x0*x1^5 - 7/96*x1^4 - 5/12*x0*x1 + 1/6)/(x0^5*x1^5 + 5*x0^4*x1^4 + 10*x0^3*x1^3"
            " + 10*x0^2*x1^2 + 5*x0*x1 + 1)",
    (0, 1): "7/12*x1^2/(x0^4*x1^4 + 4*x0^3*x1^3 + 6*x0^2*x1^2 + 4*x0*x1 + 1)",
    (1, 1): "49/96*x1^4/(x0^3*x1^3 + 3*x0^2*x1^2 + 3*x0*x1 + 1)",
    (2, 2): "(-7/32*x0*x1^5 - 7/32*x1^4 + 5/24*x0*x1 - 1/12)/(x0^5*x1^5 + 5*x0^4*x1^4 + 10*x0^3*x1^3"
            " + 10*x0^2*x1^2 + 5*x0*x1 + 1)",
}
BACH_FIXTURE[(3, 3)] = BACH_FIXTURE[(2, 2)]


def test_bach_polynomial_perturbation_fixture():
    g = MetricChart.diagonal(["1", "1 + x0*x1", "1", "1"], X4)
    B = bach(g)
    # the two routes are formula-distinct oracles for each other
    assert al.all_zero(al.sub(B.components, bach(g, "weyl").components))
    assert not B.is_zero
    for a in range(4):
        for b in range(a, 4):
            expect = parse_expr(BACH_FIXTURE[(a, b)], X4) if (a, b) in BACH_FIXTURE else 0
            assert al.is_zero(B[a, b] - expect)
            assert al.is_zero(B[b, a] - expect)


@pytest.mark.parametrize("seed", [3, 4])
def test_bach_symmetric_trace_free(seed):
    g = jet_metric(seed, X4, 5)
    B = bach(g)
    assert not B.is_zero
    assert B.is_symmetric()
    assert al.is_zero(B.trace(g))


def test_bach_wrong_dimension():
    with pytest.raises(DimensionError):
        bach(MetricChart.diagonal(["1"] * 3, X4[:3]))
    with pytest.raises(ValueError):
        bach(MetricChart.diagonal(["1"] * 4, X4), "other")


def test_weyl_vanishes_conformally_flat():
    assert al.all_zero(weyl(MetricChart.conformally_flat("1/(1 + x0^2 + x3^2)", X4)))


# ----------------------------------------------------------------------
# leading part


def test_prefactors():
    assert obstruction_prefactor(4) == 1
    assert obstruction_prefactor(6) == Fraction(-1, 2)
    assert obstruction_prefactor(8) == Fraction(1, 8)


@pytest.mark.parametrize("n", [4, 6])
def test_leading_flat(n):
    names = tuple(f"x{k}" for k in range(n))
    O = obstruction_leading(MetricChart.diagonal(["1"] * n, names))
    assert O.is_zero
    assert O.leading_only == (n >= 6)


def test_leading_n4_formula():
    g = MetricChart.diagonal(["1 + x1^2/4", "1", "1 + x0*x2/4", "1"], X4)
    O = obstruction_leading(g)
    lapP = laplacian_power(schouten(g), g, 1).components
    hess = g.hessian(g.scalar)
    expect = al.sub(lapP, al.scal(Fraction(1, 6), hess))
    assert al.all_zero(al.sub(O.components, expect))


def test_leading_hyperbolic_n6():
    names = tuple(f"x{k}" for k in range(6))
    g = MetricChart.conformally_flat("1/x0^2", names)
    # P = -g/2 is parallel and S is constant, so every term vanishes
    assert al.all_zero(al.add(schouten(g).components, al.scal(Fraction(1, 2), g.g)))
    assert obstruction_leading(g).is_zero


def test_leading_odd_n():
    with pytest.raises(DimensionError):
        obstruction_leading(MetricChart.diagonal(["1"] * 3, X4[:3]))


# ----------------------------------------------------------------------
# recursion route


def test_fg_obstruction_flat_and_sphere():
    assert fg_obstruction(MetricChart.diagonal(["1"] * 4, Y4), 4).is_zero()
    h = MetricChart.conformally_flat("4/(1+y1^2+y2^2+y3^2+y4^2)^2", Y4)
    assert fg_obstruction(h, 4).is_zero()


@pytest.mark.parametrize("seed", [0, 1])
def test_fg_obstruction_equals_bach(seed):
    h = jet_metric(seed, Y4, 4)
    O = fg_obstruction(h, 4)
    assert not O.is_zero()
    # measured proportionality constant: exactly 1
    assert al.all_zero(al.sub(O.components, bach(h).components))
    tr = al.einsum("ab,ab->", h.inv, O.components)
    assert al.is_zero(tr)


def test_fg_obstruction_odd_n():
    with pytest.raises(DimensionError):
        fg_obstruction(MetricChart.diagonal(["1"] * 3, Y4[:3]), 3)
