from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cce_workbench import adn
from cce_workbench.adn import (
    SymbolSystem, TauPolynomial, adjugate_symbol, build_paper_system, char_poly,
    characteristic_polynomial, complementing_check, m_minus, m_plus, principal_parts,
    tangential, uniform_ellipticity_check, zero_block,
)
from cce_workbench.errors import ConditionCountMismatch, DimensionError, InvalidWeights
from cce_workbench.kernel import ScalarExpr
from cce_workbench.tensors import algebra as al

LAP3 = ["xi0^2 + xi1^2 + xi2^2"]


def laplace(B, w_B, n=3):
    L = [["+".join(f"xi{k}^2" for k in range(n))]]
    return SymbolSystem.from_strings(n, L, [B], [2], [0], [w_B])


# ----------------------------------------------------------------------
# tau polynomials


def test_tau_polynomial_printing_and_evaluation():
    p = TauPolynomial([25, 0, 1])
    assert str(p) == "tau^2 + 25"
    assert p(3).to_fraction() == 34
    q, r = p.divide_root(ScalarExpr.constant(5, ()))
    assert r.to_fraction() == 50
    assert q == TauPolynomial([5, 1])


small = st.integers(min_value=-6, max_value=6)
polys = st.lists(small, min_size=1, max_size=4)


@settings(max_examples=40, deadline=None)
@given(polys, polys, small)
def test_tau_ring_evaluation(a, b, x):
    pa, pb = TauPolynomial(a), TauPolynomial(b)
    assert (pa * pb)(x) == pa(x) * pb(x)
    assert (pa + pb)(x) == pa(x) + pb(x)
    assert (pa - pb)(x) == pa(x) - pb(x)
    assert (pa ** 2)(x) == pa(x) * pa(x)


@settings(max_examples=40, deadline=None)
@given(polys, st.lists(small, min_size=2, max_size=3).filter(lambda c: c[-1] != 0))
def test_tau_division(a, b):
    pa, pb = TauPolynomial(a), TauPolynomial(b)
    q, r = pa.divmod(pb)
    assert q * pb + r == pa
    assert r.is_zero() or r.degree < pb.degree


# ----------------------------------------------------------------------
# principal parts and characteristic polynomial


def test_principal_parts_drop_lower_order():
    s = SymbolSystem.from_strings(3, [["xi0^2 + xi1^2 + xi2^2 + xi1"]], [["1 + xi0"]], [2], [0], [-1])
    Lp, Bp = principal_parts(s)
    assert str(Lp[0, 0]) == "xi0^2 + xi1^2 + xi2^2"
    assert str(Bp[0, 0]) == "xi0"


def test_scalar_laplacian_char_poly():
    s = laplace(["1"], -2)
    Lp, _ = principal_parts(s)
    cp = characteristic_polynomial(Lp, [3, 4])
    assert cp.degree == 2
    P = char_poly(Lp, [3, 4])
    assert str(P) == "tau^2 + 25"
    assert str(m_plus(cp)) == "tau - 5*I"
    assert str(m_minus(cp)) == "tau + 5*I"
    # M+ M- lc = P
    assert m_plus(cp) * m_minus(cp) * TauPolynomial([cp.unit], (), cp.D) == TauPolynomial(P.coeffs, (), cp.D)


def test_dirichlet_and_neumann_complement():
    for B, w in ((["1"], -2), (["xi0"], -1)):
        r = complementing_check(laplace(B, w), [3, 4])
        assert r.passed and r.rank == 1


def test_oblique_condition_fails_on_one_side():
    s = SymbolSystem.from_strings(2, [["xi0^2 + xi1^2"]], [["xi0 + I*xi1"]], [2], [0], [-1])
    assert complementing_check(s, [1]).passed
    bad = complementing_check(s, [-1])
    assert not bad.passed
    assert bad.rank == 0
    assert bad.certificate_verified


def test_adjugate_identity():
    s = SymbolSystem.from_strings(
        3, [["xi0^2 + xi1^2 + xi2^2", "xi0^2"], ["0", "xi0^2 + xi1^2 + xi2^2"]],
        [["1", "0"], ["0", "1"]], [2, 2], [0, 0], [-2, -2])
    Lp, _ = principal_parts(s)
    adj = adjugate_symbol(Lp, [3, 4])
    assert str(adj[0][0]) == "tau^2 + 25"
    assert str(adj[0][1]) == "-tau^2"
    assert adj[1][0].is_zero()
    det = char_poly(Lp, [3, 4])
    xi = tangential(3, [3, 4])
    nu = [1, 0, 0]
    L = [[adn.symbol_at(Lp[i, j], xi, nu) for j in range(2)] for i in range(2)]
    for i in range(2):
        for j in range(2):
            acc = sum((L[i][k] * adj[k][j] for k in range(2)), TauPolynomial([]))
            assert acc == (det if i == j else TauPolynomial([]))


def test_zero_covector_rejected():
    with pytest.raises(ValueError):
        tangential(3, [0, 0])
    with pytest.raises(DimensionError):
        tangential(3, [1, 2, 3])


def test_weight_validation():
    with pytest.raises(InvalidWeights):
        SymbolSystem.from_strings(3, [LAP3], [["xi0^3"]], [2], [0], [-2])
    with pytest.raises(InvalidWeights):
        SymbolSystem.from_strings(3, [LAP3], [["1"]], [2], [1], [-2])


def test_condition_count_mismatch():
    s = SymbolSystem.from_strings(3, [LAP3], [["1"], ["xi0"]], [2], [0], [-2, -1])
    with pytest.raises(ConditionCountMismatch):
        complementing_check(s, [3, 4])


def test_uniform_ellipticity():
    Lp, _ = principal_parts(laplace(["1"], -2))
    assert uniform_ellipticity_check(Lp, 3).passed
    s = SymbolSystem.from_strings(3, [["xi0^2 - xi1^2 + xi2^2"]], [["1"]], [2], [0], [-2])
    Lp, _ = principal_parts(s)
    assert not uniform_ellipticity_check(Lp, 3).passed


# ----------------------------------------------------------------------
# the gauge-fixed system


def test_gauge_system_counts_n4():
    s = build_paper_system(4)
    assert (s.N, s.M, s.m) == (10, 20, 20)
    assert [b["size"] for b in s.blocks] == [6, 6, 4, 4]
    e = uniform_ellipticity_check(principal_parts(s)[0], 4)
    assert e.passed and e.degree == 40


def test_gauge_system_counts_n6():
    s = build_paper_system(6)
    assert (s.N, s.M, s.m) == (21, 63, 63)
    assert [b["size"] for b in s.blocks] == [15, 15, 6, 6, 21]


def test_gauge_system_rejects_odd():
    with pytest.raises(DimensionError):
        build_paper_system(5)


@pytest.mark.parametrize("xi", [(3, 4, 0), (1, 2, 2)])
def test_gauge_system_complementing(xi):
    r = complementing_check(build_paper_system(4), list(xi))
    assert r.passed and r.rank == 20


def test_zeroed_block_fails_with_certificate():
    s = zero_block(build_paper_system(4), "order2b")
    r = complementing_check(s, [3, 4, 0])
    assert not r.passed
    assert r.rank == 16
    assert r.certificate is not None and r.certificate_verified


# ----------------------------------------------------------------------
# the F block


@pytest.mark.parametrize("xi", adn.pythagorean_points(4, 5))
def test_f_block_nonsingular_at_root(xi):
    norm = sum(x * x for x in xi) ** Fraction(1, 2)
    tau = ScalarExpr.imaginary_unit(1) * int(norm)
    F = adn.f_block(4, xi, tau)
    assert not al.is_zero(al.determinant(F))
    A, v, w, b = adn.f_block_column_reduce(F, tau)
    assert al.all_zero(al.sub(A, adn.a_prime_formula(4, xi)))


def test_rank_one_charpoly():
    lam = ScalarExpr.variable("lam", ("lam",))
    # lam^(n-2) (lam - (3-n)/(n-1) |xi|^2) with |xi|^2 = 9
    expect = lam ** 3 + 3 * lam ** 2
    assert adn.rank_one_charpoly(4, (1, 2, 2)) == expect
