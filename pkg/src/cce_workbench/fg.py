"""Boundary expansion of geodesic compactifications of Einstein metrics.

For gbar = drho^2 + g_rho with g_rho = sum a_p rho^p the tangential Einstein
condition rho Ric(gbar) + (n-2) Hess(rho) + (Lap rho) gbar = 0 reads

    E = rho g'' + (2-n) g' - tr(g^-1 g') g - rho g' g^-1 g'
        + rho/2 tr(g^-1 g') g' - 2 rho Ric(g_rho) = 0

(prime = d/drho, Ric intrinsic to the level sets).  The rho^(p-1) coefficient
of E is linear in a_p with operator p[(p+1-n) a - tr_h(a) h], degenerate at
p = n-1.  The recursion runs on jets in rho whose coefficients are either exact
rational functions of the boundary coordinates or, for generic boundary data,
joint jets in (rho, x) truncated by total degree.  The joint truncation is
consistent because every term of E lowers the joint degree by exactly one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ChartError, DimensionError, NonDivisible, RecursionDegenerate
from .kernel.jets import JetScalar, jet_exp, jet_of
from .kernel.scalar import ScalarExpr
from .tensors import algebra as al
from .tensors.algebra import einsum, is_zero
from .tensors.metric import (
    MetricChart, TensorField, at_boundary, schouten, trace_free_part,
)

RHO = "rho"


# ----------------------------------------------------------------------
# representation helpers


def _mode(h: MetricChart):
    """('rational', None) or ('jet', total_order) depending on h's components."""
    orders = [x.order for x in h.g.reshape(-1) if isinstance(x, JetScalar)]
    if not orders:
        return "rational", None
    for x in h.g.reshape(-1):
        if isinstance(x, JetScalar) and x.dist != h.coords:
            raise ChartError("boundary jets must be taken in the boundary coordinates")
    if any(o is None for o in orders):
        raise ChartError("boundary jets need a finite truncation order")
    return "jet", min(orders)


def _dist(h: MetricChart, mode) -> tuple:
    if RHO in h.coords:
        raise ChartError(f"boundary coordinate name {RHO!r} is reserved")
    return (RHO,) + (h.coords if mode == "jet" else ())


def _lift_boundary(x, dist):
    """Boundary scalar -> jet over dist with rho exponent 0."""
    if isinstance(x, JetScalar):
        return JetScalar({(0,) + m: c for m, c in x.terms.items()}, dist, x.order, True)
    if is_zero(x):
        return JetScalar({}, dist, None, True)
    return JetScalar.constant(x, dist, None)


def _slice(j, k: int):
    """Coefficient of rho^k as a jet with rho exponent 0."""
    if isinstance(j, int):
        return JetScalar({}, (RHO,), None, True) if j == 0 else None
    if j.order is not None and j.order < k:
        raise ValueError("coefficient beyond truncation order")
    terms = {(0,) + m[1:]: c for m, c in j.terms.items() if m[0] == k}
    order = None if len(j.dist) == 1 else j.order - k
    return JetScalar(terms, j.dist, order, True)


def _shift(j: JetScalar, k: int, order):
    terms = {(m[0] + k,) + m[1:]: c for m, c in j.terms.items()}
    return JetScalar(terms, j.dist, order)


def _series(coeffs, dist, order):
    m = coeffs[0].shape[0]
    out = al.zeros((m, m))
    for i in range(m):
        for j in range(m):
            acc = JetScalar({}, dist, order, True)
            for p, a in enumerate(coeffs):
                x = a[i, j]
                if isinstance(x, int) and x == 0:
                    continue
                acc = acc + _shift(x, p, order)
            out[i, j] = acc
    return out


def _drho(arr):
    return al.amap(lambda x: al.d(x, RHO), arr)


def einstein_tangential(gmat, coords: Sequence[str], n: int, dist):
    """The tensor E above for a matrix of rho-jets over the boundary coordinates."""
    chart = MetricChart(gmat, coords)
    ginv = chart.inv
    g1 = _drho(gmat)
    g2 = _drho(g1)
    rho = JetScalar.variable(RHO, dist)
    tr1 = einsum("ab,ab->", ginv, g1, dim=len(coords))
    quad = einsum("ik,kl,jl->ij", g1, ginv, g1, dim=len(coords))
    ric = chart.ricci_array
    parts = [al.scal(rho, g2), al.scal(2 - n, g1)]
    if not is_zero(tr1):
        parts.append(al.scal(-tr1, gmat))
        parts.append(al.scal(rho * tr1 * Fraction(1, 2), g1))
    parts.append(al.scal(-rho, quad))
    parts.append(al.scal(-2 * rho, ric))
    return al.add(*parts)


# ----------------------------------------------------------------------
# expansion


@dataclass
class FGExpansion:
    h: MetricChart
    n: int
    coefficients: list
    obstruction: object = None
    mode: str = "rational"
    jet_order: int | None = None

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def coefficient(self, p: int) -> np.ndarray:
        return self.coefficients[p]


def _solve_step(K, hj, hinv, k: int, n: int):
    m = hj.shape[0]
    trK = einsum("ab,ab->", hinv, K, dim=m)
    t = trK * Fraction(-1, k * (k + 2 - 2 * n)) if not is_zero(trK) else 0
    num = al.add(al.scal(Fraction(-1, k), K), al.scal(t, hj) if not is_zero(t) else al.zeros((m, m)))
    return al.scal(Fraction(1, k + 1 - n), num)


def _recursion(h: MetricChart, n: int, upto: int):
    """Run the recursion for steps 1..upto; returns (jet coefficients, K at the last step)."""
    if h.n != n - 1:
        raise DimensionError(f"boundary metric has dimension {h.n}, expected {n - 1}")
    mode, jorder = _mode(h)
    dist = _dist(h, mode)
    m = h.n
    hj = al.zeros((m, m))
    for i in range(m):
        for j in range(m):
            hj[i, j] = _lift_boundary(h.g[i, j], dist)
    hinv = al.solve_inverse(hj, lambda x: not is_zero(x.constant_term()) if isinstance(x, JetScalar) else not is_zero(x))
    coeffs = [hj]
    K = None
    for k in range(1, upto + 1):
        order = jorder if mode == "jet" else k
        g = _series(coeffs, dist, order)
        E = einstein_tangential(g, h.coords, n, dist)
        K = al.zeros((m, m))
        for i in range(m):
            for j in range(m):
                K[i, j] = _slice(E[i, j], k - 1)
        if k == n - 1:
            return coeffs, K, hj, hinv
        a = _solve_step(K, hj, hinv, k, n)
        a = al.amap(lambda x: x if not isinstance(x, JetScalar) else x, a)
        coeffs.append(a)
    return coeffs, K, hj, hinv


def _to_boundary(x, h: MetricChart, mode):
    if isinstance(x, int):
        return ScalarExpr.constant(x, h.coords) if mode == "rational" else JetScalar({}, h.coords, None, True)
    if mode == "rational":
        c = x.constant_term()
        if isinstance(c, ScalarExpr):
            return c
        return ScalarExpr.constant(c if not isinstance(c, int) else c, h.coords) if not is_zero(c) \
            else ScalarExpr.constant(0, h.coords)
    return JetScalar({m[1:]: c for m, c in x.terms.items()}, h.coords, x.order, True)


def _export(arr, h, mode):
    m = arr.shape[0]
    out = np.empty((m, m), dtype=object)
    for i in range(m):
        for j in range(m):
            out[i, j] = _to_boundary(arr[i, j], h, mode)
    return out


def fg_expand(h: MetricChart, n: int, order: int) -> FGExpansion:
    """Coefficients g^(0..order) of g_rho for the Poincare-Einstein metric with boundary h."""
    if n < 3:
        raise DimensionError("bulk dimension must be at least 3")
    if order >= n - 1:
        raise RecursionDegenerate(
            f"order {order} reaches the degenerate step p = n-1 = {n - 1}; use fg_obstruction")
    if order < 0:
        raise ValueError("order must be non-negative")
    mode, jorder = _mode(h)
    if mode == "jet" and order > jorder:
        raise ValueError("boundary jet order too small for the requested expansion order")
    coeffs, _, _, _ = _recursion(h, n, order)
    out = [_export(a, h, mode) for a in coeffs]
    return FGExpansion(h, n, out, None, mode, jorder)


def degenerate_step_rhs(h: MetricChart, n: int):
    """-K at the step p = n-1 (the right-hand side the recursion cannot absorb)."""
    coeffs, K, hj, hinv = _recursion(h, n, n - 1)
    return al.scal(-1, K), hj, hinv


def fg_obstruction(h: MetricChart, n: int | None = None) -> TensorField:
    """Trace-free part (w.r.t. h) of the unsolvable right-hand side of the degenerate step.

    For an even-dimensional h (h.n == n) the recursion runs in bulk dimension
    n + 1, whose degenerate step p = n carries the ambient obstruction.  For
    h.n == n - 1 the literal bulk-n degenerate step p = n - 1 is evaluated.
    """
    if n is None:
        n = h.n
    if n % 2:
        raise DimensionError("fg_obstruction needs an even n")
    if h.n == n:
        bulk = n + 1
    elif h.n == n - 1:
        bulk = n
    else:
        raise DimensionError(f"boundary dimension {h.n} incompatible with n = {n}")
    mode, jorder = _mode(h)
    if mode == "jet" and jorder < bulk - 1:
        raise ValueError(f"boundary jet order must be at least {bulk - 1}")
    rhs, hj, hinv = degenerate_step_rhs(h, bulk)
    m = h.n
    tr = einsum("ab,ab->", hinv, rhs, dim=m)
    tf = al.sub(rhs, al.scal(tr * Fraction(1, m), hj)) if not is_zero(tr) else rhs
    return TensorField(_export(tf, h, mode), "dd", h)


# ----------------------------------------------------------------------
# series metric


def geodesic_metric_from_expansion(e: FGExpansion, order: int | None = None) -> MetricChart:
    """drho^2 + sum g^(p) rho^p as a MetricChart of rho-jets on (rho, x)."""
    h = e.h
    mode = e.mode
    dist = _dist(h, mode)
    if order is None:
        order = e.jet_order if mode == "jet" else e.order
    m = h.n
    coeffs = []
    for a in e.coefficients:
        arr = al.zeros((m, m))
        for i in range(m):
            for j in range(m):
                arr[i, j] = _lift_boundary(a[i, j], dist)
        coeffs.append(arr)
    g = _series(coeffs, dist, order)
    n = m + 1
    full = al.zeros((n, n))
    full[0, 0] = JetScalar.constant(1, dist, order)
    for i in range(m):
        full[0, i + 1] = JetScalar({}, dist, order, True)
        full[i + 1, 0] = JetScalar({}, dist, order, True)
        for j in range(m):
            full[i + 1, j + 1] = g[i, j]
    return MetricChart(full, (RHO,) + h.coords, boundary_adapted=True, name="geodesic_series")


def series_residual(e: FGExpansion, extra: int = 1):
    """E for the truncated series, with extra orders of rho retained."""
    if e.mode != "rational":
        raise ValueError("series_residual expects rational boundary data")
    gs = geodesic_metric_from_expansion(e, e.order + extra)
    m = e.h.n
    g = gs.g[1:, 1:]
    return einstein_tangential(g, e.h.coords, e.n, (RHO,))


def lowest_residual_order(E) -> int | None:
    """Smallest rho power with a nonzero coefficient in E (None if zero to its order)."""
    best = None
    for x in np.asarray(E).reshape(-1):
        if isinstance(x, JetScalar):
            for mon in x.terms:
                best = mon[0] if best is None else min(best, mon[0])
    return best


def einstein_residual_full(gs: MetricChart, n: int | None = None):
    """rho Ric(gbar) + (n-2) Hess(rho) + (Lap rho) gbar from the full bulk calculus."""
    n = gs.n if n is None else n
    dist = gs.g[0, 0].dist
    rho = JetScalar.variable(RHO, dist)
    hess = gs.hessian(rho)
    lap = einsum("ab,ab->", gs.inv, hess)
    return al.add(al.scal(rho, gs.ricci_array), al.scal(n - 2, hess), al.scal(lap, gs.g))


# ----------------------------------------------------------------------
# geodesic defining function


def almost_geodesic_jet(g: MetricChart, m: int) -> JetScalar:
    """Jet of u with u|0 = 0 solving 2 g^{0a} u_a + rho |du|^2 = (1 - |drho|^2)/rho mod rho^m.

    rho is the coordinate x^0; the answer is a jet in x^0 of order m whose
    coefficients are rational functions of the tangential coordinates.
    """
    if not g.boundary_adapted:
        raise ChartError("almost_geodesic_jet needs a boundary-adapted chart")
    x0 = g.coords[0]
    tang = g.coords[1:]
    g00 = g.inv[0, 0]
    one_minus = 1 - g00
    if isinstance(one_minus, ScalarExpr):
        num = one_minus.numerator()
        if not is_zero(num.subs({x0: 0})) or is_zero(one_minus.denominator().subs({x0: 0})):
            raise NonDivisible("1 - |drho|^2 is not divisible by rho")
    dist = (x0,)
    order = m

    def J(x, o=order + 1):
        return jet_of(x, dist, o, tang) if not isinstance(x, int) else x

    ginv = al.amap(lambda x: J(x), g.inv)
    rho = JetScalar.variable(x0, dist)
    f = J(one_minus, order + 1)
    f = JetScalar({(k[0] - 1,): c for k, c in f.terms.items() if k[0] >= 1}, dist, order)
    base = ginv[0, 0].constant_term()
    u = JetScalar({}, dist, None, True)
    for l in range(1, m + 1):
        trial = u.truncate(l)
        lhs = _const_length_lhs(trial, ginv, g.coords, rho)
        R = (lhs - f).truncate(l - 1)
        r = R[(l - 1,)]
        if not is_zero(r):
            coef = -r / (2 * l * base)
            u = u + JetScalar({(l,): coef}, dist, None)
    return u.truncate(m)


def _const_length_lhs(u, ginv, coords, rho):
    du = np.array([u.diff(c) for c in coords], dtype=object)
    t1 = einsum("a,a->", ginv[0, :], du)
    t2 = einsum("ab,a,b->", ginv, du, du)
    out = 2 * t1 if not is_zero(t1) else 0
    if not is_zero(t2):
        out = out + rho * t2
    if isinstance(out, int):
        return JetScalar({}, rho.dist, u.order, True)
    return out


def geodesic_defect(g: MetricChart, u: JetScalar):
    """1 - |d(e^u rho)|^2 for the metric e^(2u) g, as a jet in x^0 (back-substitution)."""
    x0 = g.coords[0]
    tang = g.coords[1:]
    m = u.order
    order = m + 1
    dist = (x0,)
    eu = jet_exp(u.truncate(order) if u.order is not None else u, order)
    e2u = eu * eu
    comps = al.amap(lambda x: jet_of(x, dist, order, tang) if not isinstance(x, int) else x, g.g)
    gt = MetricChart(al.scal(e2u, comps), g.coords, boundary_adapted=True)
    rho_t = eu * JetScalar.variable(x0, dist)
    d = np.array([rho_t.diff(c) for c in g.coords], dtype=object)
    return 1 - gt.norm_sq(d)


# ----------------------------------------------------------------------
# boundary curvature


def boundary_curvature(h: MetricChart, n: int, p: int, perturb=None):
    """(nabla^p Ric, nabla^p S) of the geodesic series metric at rho = 0.

    perturb: optional mapping (i, j) -> boundary scalar added at rho^(p+3) to
    demonstrate independence from higher coefficients.
    """
    if p < 0 or p + 2 > n - 2:
        raise ValueError(f"p = {p} out of range for n = {n} (need p + 2 <= n - 2)")
    e = fg_expand(h, n, p + 2)
    order = p + 2
    if perturb:
        order = p + 3
        m = h.n
        extra = al.zeros((m, m))
        for (i, j), val in perturb.items():
            extra[i, j] = val
            extra[j, i] = val
        zeros = al.zeros((m, m))
        coeffs = list(e.coefficients)
        while len(coeffs) < p + 3:
            coeffs.append(zeros)
        coeffs.append(extra)
        e = FGExpansion(e.h, e.n, coeffs, None, e.mode, e.jet_order)
    gs = geodesic_metric_from_expansion(e, order)
    ric = TensorField(gs.ricci_array, "dd", gs)
    S = gs.scalar
    if p == 0:
        dric, dS = ric.components, np.array(S, dtype=object)
    else:
        from .tensors.metric import covariant_derivative

        dric = covariant_derivative(ric, gs, p).components
        dS = covariant_derivative(S, gs, p).components
    ric0 = al.amap(lambda x: _at_rho0(x, h), dric)
    S0 = al.amap(lambda x: _at_rho0(x, h), np.asarray(dS, dtype=object))
    return ric0, S0


def _at_rho0(x, h):
    if isinstance(x, JetScalar):
        if x.order is not None and x.order < 0:
            raise ValueError("not enough orders to evaluate at rho = 0")
        c = x.terms.get((0,) * len(x.dist), 0)
        if len(x.dist) > 1:
            return JetScalar({m[1:]: v for m, v in x.terms.items() if m[0] == 0}, h.coords,
                             None if x.order is None else x.order, True)
        return c if not (isinstance(c, int) and c == 0) else 0
    return x
