"""Chart-based Riemannian calculus over exact scalars.

Conventions (fixed by the normalisation tests):

    Gamma^e_ab = 1/2 g^em (d_a g_bm + d_b g_am - d_m g_ab)
    R^r_smn    = d_m Gamma^r_ns - d_n Gamma^r_ms + Gamma^r_ml Gamma^l_ns - Gamma^r_nl Gamma^l_ms
    Ric_sn     = R^r_srn,   S = g^sn Ric_sn

so Ric(delta/x0^2) = -(n-1) g and the round sphere has positive curvature.
Derivative indices of covariant derivatives are prepended.
"""
from __future__ import annotations

from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from ..errors import ChartError, DegenerateMetric, DimensionError
from ..kernel.jets import JetScalar
from ..kernel.parser import parse_expr
from ..kernel.scalar import ScalarExpr
from ..kernel.surd import Surd
from . import algebra as al
from .algebra import einsum, is_zero


_HALF = Fraction(1, 2)


def _unit(x) -> bool:
    if isinstance(x, JetScalar):
        return not is_zero(x.constant_term())
    return not is_zero(x)


class TensorField:
    """Dense components plus an index pattern such as 'udd' (u = up, d = down)."""

    def __init__(self, components, indices: str, chart: "MetricChart | None" = None):
        self.components = np.asarray(components, dtype=object)
        self.indices = indices
        self.chart = chart
        if self.components.ndim != len(indices):
            raise ValueError("index pattern does not match component rank")

    @property
    def valence(self):
        return (self.indices.count("d"), self.indices.count("u"))

    def __getitem__(self, idx):
        return self.components[idx]

    def is_zero(self) -> bool:
        return al.all_zero(self.components)

    def __sub__(self, other):
        o = other.components if isinstance(other, TensorField) else other
        return TensorField(al.sub(self.components, o), self.indices, self.chart)

    def __add__(self, other):
        o = other.components if isinstance(other, TensorField) else other
        return TensorField(al.add(self.components, o), self.indices, self.chart)

    def __neg__(self):
        return TensorField(al.scal(-1, self.components), self.indices, self.chart)

    def scaled(self, c):
        return TensorField(al.scal(c, self.components), self.indices, self.chart)

    def nonzero_entries(self):
        return {idx: self.components[idx] for idx in np.ndindex(self.components.shape)
                if not is_zero(self.components[idx])}

    def __repr__(self):
        return f"TensorField({self.indices}, {self.components.shape})"


class MetricChart:
    """Symmetric metric components over named coordinates."""

    def __init__(self, components, coords: Sequence[str], boundary_adapted: bool = False,
                 name: str | None = None):
        g = al.asobj(components)
        n = len(coords)
        if g.shape != (n, n):
            raise DimensionError(f"metric shape {g.shape} does not match {n} coordinates")
        if n < 2:
            raise DimensionError("dimension must be at least 2")
        for a in range(n):
            for b in range(a + 1, n):
                if not is_zero(g[a, b] - g[b, a]):
                    raise ChartError(f"metric not symmetric in ({a},{b})")
        self.g = g
        self.coords = tuple(coords)
        self.n = n
        self.boundary_adapted = boundary_adapted
        self.name = name

    # construction helpers -----------------------------------------
    @classmethod
    def from_strings(cls, rows, coords, D=None, **kw) -> "MetricChart":
        comps = [[parse_expr(s, coords, D) if isinstance(s, str) else s for s in row] for row in rows]
        return cls(comps, coords, **kw)

    @classmethod
    def diagonal(cls, entries, coords, **kw) -> "MetricChart":
        n = len(coords)
        comps = al.zeros((n, n))
        for i, e in enumerate(entries):
            comps[i, i] = parse_expr(e, coords) if isinstance(e, str) else e
        return cls(comps, coords, **kw)

    @classmethod
    def conformally_flat(cls, factor, coords, **kw) -> "MetricChart":
        n = len(coords)
        return cls.diagonal([factor] * n, coords, **kw)

    def with_components(self, comps, **kw) -> "MetricChart":
        opts = dict(boundary_adapted=self.boundary_adapted, name=self.name)
        opts.update(kw)
        return MetricChart(comps, self.coords, **opts)

    # basic geometry -----------------------------------------------
    @cached_property
    def inv(self):
        return al.solve_inverse(self.g, _unit)

    @cached_property
    def det(self):
        return al.determinant(self.g, _unit)

    @cached_property
    def dg(self):
        """dg[c, a, b] = d_c g_ab."""
        return al.grad(self.g, self.coords)

    @cached_property
    def christoffel_lower(self):
        """Gamma_mab = 1/2 (d_a g_bm + d_b g_am - d_m g_ab), index m first."""
        n, dg = self.n, self.dg
        out = al.zeros((n, n, n))
        for m in range(n):
            for a in range(n):
                for b in range(a, n):
                    s = dg[a, b, m] + dg[b, a, m] - dg[m, a, b]
                    if not is_zero(s):
                        v = s * _HALF
                        out[m, a, b] = v
                        out[m, b, a] = v
        return al.clean(out)

    @cached_property
    def christoffel_array(self):
        """Gamma[e, a, b] = Gamma^e_ab."""
        return einsum("em,mab->eab", self.inv, self.christoffel_lower)

    @cached_property
    def dchristoffel(self):
        """dGamma[c, e, a, b] = d_c Gamma^e_ab."""
        return al.grad(self.christoffel_array, self.coords)

    @cached_property
    def riemann_array(self):
        """R[r, s, m, n] = R^r_smn."""
        G, dG = self.christoffel_array, self.dchristoffel
        t1 = np.transpose(dG, (1, 3, 0, 2))  # d_m Gamma^r_ns -> [r, s, m, n]
        t2 = np.transpose(dG, (1, 3, 2, 0))  # d_n Gamma^r_ms -> [r, s, m, n]
        q1 = einsum("rml,lns->rsmn", G, G)
        q2 = einsum("rnl,lms->rsmn", G, G)
        return al.add(t1, al.scal(-1, t2), q1, al.scal(-1, q2))

    @cached_property
    def riemann_lower(self):
        """R_abcd = g_ae R^e_bcd."""
        return einsum("ae,ebcd->abcd", self.g, self.riemann_array)

    @cached_property
    def ricci_array(self):
        return einsum("rsrn->sn", self.riemann_array)

    @cached_property
    def scalar(self):
        return einsum("sn,sn->", self.inv, self.ricci_array)

    # covariant calculus -------------------------------------------
    def covd(self, T, indices: str):
        """Covariant derivative of an array with index pattern; new index first."""
        n = self.n
        T = np.asarray(T, dtype=object)
        out = al.grad(T, self.coords) if T.ndim else np.array(
            [al.d(T[()], c) for c in self.coords], dtype=object)
        if T.ndim == 0:
            return al.clean(out)
        G = self.christoffel_array
        letters = "ijklpqrstuvw"[: T.ndim]
        parts = [out]
        for pos, kind in enumerate(indices):
            src = list(letters)
            if kind == "u":
                # + Gamma^a_{c z} T^{..z..}
                src[pos] = "z"
                spec = f"{letters[pos]}cz,{''.join(src)}->c{letters}"
                parts.append(einsum(spec, G, T, dim=n))
            else:
                src[pos] = "z"
                spec = f"zc{letters[pos]},{''.join(src)}->c{letters}"
                parts.append(al.scal(-1, einsum(spec, G, T, dim=n)))
        return al.add(*parts)

    def hessian(self, f):
        return self.covd(self.covd(np.array(f, dtype=object), ""), "d")

    def laplacian(self, T, indices: str):
        """g^cd nabla_c nabla_d T."""
        T = np.asarray(T, dtype=object)
        first = self.covd(T, indices)
        second = self.covd(first, "d" + indices)
        letters = "ijklpqrstuvw"[: T.ndim]
        return einsum(f"cd,cd{letters}->{letters}", self.inv, second, dim=self.n)

    def rough(self, T, l: int = 1):
        """D_l: l-fold trace of 2l coordinate derivatives, g^-1 frozen."""
        return rough_array(T, self, l)

    def norm_sq(self, form):
        return einsum("ab,a,b->", self.inv, form, form)


def _raise_coefficients(g: MetricChart, l: int) -> dict:
    """Coefficients of (g^ab xi_a xi_b)^l keyed by exponent tuples."""
    n = g.n
    base: dict = {}
    for a in range(n):
        for b in range(n):
            c = g.inv[a, b]
            if is_zero(c):
                continue
            mon = [0] * n
            mon[a] += 1
            mon[b] += 1
            mon = tuple(mon)
            base[mon] = base[mon] + c if mon in base else c
    poly = {(0,) * n: 1}
    for _ in range(l):
        nxt: dict = {}
        for m1, c1 in poly.items():
            for m2, c2 in base.items():
                m = tuple(x + y for x, y in zip(m1, m2))
                p = c1 * c2
                nxt[m] = nxt[m] + p if m in nxt else p
        poly = {m: c for m, c in nxt.items() if not is_zero(c)}
    return poly


def _multi_diff(x, coords, mon):
    for name, e in zip(coords, mon):
        for _ in range(e):
            x = al.d(x, name)
            if is_zero(x):
                return 0
    return x


def rough_array(T, g: MetricChart, l: int):
    T = np.asarray(T, dtype=object)
    coeffs = _raise_coefficients(g, l)
    out = al.zeros(T.shape)
    for idx in np.ndindex(T.shape):
        x = T[idx]
        if is_zero(x):
            continue
        acc = 0
        for mon, c in coeffs.items():
            dx = _multi_diff(x, g.coords, mon)
            if is_zero(dx):
                continue
            term = c * dx
            acc = term if (isinstance(acc, int) and acc == 0) else acc + term
        out[idx] = acc
    return al.clean(out)


# ----------------------------------------------------------------------
# public operations


def _chart(g) -> MetricChart:
    if not isinstance(g, MetricChart):
        raise TypeError("expected a MetricChart")
    return g


def metric_inverse(g: MetricChart) -> TensorField:
    g = _chart(g)
    return TensorField(g.inv, "uu", g)


def christoffel(g: MetricChart) -> TensorField:
    g = _chart(g)
    return TensorField(g.christoffel_array, "udd", g)


def riemann(g: MetricChart) -> TensorField:
    g = _chart(g)
    return TensorField(g.riemann_array, "uddd", g)


def ricci(g: MetricChart) -> TensorField:
    g = _chart(g)
    return TensorField(g.ricci_array, "dd", g)


def scalar_curvature(g: MetricChart):
    return _chart(g).scalar


def covariant_derivative(T, g: MetricChart, p: int = 1, cap: int = 8) -> TensorField:
    """nabla^p T; scalars may be passed directly."""
    if p < 1:
        raise ValueError("p must be at least 1")
    if isinstance(T, TensorField):
        arr, idx = T.components, T.indices
    else:
        arr, idx = np.array(T, dtype=object), ""
    if arr.ndim + p > cap:
        raise DimensionError("rank cap exceeded")
    for _ in range(p):
        arr = g.covd(arr, idx)
        idx = "d" + idx
    return TensorField(arr, idx, g)


def laplacian_power(T, g: MetricChart, l: int) -> TensorField:
    """Covariant (tr_g nabla^2)^l."""
    if l < 1:
        raise ValueError("l must be at least 1")
    if isinstance(T, TensorField):
        arr, idx = T.components, T.indices
    else:
        arr, idx = np.array(T, dtype=object), ""
    for _ in range(l):
        arr = g.laplacian(arr, idx)
    return TensorField(arr, idx, g)


def rough_trace(f, g: MetricChart, l: int = 1):
    """D_l f; accepts a scalar or a TensorField (component-wise)."""
    if l < 1:
        raise ValueError("l must be at least 1")
    if isinstance(f, TensorField):
        return TensorField(rough_array(f.components, g, l), f.indices, g)
    return rough_array(np.array(f, dtype=object), g, l)[()]


def schouten(g: MetricChart) -> TensorField:
    n = g.n
    if n < 3:
        raise DimensionError("Schouten tensor needs n >= 3")
    from fractions import Fraction

    c = Fraction(1, 2 * (n - 1))
    S = g.scalar
    P = al.scal(Fraction(1, n - 2), al.sub(g.ricci_array, al.scal(S * c if not is_zero(S) else 0, g.g)))
    return TensorField(P, "dd", g)


def trace(T, g: MetricChart):
    arr = T.components if isinstance(T, TensorField) else T
    return einsum("ab,ab->", g.inv, arr)


def trace_free_part(T, g: MetricChart) -> TensorField:
    from fractions import Fraction

    arr = T.components if isinstance(T, TensorField) else np.asarray(T, dtype=object)
    tr = einsum("ab,ab->", g.inv, arr)
    res = al.sub(arr, al.scal(tr * Fraction(1, g.n) if not is_zero(tr) else 0, g.g))
    return TensorField(res, "dd", g)


def _require_adapted(g: MetricChart):
    if not g.boundary_adapted:
        raise ChartError("operation needs a boundary-adapted chart")


def at_boundary(x, coord: str):
    """Restrict a scalar (or Surd) to coord = 0."""
    if isinstance(x, Surd):
        return Surd(at_boundary(x.coef, coord), at_boundary(x.base, coord), x.half)
    if isinstance(x, JetScalar):
        if coord in x.dist:
            if len(x.dist) == 1:
                c = x.constant_term()
                return c
            return x.restrict(**{coord: 0})
        return x.map_coefficients(lambda c: at_boundary(c, coord))
    if isinstance(x, ScalarExpr):
        if coord in x.free_variables():
            return x.subs({coord: 0})
        return x
    return x


def unit_normal(g: MetricChart) -> TensorField:
    """N^a = g^a0 / sqrt(g^00) as Surd components."""
    _require_adapted(g)
    base = g.inv[0, 0]
    comps = al.zeros((g.n,))
    for a in range(g.n):
        comps[a] = Surd(g.inv[a, 0], base, -1)
    return TensorField(comps, "u", g)


def second_fundamental_form(g: MetricChart, restrict: bool = True) -> TensorField:
    """A_ij = (g^00)^(-1/2) Gamma^0_ij on the tangential block, at x0 = 0 by default."""
    _require_adapted(g)
    base = g.inv[0, 0]
    G = g.christoffel_array
    m = g.n - 1
    comps = al.zeros((m, m))
    x0 = g.coords[0]
    for i in range(m):
        for j in range(m):
            s = Surd(G[0, i + 1, j + 1], base, -1)
            comps[i, j] = at_boundary(s, x0) if restrict else s
    return TensorField(comps, "dd", g)


def harmonic_residual(g: MetricChart, lowered: bool = False) -> TensorField:
    """Gamma^e = g^ab Gamma^e_ab, or the lowered first-order form."""
    if not lowered:
        return TensorField(einsum("ab,eab->e", g.inv, g.christoffel_array), "u", g)
    dg = g.dg
    t1 = einsum("eb,eab->a", g.inv, dg)
    t2 = einsum("eb,aeb->a", g.inv, dg)
    from fractions import Fraction

    return TensorField(al.sub(t1, al.scal(Fraction(1, 2), t2)), "d", g)


def ricci_harmonic_decomposition(g: MetricChart):
    """Ric = -1/2 D g + G + Q with G built from Gamma^k and its first derivatives."""
    from fractions import Fraction

    h = Fraction(1, 2)
    n = g.n
    inv, dg = g.inv, g.dg
    principal = al.scal(-h, rough_array(g.g, g, 1))
    Gam = einsum("ab,eab->e", inv, g.christoffel_array)
    dGam = al.grad(Gam, g.coords)  # dGam[j, k] = d_j Gamma^k
    gk = einsum("ik,jk->ij", g.g, dGam)
    gauge = al.scal(h, al.add(gk, gk.T))
    dinv = al.grad(inv, g.coords)  # dinv[c, a, b] = d_c g^ab
    Gl = g.christoffel_lower  # [l, i, j]
    Gu = g.christoffel_array
    t1 = einsum("ijk,k->ij", al.add(dg, np.transpose(dg, (1, 0, 2))), Gam)
    t1 = al.scal(h, t1)
    # -1/2 (d_i g^ab)(d_a g_jb - 1/2 d_j g_ab) and its (i <-> j) partner
    inner = al.sub(np.transpose(dg, (1, 0, 2)), al.scal(h, dg))  # [j, a, b]: d_a g_jb - 1/2 d_j g_ab
    t2 = al.scal(-h, einsum("iab,jab->ij", dinv, inner))
    t3 = t2.T.copy()
    t4 = einsum("l,lij->ij", einsum("kkl->l", dinv), Gl, dim=n)
    t5 = al.scal(-h, einsum("jkl,ikl->ij", dinv, dg))
    t6 = einsum("kkl,lij->ij", Gu, Gu)
    t7 = al.scal(-1, einsum("kjl,lik->ij", Gu, Gu))
    Q = al.add(t1, t2, t3, t4, t5, t6, t7)
    return (TensorField(principal, "dd", g), TensorField(gauge, "dd", g), TensorField(Q, "dd", g))
