"""Conformal change laws, each checked two ways.

Every ``*_residual`` function returns (curvature of the rescaled metric computed
directly) minus (the transformation formula applied to the original metric).
Identity conformal factors and correct formulas give exact zeros.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd

import numpy as np

from ..errors import ChartError, ZeroConformalFactor
from ..kernel.surd import Surd
from . import algebra as al
from .algebra import einsum, is_zero
from .metric import MetricChart, TensorField, _require_adapted


def _inv(x):
    return Fraction(1, x) if isinstance(x, int) else 1 / x


def conformal_transform(g: MetricChart, phi) -> MetricChart:
    """The metric phi^2 g."""
    if is_zero(phi):
        raise ZeroConformalFactor("conformal factor is identically zero")
    return g.with_components(al.scal(phi * phi, g.g))


def _dphi(g, phi):
    return np.array([al.d(phi, c) for c in g.coords], dtype=object)


def christoffel_rule_residual(g: MetricChart, phi) -> TensorField:
    """Gamma(phi^2 g) - [Gamma(g) + phi^-1 (phi_a delta^e_b + phi_b delta^e_a - g^em phi_m g_ab)]."""
    gb = conformal_transform(g, phi)
    n = g.n
    dp = _dphi(g, phi)
    up = einsum("em,m->e", g.inv, dp, dim=n)
    delta = al.identity(n)
    corr = al.add(
        einsum("a,eb->eab", dp, delta, dim=n),
        einsum("b,ea->eab", dp, delta, dim=n),
        al.scal(-1, einsum("e,ab->eab", up, g.g, dim=n)),
    )
    rhs = al.add(g.christoffel_array, al.scal(_inv(phi), corr))
    return TensorField(al.sub(gb.christoffel_array, rhs), "udd", gb)


def conric_rhs(g: MetricChart, phi, hess=None, lap=None):
    """Right-hand side of the Ricci law for phi^2 g, optionally with a supplied Hessian."""
    n = g.n
    dp = _dphi(g, phi)
    if hess is None:
        hess = g.hessian(phi)
    if lap is None:
        lap = einsum("ab,ab->", g.inv, hess)
    grad2 = g.norm_sq(dp)
    t1 = al.add(al.scal(2 - n, hess), al.scal(-lap if not is_zero(lap) else 0, g.g))
    t2 = al.add(al.scal((3 - n) * grad2 if not is_zero(grad2) else 0, g.g),
                al.scal(2 * (n - 2), al.outer(dp, dp)))
    return al.add(g.ricci_array, al.scal(_inv(phi), t1), al.scal(_inv(phi * phi), t2))


def conric_residual(g: MetricChart, phi) -> TensorField:
    """Ric(phi^2 g) minus the conformal Ricci formula."""
    gb = conformal_transform(g, phi)
    return TensorField(al.sub(gb.ricci_array, conric_rhs(g, phi)), "dd", gb)


def scalar_law_residual(g: MetricChart, phi):
    """S(phi^2 g) - [phi^-2 S + (2-2n) phi^-3 Lap phi - (n-1)(n-4) phi^-4 |dphi|^2]."""
    n = g.n
    gb = conformal_transform(g, phi)
    lap = g.laplacian(np.array(phi, dtype=object), "")
    grad2 = g.norm_sq(_dphi(g, phi))
    rhs = g.scalar / phi ** 2 + (2 - 2 * n) * lap / phi ** 3 - (n - 1) * (n - 4) * grad2 / phi ** 4
    return gb.scalar - rhs


def confs_exponent(n: int) -> int:
    """Smallest k with v = w^k making the scalar-law exponents integral."""
    return (n - 2) // gcd(4, n - 2)


def confs_residual(g: MetricChart, w, k: int | None = None):
    """Scalar curvature law for v^(4/(n-2)) g with v = w^k.

    S' = S v^(-4/(n-2)) + 4(1-n)/(n-2) v^(-(n+2)/(n-2)) Lap v
    """
    n = g.n
    if n < 3:
        raise ValueError("scalar law needs n >= 3")
    if k is None:
        k = confs_exponent(n)
    a = Fraction(4 * k, n - 2)
    b = Fraction(k * (n + 2), n - 2)
    if a.denominator != 1 or b.denominator != 1:
        raise ValueError(f"k={k} does not make the exponents integral for n={n}")
    a, b = int(a), int(b)
    if is_zero(w):
        raise ZeroConformalFactor("w is identically zero")
    gp = g.with_components(al.scal(w ** a, g.g))
    v = w ** k
    lap_v = g.laplacian(np.array(v, dtype=object), "")
    rhs = g.scalar * w ** (-a) + Fraction(4 * (1 - n), n - 2) * w ** (-b) * lap_v
    return gp.scalar - rhs


def lapphi_residual(g: MetricChart, phi, S_bar=None):
    """Lap phi - (phi S - phi^3 Sbar - (n-4)(n-1) phi^-1 |dphi|^2) / (2(n-1))."""
    n = g.n
    if S_bar is None:
        S_bar = conformal_transform(g, phi).scalar
    lap = g.laplacian(np.array(phi, dtype=object), "")
    grad2 = g.norm_sq(_dphi(g, phi))
    rhs = (phi * g.scalar - phi ** 3 * S_bar - (n - 4) * (n - 1) * grad2 / phi) * Fraction(1, 2 * (n - 1))
    return lap - rhs


def tf_ricci_residual(g: MetricChart, psi, trace_free: bool = True):
    """Ricci law for e^(2v) g with e^v = psi, in the form solved for Ric(g).

    Ric(g) = (Lap v) g + (n-2)(Hess v + |dv|^2 g - dv dv) + Ric(e^(2v) g)
    With trace_free the residual of tf(Ric(g)) - (n-2) tf(Hess v - dv dv) - tf(Ric(e^2v g)).
    """
    from .metric import trace_free_part

    n = g.n
    gb = conformal_transform(g, psi)
    dpsi = _dphi(g, psi)
    dv = al.scal(_inv(psi), dpsi)
    hess_v = al.sub(al.scal(_inv(psi), g.hessian(psi)), al.outer(dv, dv))
    if trace_free:
        lhs = trace_free_part(g.ricci_array, g).components
        rhs = al.add(al.scal(n - 2, trace_free_part(al.sub(hess_v, al.outer(dv, dv)), g).components),
                     trace_free_part(gb.ricci_array, g).components)
        return TensorField(al.sub(lhs, rhs), "dd", g)
    lap_v = einsum("ab,ab->", g.inv, hess_v)
    grad2 = g.norm_sq(dv)
    rhs = al.add(al.scal(lap_v, g.g),
                 al.scal(n - 2, al.add(hess_v, al.scal(grad2, g.g), al.scal(-1, al.outer(dv, dv)))),
                 gb.ricci_array)
    return TensorField(al.sub(g.ricci_array, rhs), "dd", g)


def sff_rule_residual(g: MetricChart, phi, restrict: bool = False) -> TensorField:
    """A(g) - [phi^-1 A(phi^2 g) + phi^-2 phi_a Nbar^a gbar_ij] as Surd components.

    sqrt(gbar^00) is rewritten as phi^-1 sqrt(g^00) after checking
    gbar^00 phi^2 = g^00 exactly (phi > 0 assumed).
    """
    _require_adapted(g)
    from .metric import at_boundary

    gb = conformal_transform(g, phi)
    base = g.inv[0, 0]
    if not is_zero(gb.inv[0, 0] * phi * phi - base):
        raise ChartError("inverse metric does not rescale by phi^-2")
    n, m = g.n, g.n - 1
    dp = _dphi(g, phi)
    Gt, Gb = g.christoffel_array, gb.christoffel_array
    # Nbar^a phi_a with sqrt(gbar^00)^-1 = phi * sqrt(g^00)^-1
    nphi = einsum("a,a->", gb.inv[:, 0], dp, dim=n)
    out = al.zeros((m, m))
    for i in range(m):
        for j in range(m):
            a_t = Surd(Gt[0, i + 1, j + 1], base, -1)
            a_b = Surd(Gb[0, i + 1, j + 1] * phi, base, -1)
            corr = Surd(nphi * phi * gb.g[i + 1, j + 1] / (phi * phi), base, -1) if not is_zero(nphi) else 0
            r = a_t - (a_b * (_inv(phi)) + corr)
            out[i, j] = at_boundary(r, g.coords[0]) if restrict else r
    return TensorField(out, "dd", g)
