"""Bach tensor (two independent routes) and the leading obstruction expression."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np

from .errors import DimensionError
from .tensors import algebra as al
from .tensors.algebra import einsum, is_zero
from .tensors.metric import MetricChart, TensorField, laplacian_power, schouten


@dataclass
class ObstructionReport:
    n: int
    components: np.ndarray
    leading_only: bool = False
    route: str = "cotton"
    is_zero: bool = field(init=False)

    def __post_init__(self):
        self.is_zero = al.all_zero(self.components)

    def __getitem__(self, idx):
        return self.components[idx]

    def is_symmetric(self) -> bool:
        c = self.components
        n = c.shape[0]
        return all(is_zero(c[a, b] - c[b, a]) for a in range(n) for b in range(a + 1, n))

    def trace(self, g: MetricChart):
        return einsum("ab,ab->", g.inv, self.components)


def weyl(g: MetricChart):
    """W_abcd = R_abcd - (P_ac g_bd - P_ad g_bc + P_bd g_ac - P_bc g_ad)."""
    P = schouten(g).components
    G = g.g
    kn = al.add(
        einsum("ac,bd->abcd", P, G),
        al.scal(-1, einsum("ad,bc->abcd", P, G)),
        einsum("bd,ac->abcd", P, G),
        al.scal(-1, einsum("bc,ad->abcd", P, G)),
    )
    return al.sub(g.riemann_lower, kn)


def cotton(g: MetricChart):
    """C_abc = nabla_c P_ab - nabla_b P_ac."""
    P = schouten(g).components
    DP = g.covd(P, "dd")  # [c, a, b]
    return al.sub(np.transpose(DP, (1, 2, 0)), np.transpose(DP, (1, 0, 2)))


def _pw_term(g, P, W):
    Pup = einsum("ce,df,ef->cd", g.inv, g.inv, P)
    return einsum("cd,acbd->ab", Pup, W)


def bach_cotton(g: MetricChart, W=None):
    """B_ab = nabla^c C_abc + P^cd W_acbd."""
    P = schouten(g).components
    C = cotton(g)
    DC = g.covd(C, "ddd")  # [e, a, b, c]
    div = einsum("ec,eabc->ab", g.inv, DC)
    W = weyl(g) if W is None else W
    return al.add(div, _pw_term(g, P, W))


def bach_weyl(g: MetricChart, W=None):
    """B_ab = nabla^c nabla^d W_acbd + 1/2 R^cd W_acbd, divergence taken one index at a time."""
    W = weyl(g) if W is None else W
    DW = g.covd(W, "dddd")  # [e, a, c, b, d]
    V = einsum("ed,eacbd->acb", g.inv, DW)
    DV = g.covd(V, "ddd")  # [f, a, c, b]
    div2 = einsum("fc,facb->ab", g.inv, DV)
    Rup = einsum("ce,df,ef->cd", g.inv, g.inv, g.ricci_array)
    return al.add(div2, al.scal(Fraction(1, 2), einsum("cd,acbd->ab", Rup, W)))


def bach(g: MetricChart, route: str = "cotton") -> ObstructionReport:
    """Full Bach tensor of a 4-dimensional metric."""
    if g.n != 4:
        raise DimensionError("the Bach tensor is implemented for n = 4 only")
    if route == "cotton":
        comps = bach_cotton(g)
    elif route == "weyl":
        comps = bach_weyl(g)
    else:
        raise ValueError(f"unknown route {route!r}")
    return ObstructionReport(4, comps, False, route)


def obstruction_prefactor(n: int) -> Fraction:
    k = n // 2 - 2
    return Fraction(1, (-2) ** k * factorial(k))


def obstruction_leading(g: MetricChart, n: int | None = None) -> ObstructionReport:
    """prefactor * (Lap^(n/2-1) P - 1/(2(n-1)) Lap^(n/2-2) nabla^2 S)."""
    if n is None:
        n = g.n
    if n % 2 or n < 4:
        raise DimensionError("obstruction_leading needs an even n >= 4")
    if n != g.n:
        raise DimensionError("n must equal the metric dimension")
    P = schouten(g)
    l = n // 2 - 1
    lapP = laplacian_power(P, g, l).components
    hessS = g.hessian(g.scalar)
    if l - 1 >= 1:
        hessS = laplacian_power(TensorField(hessS, "dd", g), g, l - 1).components
    expr = al.sub(lapP, al.scal(Fraction(1, 2 * (n - 1)), hessS))
    comps = al.scal(obstruction_prefactor(n), expr)
    return ObstructionReport(n, comps, leading_only=n >= 6, route="leading")


def fg_obstruction(h: MetricChart, n: int | None = None) -> TensorField:
    """Trace-free obstruction of the degenerate expansion step; see fg.fg_obstruction."""
    from .fg import fg_obstruction as _impl

    return _impl(h, n)
