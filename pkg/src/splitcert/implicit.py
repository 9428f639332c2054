"""Implicit-function enclosures: kappa with g(eps, x, kappa(eps, x)) = 0.

The image enclosure comes from the parameterized interval Newton method:
once ``k0 - [dg/dk(X,K)]^-1 [g(X,k0)]`` lands strictly inside K, every
(eps, x) in X has a unique kappa(eps, x) in the refined box.  First
derivatives then follow from interval solves

    dk/deps in -[dg/dk]^-1 [dg/deps],    dk/dx in -[dg/dk]^-1 [dg/dx],

and the mixed second derivative from the differentiated identity; the
``simplify`` flag drops the two terms that vanish when g is a projection
condition (d2g/deps dx = 0 and d2g/dk dx = 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .intervals import Interval, IntervalBox, IntervalError
from .jets import Jet2Enclosure
from .matrices import IntervalMatrix, imatsolve
from .newton import FunctionOracle, newton_verify


class ImplicitContractionError(IntervalError):
    """Newton contraction failed; carries the offending box."""

    def __init__(self, message: str, box: IntervalBox):
        super().__init__(message)
        self.box = box


@dataclass(frozen=True)
class GOracle:
    """Order-2 jet oracle for g(eps, x, kappa).

    ``jet(X, K)`` returns a Jet2Enclosure with variable order
    (eps, x_1..x_kx, kappa_1..kappa_kk) over the boxes X (dim 1+kx, eps
    first) and K (dim kk); the output dimension equals kk.
    """

    kx: int
    kk: int
    jet: Callable[[IntervalBox, IntervalBox], Jet2Enclosure]

    def kappa_cols(self) -> list[int]:
        return list(range(1 + self.kx, 1 + self.kx + self.kk))

    def x_cols(self) -> list[int]:
        return list(range(1, 1 + self.kx))


@dataclass
class ImplicitEnclosure:
    """Containment-correct image and derivative blocks over the domain."""

    domain: IntervalBox
    image: IntervalBox
    dEps: IntervalMatrix | None = None
    dX: IntervalMatrix | None = None
    dEpsX: IntervalMatrix | None = None


def _dg_dk(g: GOracle, jet: Jet2Enclosure) -> IntervalMatrix:
    cols = g.kappa_cols()
    return IntervalMatrix(jet.d1.lo[:, cols], jet.d1.hi[:, cols])


def implicit_enclose(g: GOracle, x_box: IntervalBox, k_box: IntervalBox, k0=None,
                     max_refine: int = 8) -> ImplicitEnclosure:
    """Verify kappa(eps, x) in K for all (eps, x) in X; refined image returned.

    Raises :class:`ImplicitContractionError` when the Newton contraction
    cannot be verified (shrink X or enlarge K and retry).
    """
    if x_box.dim != 1 + g.kx or k_box.dim != g.kk:
        raise IntervalError("implicit_enclose: box dimensions do not match oracle")

    def ev(xb: IntervalBox, kb: IntervalBox) -> IntervalBox:
        return g.jet(xb, kb).value

    def dv(xb: IntervalBox, kb: IntervalBox) -> IntervalMatrix:
        return _dg_dk(g, g.jet(xb, kb))

    cert = newton_verify(FunctionOracle(ev, dv), x_box, k_box, y0=k0, max_refine=max_refine)
    if not cert.verified:
        raise ImplicitContractionError(
            f"implicit contraction failed: {cert.message}", cert.refined
        )
    return ImplicitEnclosure(domain=x_box, image=cert.refined)


def implicit_first(g: GOracle, x_box: IntervalBox, k_box: IntervalBox) -> tuple[IntervalMatrix, IntervalMatrix]:
    """(dk/deps, dk/dx) enclosures over X, evaluated on the verified K."""
    jet = g.jet(x_box, k_box)
    a = _dg_dk(g, jet)
    geps = IntervalMatrix(jet.d1.lo[:, 0:1], jet.d1.hi[:, 0:1])
    xc = g.x_cols()
    gx = IntervalMatrix(jet.d1.lo[:, xc], jet.d1.hi[:, xc])
    d_eps = -imatsolve(a, geps)
    d_x = -imatsolve(a, gx)
    return d_eps, d_x


def implicit_mixed_second(
    g: GOracle,
    x_box: IntervalBox,
    k_box: IntervalBox,
    firsts: tuple[IntervalMatrix, IntervalMatrix],
    simplify: bool = False,
) -> IntervalMatrix:
    """Enclosure of d2 kappa / deps dx (kk x kx) over X.

    Uses -[dg/dk]^-1 (g_ex + g_kx . k_e + (g_ek + g_kk . k_e) . k_x); with
    ``simplify`` the g_ex and g_kx terms are taken as exactly zero.
    """
    d_eps, d_x = firsts
    jet = g.jet(x_box, k_box)
    kk, kx = g.kk, g.kx
    kc = g.kappa_cols()
    xc = g.x_cols()
    a = _dg_dk(g, jet)

    # rhs[i, j] built in interval arithmetic
    rhs_lo = np.zeros((kk, kx))
    rhs_hi = np.zeros((kk, kx))
    for i in range(kk):
        for j in range(kx):
            acc = Interval.point(0.0)
            if not simplify:
                acc = acc + Interval(jet.d2lo[i, 0, xc[j]], jet.d2hi[i, 0, xc[j]])
                for c in range(kk):
                    acc = acc + Interval(jet.d2lo[i, kc[c], xc[j]], jet.d2hi[i, kc[c], xc[j]]) * d_eps[c, 0]
            for cp in range(kk):
                inner = Interval(jet.d2lo[i, 0, kc[cp]], jet.d2hi[i, 0, kc[cp]])
                for c in range(kk):
                    inner = inner + Interval(jet.d2lo[i, kc[c], kc[cp]], jet.d2hi[i, kc[c], kc[cp]]) * d_eps[c, 0]
                acc = acc + inner * d_x[cp, j]
            rhs_lo[i, j] = acc.lo
            rhs_hi[i, j] = acc.hi
    return -imatsolve(a, IntervalMatrix(rhs_lo, rhs_hi))
