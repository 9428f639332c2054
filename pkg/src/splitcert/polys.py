"""Multivariate polynomial maps with interval coefficients.

These serve three roles: vector fields for validated integration, chart
maps (coordinate straightenings) evaluated as order-2 jets, and test
oracles built from closed forms.  Variables follow the package convention:
index 0 is the shared parameter eps, the remaining indices are state
variables; purely autonomous maps simply never reference variable 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .intervals import Interval, IntervalBox, IntervalError
from .jets import Jet2Enclosure
from .matrices import IntervalMatrix


Monomial = tuple[Interval, tuple[int, ...]]


def _as_coeff(c) -> Interval:
    if isinstance(c, Interval):
        return c
    return Interval.point(float(c))


def _ipow(x: Interval, n: int) -> Interval:
    return x ** n


class PolyMap:
    """A polynomial map R^nvars -> R^m given by monomial lists."""

    def __init__(self, nvars: int, components: Sequence[Sequence[Monomial]]):
        self.nvars = int(nvars)
        comps: list[list[Monomial]] = []
        for comp in components:
            mono: list[Monomial] = []
            for c, exps in comp:
                c = _as_coeff(c)
                exps = tuple(int(e) for e in exps)
                if len(exps) != self.nvars:
                    raise IntervalError("monomial exponent tuple has wrong length")
                if any(e < 0 for e in exps):
                    raise IntervalError("negative exponents are not polynomial")
                if c.lo == 0.0 and c.hi == 0.0:
                    continue
                mono.append((c, exps))
            comps.append(mono)
        self.components = comps

    @property
    def out_dim(self) -> int:
        return len(self.components)

    # -- calculus ----------------------------------------------------------

    def partial(self, v: int) -> "PolyMap":
        comps = []
        for comp in self.components:
            out = []
            for c, exps in comp:
                e = exps[v]
                if e == 0:
                    continue
                nexps = exps[:v] + (e - 1,) + exps[v + 1 :]
                out.append((c * float(e), nexps))
            comps.append(out)
        return PolyMap(self.nvars, comps)

    # -- evaluation ----------------------------------------------------------

    def eval_box(self, box: IntervalBox) -> IntervalBox:
        if box.dim != self.nvars:
            raise IntervalError(f"expected {self.nvars} variables, got {box.dim}")
        xs = box.components()
        out_lo = np.zeros(self.out_dim)
        out_hi = np.zeros(self.out_dim)
        for i, comp in enumerate(self.components):
            acc = Interval.point(0.0)
            for c, exps in comp:
                term = c
                for v, e in enumerate(exps):
                    if e:
                        term = term * _ipow(xs[v], e)
                acc = acc + term
            out_lo[i] = acc.lo
            out_hi[i] = acc.hi
        return IntervalBox(out_lo, out_hi)

    def eval_point(self, x) -> np.ndarray:
        """Midpoint (nonrigorous) evaluation."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(self.out_dim)
        for i, comp in enumerate(self.components):
            s = 0.0
            for c, exps in comp:
                t = c.mid
                for v, e in enumerate(exps):
                    if e:
                        t *= x[v] ** e
                s += t
            out[i] = s
        return out

    def jacobian(self) -> list["PolyMap"]:
        """One PolyMap per variable: column v is d(self)/d x_v."""
        return [self.partial(v) for v in range(self.nvars)]

    def jet(self, box: IntervalBox) -> Jet2Enclosure:
        """Order-2 jet enclosure over the box (variables include eps)."""
        value = self.eval_box(box)
        cols = []
        parts = self.jacobian()
        for pv in parts:
            cols.append(pv.eval_box(box))
        d1lo = np.stack([c.lo for c in cols], axis=1)
        d1hi = np.stack([c.hi for c in cols], axis=1)
        nv = self.nvars
        m = self.out_dim
        d2lo = np.zeros((m, nv, nv))
        d2hi = np.zeros((m, nv, nv))
        for a in range(nv):
            for b in range(a, nv):
                sec = parts[a].partial(b).eval_box(box)
                d2lo[:, a, b] = d2lo[:, b, a] = sec.lo
                d2hi[:, a, b] = d2hi[:, b, a] = sec.hi
        return Jet2Enclosure(value, IntervalMatrix(d1lo, d1hi), d2lo, d2hi)

    def jet_point(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Nonrigorous value/Jacobian/Hessian at a point."""
        x = np.asarray(x, dtype=float)
        parts = self.jacobian()
        val = self.eval_point(x)
        d1 = np.stack([p.eval_point(x) for p in parts], axis=1)
        nv = self.nvars
        d2 = np.zeros((self.out_dim, nv, nv))
        for a in range(nv):
            for b in range(a, nv):
                s = parts[a].partial(b).eval_point(x)
                d2[:, a, b] = d2[:, b, a] = s
        return val, d1, d2

    @staticmethod
    def affine(nvars: int, const, matrix) -> "PolyMap":
        """Map x -> const + matrix @ vars, with interval-aware entries."""
        const = list(const)
        comps = []
        m = len(const)
        for i in range(m):
            mono: list[Monomial] = []
            c = _as_coeff(const[i])
            if not (c.lo == 0.0 and c.hi == 0.0):
                mono.append((c, (0,) * nvars))
            for v in range(nvars):
                a = _as_coeff(matrix[i][v])
                if a.lo == 0.0 and a.hi == 0.0:
                    continue
                exps = tuple(1 if u == v else 0 for u in range(nvars))
                mono.append((a, exps))
            comps.append(mono)
        return PolyMap(nvars, comps)


@dataclass(frozen=True)
class VectorFieldDef:
    """Polynomial vector field q' = f(eps, q) on R^dimension.

    ``rhs`` is a PolyMap with nvars = 1 + dimension (eps first).  Only
    polynomial right-hand sides are supported; coefficients must be finite
    (enforced by the Interval invariant).
    """

    dimension: int
    rhs: PolyMap

    def __post_init__(self):
        if self.rhs.nvars != self.dimension + 1:
            raise IntervalError("field rhs must have 1 + dimension variables")
        if self.rhs.out_dim != self.dimension:
            raise IntervalError("field rhs must have `dimension` components")

    def eval_box(self, eps: Interval, x: IntervalBox) -> IntervalBox:
        box = IntervalBox(np.concatenate([[eps.lo], x.lo]), np.concatenate([[eps.hi], x.hi]))
        return self.rhs.eval_box(box)

    def eval_point(self, eps: float, x) -> np.ndarray:
        return self.rhs.eval_point(np.concatenate([[eps], np.asarray(x, dtype=float)]))

    def negated(self) -> "VectorFieldDef":
        cached = getattr(self, "_neg", None)
        if cached is None:
            comps = [[(-c, exps) for c, exps in comp] for comp in self.rhs.components]
            cached = VectorFieldDef(self.dimension, PolyMap(self.rhs.nvars, comps))
            object.__setattr__(self, "_neg", cached)
            object.__setattr__(cached, "_neg", self)
        return cached
