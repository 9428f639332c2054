"""Interval Newton certification against hand and rational oracles."""

from decimal import Decimal, getcontext
from fractions import Fraction

import numpy as np
import pytest

from splitcert.intervals import Interval, IntervalBox
from splitcert.matrices import IntervalMatrix
from splitcert.newton import FunctionOracle, newton_step, newton_verify

NO_PARAM = IntervalBox([0.0], [0.0])


def square_minus_two() -> FunctionOracle:
    def ev(_x, y):
        return IntervalBox.from_intervals([y[0].sqr() - 2.0])

    def dv(_x, y):
        two_y = y[0] * 2.0
        return IntervalMatrix.from_rows([[two_y]])

    return FunctionOracle(ev, dv)


def test_step_linear_exact():
    f = FunctionOracle(
        eval=lambda _x, y: y,
        deriv=lambda _x, y: IntervalMatrix.identity(1),
    )
    n = newton_step([0.0], NO_PARAM, IntervalBox([-1.0], [1.0]), f)
    assert n[0].lo == 0.0 and n[0].hi == 0.0


def test_step_sqrt2_hand_oracle():
    # N = 1.4 - (1.4^2 - 2)/[2*1.3, 2*1.5]; hand interval division oracle:
    f196 = Fraction(1.4) * Fraction(1.4) - 2  # exact rational of float 1.96 - 2
    lo_ref = Fraction(1.4) - f196 / Fraction(26, 10)
    hi_ref = Fraction(1.4) - f196 / Fraction(3)
    lo_ref, hi_ref = min(lo_ref, hi_ref), max(lo_ref, hi_ref)
    y = IntervalBox([1.3], [1.5])
    n = newton_step([1.4], NO_PARAM, y, square_minus_two())
    assert Fraction(n[0].lo) <= lo_ref and hi_ref <= Fraction(n[0].hi)
    assert n[0].width <= float(hi_ref - lo_ref) + 1e-12
    assert n.is_interior_subset(y)


def test_step_wide_candidate_fails_subset():
    y = IntervalBox([0.1], [3.0])
    n = newton_step([0.2], NO_PARAM, y, square_minus_two())
    assert not n.is_interior_subset(y)  # documents the failure mode


def test_verify_sqrt2_tight():
    getcontext().prec = 60
    sqrt2 = Decimal(2).sqrt()
    cert = newton_verify(square_minus_two(), NO_PARAM, IntervalBox([1.3], [1.5]))
    assert cert.verified
    assert Decimal(cert.refined[0].lo) < sqrt2 < Decimal(cert.refined[0].hi)
    assert cert.refined[0].width <= 1e-12
    assert cert.refined.is_interior_subset(cert.candidate_box)


def test_verify_parameterized_identity_graph():
    # f(x, y) = y - x over X=[0,1]: q(x) = x
    f = FunctionOracle(
        eval=lambda x, y: y - x,
        deriv=lambda _x, _y: IntervalMatrix.identity(1),
    )
    cert = newton_verify(f, IntervalBox([0.0], [1.0]), IntervalBox([-0.1], [1.1]), y0=[0.5])
    assert cert.verified
    assert cert.refined.contains_box(IntervalBox([0.0], [1.0]))
    # sanity cross-check: sampled roots inside the refined enclosure
    for x in np.linspace(0, 1, 100):
        assert cert.refined[0].contains(x)


def test_verify_no_real_zero():
    f = FunctionOracle(
        eval=lambda _x, y: IntervalBox.from_intervals([y[0].sqr() + 1.0]),
        deriv=lambda _x, y: IntervalMatrix.from_rows([[y[0] * 2.0]]),
    )
    cert = newton_verify(f, NO_PARAM, IntervalBox([-2.0], [2.0]))
    assert not cert.verified


def test_monotone_refinement():
    f = square_minus_two()
    y = IntervalBox([1.3], [1.5])
    n1 = newton_step([1.4], NO_PARAM, y, f)
    cur = n1.intersect(y)
    widths = [cur.max_width()]
    for _ in range(4):
        n = newton_step(cur.mid(), NO_PARAM, cur, f)
        cur = n.intersect(cur)
        widths.append(cur.max_width())
    assert all(b <= a + 1e-18 for a, b in zip(widths, widths[1:]))


def test_verify_2d_system():
    # f(y) = (y1^2 + y2 - 1, y1 - y2) has a root at y1 = y2, y1^2 + y1 = 1
    def ev(_x, y):
        return IntervalBox.from_intervals([y[0].sqr() + y[1] - 1.0, y[0] - y[1]])

    def dv(_x, y):
        return IntervalMatrix.from_rows([[y[0] * 2.0, Interval.point(1.0)],
                                         [Interval.point(1.0), Interval.point(-1.0)]])

    cert = newton_verify(FunctionOracle(ev, dv), NO_PARAM, IntervalBox([0.4, 0.4], [0.9, 0.9]))
    assert cert.verified
    golden = (np.sqrt(5) - 1) / 2
    assert cert.refined[0].contains(golden) and cert.refined[1].contains(golden)


def test_sampled_roots_inside_refined():
    # nonrigorous float Newton locates roots inside the certified enclosure
    f = square_minus_two()
    cert = newton_verify(f, NO_PARAM, IntervalBox([1.0], [2.0]), y0=[1.5])
    assert cert.verified
    y = 1.3
    for _ in range(60):
        y = y - (y * y - 2.0) / (2 * y)
    assert cert.refined[0].contains(y)
