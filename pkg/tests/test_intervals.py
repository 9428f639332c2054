"""Interval scalar/box arithmetic: containment, tightness, set semantics."""

import math
from decimal import Decimal, getcontext
from fractions import Fraction

import numpy as np
import pytest

from splitcert.intervals import Interval, IntervalBox, IntervalError, box_util, iv_arith, iv_sqrt


def ulps(x: float, n: int = 1) -> float:
    return n * math.ulp(max(abs(x), 1e-300))


def test_add_exact_endpoints():
    r = iv_arith("add", Interval(1, 2), Interval(3, 4))
    assert r.lo == 4.0 and r.hi == 6.0  # exact endpoint arithmetic


def test_mul_sign_cases():
    r = iv_arith("mul", Interval(-1, 2), Interval(3, 4))
    assert r.lo <= -4.0 <= r.hi and r.lo <= 8.0 <= r.hi
    assert r.lo >= -4.0 - ulps(4.0, 2) and r.hi <= 8.0 + ulps(8.0, 2)


def test_div_one_third_rational_oracle():
    r = iv_arith("div", Interval(1, 1), Interval(3, 3))
    third = Fraction(1, 3)
    assert Fraction(r.lo) < third < Fraction(r.hi)
    assert r.width <= 2 * math.ulp(r.lo)


def test_div_by_zero_interval_raises():
    with pytest.raises(IntervalError):
        iv_arith("div", Interval(1, 1), Interval(-1, 1))


def test_sub_neg_sqr():
    assert iv_arith("sub", Interval(1, 2), Interval(0.5, 1)).contains(1.0)
    assert iv_arith("neg", Interval(-1, 2)) == Interval(-2, 1)
    s = iv_arith("sqr", Interval(-2, 1))
    assert s.lo <= 0.0 and s.hi >= 4.0
    assert s.hi <= 4.0 + ulps(4.0, 2)


def test_sqrt_perfect_squares():
    r = iv_sqrt(Interval(4, 9))
    assert r.lo <= 2.0 and r.hi >= 3.0
    assert r.lo >= 2.0 - ulps(2.0, 2) and r.hi <= 3.0 + ulps(3.0, 2)


def test_sqrt_two_decimal_oracle():
    getcontext().prec = 60
    sqrt2 = Decimal(2).sqrt()
    r = iv_sqrt(Interval(2, 2))
    assert Decimal(r.lo) < sqrt2 < Decimal(r.hi)
    assert r.width <= 2 * math.ulp(r.lo)


def test_sqrt_zero_and_negative():
    assert iv_sqrt(Interval(0, 0)) == Interval(0, 0)
    with pytest.raises(IntervalError):
        iv_sqrt(Interval(-1e-300, 1))


def test_pow_even_is_tight():
    x = Interval(-2, 1)
    assert (x ** 2).lo == 0.0
    assert (x ** 3).contains(-8.0) and (x ** 3).contains(1.0)


def test_box_subset_interior():
    inner = IntervalBox([1.1, 1.1], [1.9, 1.9])
    outer = IntervalBox([1.0, 1.0], [2.0, 2.0])
    assert box_util("subset_interior", inner, outer)
    shared = IntervalBox([1.0, 1.0], [1.5, 1.5])
    assert not box_util("subset_interior", shared, outer)  # shared boundary


def test_box_hull_intersect_mid_rad():
    a = IntervalBox([0.0], [1.0])
    b = IntervalBox([2.0], [3.0])
    h = box_util("hull", a, b)
    assert h.lo[0] == 0.0 and h.hi[0] == 3.0
    assert box_util("intersect", a, b) is None  # distinguished empty result
    c = IntervalBox([0.5], [2.5])
    i = box_util("intersect", a, c)
    assert i.lo[0] == 0.5 and i.hi[0] == 1.0
    assert box_util("mid", a)[0] == 0.5
    assert box_util("rad", a)[0] >= 0.5
    assert box_util("contains", a, 0.3) and not box_util("contains", a, 1.5)


def test_box_arithmetic_and_split():
    a = IntervalBox([0.0, 1.0], [1.0, 2.0])
    b = a + np.array([1.0, 1.0])
    assert b.contains_point([1.5, 2.5])
    left, right = a.split(0)
    assert left.hi[0] == right.lo[0] == 0.5
    assert left.hull(right).contains_box(a)


def _rand_interval(rng, scale=10.0):
    c = rng.uniform(-scale, scale)
    r = abs(rng.uniform(0, scale))
    return Interval(c - r, c + r)


def test_containment_randomized():
    # every point result of an op lies in the interval result
    rng = np.random.RandomState(seed=20240817)
    for _ in range(2000):
        a = _rand_interval(rng)
        b = _rand_interval(rng)
        x = rng.uniform(a.lo, a.hi)
        y = rng.uniform(b.lo, b.hi)
        assert (a + b).contains(x + y)
        assert (a - b).contains(x - y)
        assert (a * b).contains(x * y)
        assert a.sqr().contains(x * x)
        if not b.contains_zero():
            assert (a / b).contains(x / y)


def test_inclusion_monotonicity():
    rng = np.random.RandomState(seed=7)
    for _ in range(500):
        a = _rand_interval(rng)
        b = _rand_interval(rng)
        a2 = a.widened(abs(rng.uniform(0, 1)))
        b2 = b.widened(abs(rng.uniform(0, 1)))
        assert (a + b).is_subset(a2 + b2)
        assert (a - b).is_subset(a2 - b2)
        assert (a * b).is_subset(a2 * b2)
        assert a.sqr().is_subset(a2.sqr())


def test_vectorized_containment_bulk():
    # bulk kernel-level check, 10^5 cases
    from splitcert import kernels as ku

    rng = np.random.RandomState(seed=99)
    n = 100_000
    alo = rng.uniform(-10, 10, n)
    ahi = alo + rng.uniform(0, 5, n)
    blo = rng.uniform(-10, 10, n)
    bhi = blo + rng.uniform(0, 5, n)
    x = rng.uniform(alo, ahi)
    y = rng.uniform(blo, bhi)
    for op, ref in [(ku.vadd, x + y), (ku.vsub, x - y), (ku.vmul, x * y)]:
        lo, hi = op(alo, ahi, blo, bhi)
        assert np.all(lo <= ref) and np.all(ref <= hi)
