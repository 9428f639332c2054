"""Validated linear algebra: norm bounds, sigma_min, interval solves."""

import math
from fractions import Fraction

import numpy as np
import pytest

from splitcert.intervals import Interval, IntervalBox
from splitcert.matrices import (
    IntervalMatrix,
    LinalgError,
    iinverse,
    ilinsolve,
    imat_apply,
    imat_mul,
    ivec_norm_ub,
    sigma_min_lb,
    spectral_norm_ub,
)

# Published enclosures for the worked 4-d example (transcribed verbatim).
A22_ROWS = [
    [Interval(5.878219435, 5.878219454), Interval(-13.12140618, -13.12140616)],
    [Interval(4.972558758, 4.97255877), Interval(-2.358981737, -2.358981727)],
]
DELTA2_ROWS = [
    [Interval(-1.299703331, 1.286153144), Interval(-0.9977804236, 0.9891960037)],
    [Interval(-0.7568318161, 0.7534173913), Interval(-0.5842185843, 0.5818916067)],
]
YEPS_LO = [-1.030549066e-05, -9.608989689e-06]
YEPS_HI = [1.030549066e-05, 9.608989695e-06]


def test_apply_identity_near_exact():
    m = IntervalMatrix.identity(3)
    v = IntervalBox([1.0, -2.0, 0.5], [1.0, -2.0, 0.5])
    r = imat_apply(m, v)
    for i, x in enumerate([1.0, -2.0, 0.5]):
        assert r[i].contains(x)
        assert r[i].width <= 4 * math.ulp(max(abs(x), 1.0))


def test_apply_rotation():
    m = IntervalMatrix.point([[0.0, 1.0], [-1.0, 0.0]])
    v = IntervalBox([1.0, 2.0], [1.0, 2.0])
    r = imat_apply(m, v)
    assert r[0].contains(2.0) and r[1].contains(-1.0)


def test_apply_point_vs_rational_oracle():
    rng = np.random.RandomState(seed=11)
    for _ in range(20):
        a = rng.uniform(-5, 5, (3, 3))
        x = rng.uniform(-5, 5, 3)
        r = imat_apply(IntervalMatrix.point(a), IntervalBox.point(x))
        exact = [sum(Fraction(a[i, j]) * Fraction(x[j]) for j in range(3)) for i in range(3)]
        for i in range(3):
            assert Fraction(r[i].lo) <= exact[i] <= Fraction(r[i].hi)


def test_mul_dimensions_checked():
    with pytest.raises(Exception):
        imat_mul(IntervalMatrix.zeros(2, 3), IntervalMatrix.zeros(2, 3))


def test_spectral_norm_identity_and_diag():
    assert abs(spectral_norm_ub(IntervalMatrix.identity(2)) - 1.0) <= 4 * math.ulp(1.0)
    d = IntervalMatrix.point([[2.0, 0.0], [0.0, 1.0]])
    assert abs(spectral_norm_ub(d) - 2.0) <= 4 * math.ulp(2.0)


def test_spectral_norm_delta2_golden():
    # Gershgorin on the interval Gram matrix reproduces the published bound
    d2 = IntervalMatrix.from_rows(DELTA2_ROWS)
    ub = spectral_norm_ub(d2)
    assert ub <= 2.000249209 * (1 + 1e-6)
    assert ub >= 1.89


def test_sigma_min_identity():
    assert sigma_min_lb(IntervalMatrix.identity(2)) >= 1.0 - 1e-12


def test_sigma_min_a22_golden():
    a22 = IntervalMatrix.from_rows(A22_ROWS)
    lb = sigma_min_lb(a22)
    assert 3.4230 <= lb <= 3.42309


def test_sigma_min_singular_is_zero():
    ones = IntervalMatrix.point([[1.0, 1.0], [1.0, 1.0]])
    assert sigma_min_lb(ones) == 0.0


def test_sigma_min_1x1():
    assert sigma_min_lb(IntervalMatrix.from_rows([[Interval(2, 3)]])) == 2.0
    assert sigma_min_lb(IntervalMatrix.from_rows([[Interval(-1, 1)]])) == 0.0


def test_sigma_min_4x4_inverse_route():
    rng = np.random.RandomState(seed=3)
    a = rng.uniform(-2, 2, (4, 4)) + 4 * np.eye(4)
    m = IntervalMatrix.point(a)
    lb = sigma_min_lb(m)
    smin = np.linalg.svd(a, compute_uv=False)[-1]
    assert 0.0 < lb <= smin


def test_svd_sandwich_random():
    # nonrigorous dense-SVD oracle brackets both bounds on point matrices
    rng = np.random.RandomState(seed=5)
    for n in (2, 3, 4):
        for _ in range(10):
            a = rng.uniform(-3, 3, (n, n))
            m = IntervalMatrix.point(a)
            s = np.linalg.svd(a, compute_uv=False)
            assert sigma_min_lb(m) <= s[-1] + 1e-9
            assert spectral_norm_ub(m) >= s[0] - 1e-9


def test_norm_monotone_under_widening():
    rng = np.random.RandomState(seed=8)
    for _ in range(20):
        a = rng.uniform(-3, 3, (3, 3))
        m = IntervalMatrix.point(a)
        w = IntervalMatrix(m.lo - rng.uniform(0, 0.5, (3, 3)), m.hi + rng.uniform(0, 0.5, (3, 3)))
        assert spectral_norm_ub(w) >= spectral_norm_ub(m)


def test_ivec_norm_345():
    v = IntervalBox([3.0, 4.0], [3.0, 4.0])
    assert abs(ivec_norm_ub(v) - 5.0) <= 4 * math.ulp(5.0)
    assert ivec_norm_ub(IntervalBox.point([0.0, 0.0, 0.0])) == 0.0


def test_ivec_norm_golden():
    v = IntervalBox(YEPS_LO, YEPS_HI)
    ub = ivec_norm_ub(v)
    assert ub <= 1.409027398e-5 * (1 + 1e-6)
    assert abs(ub - 1.409027398e-5) <= 1e-12


def test_ilinsolve_identity():
    b = IntervalBox([1.0, -2.0], [1.5, -1.5])
    x = ilinsolve(IntervalMatrix.identity(2), b)
    assert x.contains_box(b)
    assert np.all(x.width() <= b.width() + 8 * np.spacing(2.0))


def test_ilinsolve_diagonal():
    m = IntervalMatrix.point([[2.0, 0.0], [0.0, 4.0]])
    b = IntervalBox([2.0, 4.0], [2.0, 4.0])
    x = ilinsolve(m, b)
    assert x.contains_point([1.0, 1.0])


def test_ilinsolve_random_vs_rational_oracle():
    rng = np.random.RandomState(seed=21)
    for _ in range(10):
        a = rng.uniform(-2, 2, (4, 4)) + 5 * np.eye(4)
        b = rng.uniform(-3, 3, 4)
        x = ilinsolve(IntervalMatrix.point(a), IntervalBox.point(b))
        af = [[Fraction(a[i, j]) for j in range(4)] for i in range(4)]
        bf = [Fraction(v) for v in b]
        # exact rational Gaussian elimination
        for k in range(4):
            p = max(range(k, 4), key=lambda i: abs(af[i][k]))
            af[k], af[p] = af[p], af[k]
            bf[k], bf[p] = bf[p], bf[k]
            for i in range(k + 1, 4):
                f = af[i][k] / af[k][k]
                bf[i] -= f * bf[k]
                for j in range(k, 4):
                    af[i][j] -= f * af[k][j]
        xf = [Fraction(0)] * 4
        for i in range(3, -1, -1):
            s = bf[i] - sum(af[i][j] * xf[j] for j in range(i + 1, 4))
            xf[i] = s / af[i][i]
        for i in range(4):
            assert Fraction(x[i].lo) <= xf[i] <= Fraction(x[i].hi)


def test_ilinsolve_residual_contains_zero():
    rng = np.random.RandomState(seed=13)
    for _ in range(10):
        a = rng.uniform(-1, 1, (3, 3)) + 3 * np.eye(3)
        m = IntervalMatrix(a - 1e-9, a + 1e-9)
        b = IntervalBox.point(rng.uniform(-2, 2, 3))
        x = ilinsolve(m, b)
        resid = imat_apply(m, x) - b
        assert resid.contains_zero()


def test_ilinsolve_unverifiable_raises():
    sing = IntervalMatrix.point([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(LinalgError):
        ilinsolve(sing, IntervalBox.point([1.0, 1.0]))


def test_iinverse_contains_true_inverse():
    rng = np.random.RandomState(seed=17)
    a = rng.uniform(-1, 1, (3, 3)) + 2 * np.eye(3)
    inv = iinverse(IntervalMatrix.point(a))
    true_inv = np.linalg.inv(a)
    assert np.all(inv.lo <= true_inv + 1e-9) and np.all(true_inv - 1e-9 <= inv.hi)
