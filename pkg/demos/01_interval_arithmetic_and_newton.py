"""Intervals, rigorous linear algebra, and certified root finding.

Every arithmetic operation in splitcert returns an enclosure of the exact
real result, so chains of computations carry mathematical guarantees: if
the final interval excludes zero, the exact value is provably nonzero.
This walk-through builds up from scalar intervals to a certified
square-root-of-two and a parameterized zero family.
"""

from splitcert import (
    FunctionOracle,
    Interval,
    IntervalBox,
    IntervalMatrix,
    ilinsolve,
    ivec_norm_ub,
    newton_verify,
    sigma_min_lb,
    spectral_norm_ub,
)

# --- scalar enclosures ------------------------------------------------------

a = Interval(1, 2)
b = Interval(3, 4)
print("a + b        =", a + b)
print("a * b        =", a * b)
print("1/3 enclosed =", Interval(1, 1) / Interval(3, 3))
print("sqrt(2)      =", Interval(2, 2).sqrt(), " (width %.1e)" % Interval(2, 2).sqrt().width)

# --- rigorous norms ----------------------------------------------------------

m = IntervalMatrix.from_rows([
    [Interval(0.9, 1.1), Interval(-0.2, 0.2)],
    [Interval(-0.2, 0.2), Interval(1.9, 2.1)],
])
print("\noperator norm upper bound:", spectral_norm_ub(m))
print("smallest singular value lower bound:", sigma_min_lb(m))
print("norm of an interval vector:", ivec_norm_ub(IntervalBox([3, 4], [3, 4])))

# verified linear solve: the result box contains A^-1 b for EVERY A, b
x = ilinsolve(m, IntervalBox([1.0, 1.0], [1.0, 1.0]))
print("verified solve enclosure:", x)

# --- interval Newton certification -------------------------------------------
# certify the zero of y^2 - 2 inside [1.3, 1.5]: existence, uniqueness and a
# tiny enclosure, all rigorous

f = FunctionOracle(
    eval=lambda _x, y: IntervalBox.from_intervals([y[0].sqr() - 2.0]),
    deriv=lambda _x, y: IntervalMatrix.from_rows([[y[0] * 2.0]]),
)
cert = newton_verify(f, IntervalBox([0.0], [0.0]), IntervalBox([1.3], [1.5]))
print("\nsqrt(2) certified:", cert.verified)
print("enclosure:", cert.refined[0], " width %.1e" % cert.refined[0].width)

# a parameterized family: f(x, y) = y - x over x in [0, 1] certifies the
# whole graph y = q(x) at once
fam = FunctionOracle(
    eval=lambda x, y: y - x,
    deriv=lambda _x, _y: IntervalMatrix.identity(1),
)
cert = newton_verify(fam, IntervalBox([0.0], [1.0]), IntervalBox([-0.2], [1.2]), y0=[0.5])
print("zero family certified over the parameter box:", cert.verified,
      " enclosure:", cert.refined[0])
