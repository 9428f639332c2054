"""Polynomial maps: evaluation enclosures and symbolic derivatives."""

import numpy as np
import pytest

from splitcert.intervals import Interval, IntervalBox, IntervalError
from splitcert.polys import PolyMap, VectorFieldDef


def test_eval_contains_sampled_points():
    # p(eps, x, y) = 2 x^2 y - eps y + 0.5
    p = PolyMap(3, [[(2.0, (0, 2, 1)), (-1.0, (1, 0, 1)), (0.5, (0, 0, 0))]])
    box = IntervalBox([0.0, -1.0, 0.5], [0.1, 2.0, 1.5])
    val = p.eval_box(box)
    rng = np.random.RandomState(2)
    for _ in range(100):
        e, x, y = rng.uniform(box.lo, box.hi)
        assert val[0].contains(2 * x * x * y - e * y + 0.5)


def test_partial_derivatives_symbolic():
    p = PolyMap(2, [[(3.0, (0, 4))]])  # 3 x^4
    dx = p.partial(1)
    assert dx.components[0][0][1] == (0, 3)
    assert dx.components[0][0][0].contains(12.0)
    de = p.partial(0)
    assert de.components[0] == []


def test_jet_matches_hand_values():
    # p(eps, x) = x^3 + eps x
    p = PolyMap(2, [[(1.0, (0, 3)), (1.0, (1, 1))]])
    box = IntervalBox([0.0, 2.0], [0.0, 2.0])  # eps = 0, x = 2
    j = p.jet(box)
    assert j.value[0].contains(8.0)
    assert j.d1[0, 0].contains(2.0)   # d/deps = x
    assert j.d1[0, 1].contains(12.0)  # d/dx = 3x^2
    assert j.d2lo[0, 1, 1] <= 12.0 <= j.d2hi[0, 1, 1]
    assert j.d2lo[0, 0, 1] <= 1.0 <= j.d2hi[0, 0, 1]
    assert j.d2lo[0, 0, 0] <= 0.0 <= j.d2hi[0, 0, 0]


def test_interval_coefficients():
    c = Interval(1.0, 1.0 + 1e-12)
    p = PolyMap(1, [[(c, (2,))]])
    v = p.eval_box(IntervalBox([3.0], [3.0]))
    assert v[0].contains(9.0) and v[0].contains(9.0 * (1 + 1e-12))


def test_affine_builder():
    p = PolyMap.affine(2, [1.0, 0.0], [[0.0, 2.0], [1.0, 0.0]])
    v = p.eval_box(IntervalBox([0.5, 3.0], [0.5, 3.0]))
    assert v[0].contains(7.0) and v[1].contains(0.5)


def test_vector_field_validation():
    p = PolyMap(2, [[(1.0, (0, 1))]])
    f = VectorFieldDef(1, p)
    assert f.eval_point(0.0, [2.0])[0] == 2.0
    with pytest.raises(IntervalError):
        VectorFieldDef(2, p)
    neg = f.negated()
    assert neg.eval_point(0.0, [2.0])[0] == -2.0
