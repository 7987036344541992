"""Reference-triangle quadrature exactness.

Oracle: integral of x^a y^b over the unit reference triangle is
a! b! / (a + b + 2)!.
"""

from math import factorial

import numpy as np
import pytest

from podns.quadrature import triangle_rule


def _monomial_exact(a, b):
    return factorial(a) * factorial(b) / factorial(a + b + 2)


@pytest.mark.parametrize("degree", [0, 1, 2, 3, 4, 5, 6, 7, 8, 9])
def test_monomial_exactness(degree):
    pts, wts = triangle_rule(degree)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            val = float(np.sum(wts * pts[:, 0] ** a * pts[:, 1] ** b))
            assert val == pytest.approx(_monomial_exact(a, b), abs=1e-14)


@pytest.mark.parametrize("degree", [1, 5, 8])
def test_weights_sum_to_area(degree):
    _, wts = triangle_rule(degree)
    assert float(wts.sum()) == pytest.approx(0.5, abs=1e-14)
    assert np.all(wts > 0.0)


def test_points_inside_reference_triangle():
    for degree in (3, 8):
        pts, _ = triangle_rule(degree)
        assert np.all(pts >= -1e-14)
        assert np.all(pts.sum(axis=1) <= 1.0 + 1e-14)


def test_low_degree_rule_is_symmetric():
    # the degree-5 rule must be invariant under barycentric permutation
    pts, wts = triangle_rule(5)
    bary = np.column_stack([1.0 - pts.sum(axis=1), pts[:, 0], pts[:, 1]])
    key = np.sort(np.round(bary, 12), axis=1)
    seen = {}
    for row, w in zip(map(tuple, key), wts):
        seen.setdefault(row, []).append(w)
    for group in seen.values():
        assert np.ptp(group) < 1e-14


def test_negative_degree_rejected():
    with pytest.raises(ValueError):
        triangle_rule(-1)
