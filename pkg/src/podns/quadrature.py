"""Quadrature rules on the reference triangle {(x, y): x, y >= 0, x+y <= 1}.

Weights sum to the reference area 1/2.  Up to polynomial degree 5 the
classical symmetric 7-point rule is used; beyond that a collapsed
tensor rule (Gauss-Legendre x Gauss-Jacobi with weight (1-t)) provides
exactness for any requested degree.
"""

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


def _symmetric_rule_7():
    s15 = np.sqrt(15.0)
    a = (6.0 - s15) / 21.0
    b = (6.0 + s15) / 21.0
    wa = (155.0 - s15) / 1200.0
    wb = (155.0 + s15) / 1200.0
    third = 1.0 / 3.0
    bary = [
        (third, third, third),
        (1.0 - 2.0 * a, a, a),
        (a, 1.0 - 2.0 * a, a),
        (a, a, 1.0 - 2.0 * a),
        (1.0 - 2.0 * b, b, b),
        (b, 1.0 - 2.0 * b, b),
        (b, b, 1.0 - 2.0 * b),
    ]
    weights = np.array([9.0 / 40.0, wa, wa, wa, wb, wb, wb]) * 0.5
    points = np.array([(l2, l3) for (_, l2, l3) in bary])
    return points, weights


def _collapsed_rule(degree):
    n = (degree + 2) // 2  # 2n-1 >= degree ... ceil
    if 2 * n - 1 < degree:
        n += 1
    xg, wg = roots_legendre(n)
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    s = 0.5 * (xg + 1.0)
    ws = 0.5 * wg
    t = 0.5 * (xj + 1.0)
    # (1 - x) on [-1, 1] integrates the Jacobi weight; mapping to [0, 1]
    # against (1 - t) dt contributes a factor 1/4
    wt = 0.25 * wj
    ss, tt = np.meshgrid(s, t, indexing="ij")
    points = np.column_stack([(ss * (1.0 - tt)).ravel(), tt.ravel()])
    weights = np.outer(ws, wt).ravel()
    return points, weights


def triangle_rule(degree):
    """Return (points, weights) exact for polynomials up to `degree`.

    points : (nq, 2) array of reference coordinates
    weights : (nq,) array summing to 1/2
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if degree <= 5:
        return _symmetric_rule_7()
    return _collapsed_rule(degree)
