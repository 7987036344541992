"""Error norms, inequality checks, constants, and rate extraction.

Conventions shared by every function here:

* L2 norms use the velocity mass matrix; H1 error norms use the full
  Sobolev matrix M + A (norm of value plus gradient).  Inner-product
  objects from :mod:`podns.pod` are used where a configurable X is
  meant (the pointwise bound checks), and there H1 means the gradient
  seminorm, consistent with the POD construction.
* Second time derivatives of a stored series are approximated by
  three-point second differences on the uniform grid: central stencils
  inside, one-sided at the two endpoints (both exact for quadratic
  trajectories).  Time integrals over them use trapezoidal weights.
"""

import csv
from dataclasses import dataclass, field

import numpy as np


def _sq_norm(op, v):
    return float(max(v @ (op @ v), 0.0))


# -- error norms -----------------------------------------------------


def compute_error_norms(series, reference, ops, dt=None):
    """Per-level relative errors of `series` against `reference`.

    Both arguments are (ndof, n) velocity coefficient series.  Returns a
    dict with per-level absolute and relative L2/H1 errors, zero-division
    flags (relative error reported as absolute there), and, when dt is
    given, the accumulated quantities sum_j dt * error_j^2.
    """
    if series.shape != reference.shape:
        raise ValueError("series shapes must match")
    n = series.shape[1]
    H = ops.h1_full()
    out = {
        "l2_abs": np.zeros(n),
        "h1_abs": np.zeros(n),
        "l2_rel": np.zeros(n),
        "h1_rel": np.zeros(n),
        "zero_denominator": np.zeros(n, dtype=bool),
    }
    for j in range(n):
        d = series[:, j] - reference[:, j]
        ref = reference[:, j]
        e0 = np.sqrt(_sq_norm(ops.M, d))
        e1 = np.sqrt(_sq_norm(H, d))
        r0 = np.sqrt(_sq_norm(ops.M, ref))
        r1 = np.sqrt(_sq_norm(H, ref))
        out["l2_abs"][j] = e0
        out["h1_abs"][j] = e1
        if r0 == 0.0 or r1 == 0.0:
            out["zero_denominator"][j] = True
            out["l2_rel"][j] = e0
            out["h1_rel"][j] = e1
        else:
            out["l2_rel"][j] = e0 / r0
            out["h1_rel"][j] = e1 / r1
    if dt is not None:
        out["l2_accumulated"] = float(dt * np.sum(out["l2_abs"] ** 2))
        out["h1_accumulated"] = float(dt * np.sum(out["h1_abs"] ** 2))
    return out


def exact_error_norms(space, u_values, problem, t):
    """Quadrature L2/H1 errors of a velocity field against the exact
    solution of a manufactured problem at time t.

    Unlike coefficient-space comparisons against the interpolant, this
    measures the true discretization error; the interpolant surrogate
    superconverges in diffusion-dominated regimes and distorts
    cross-regime comparisons.
    """
    from podns.assembly import get_tables

    vs = space.velocity.scalar
    tab = get_tables(vs, 3 * space.degree - 1)
    x = tab.xq[:, :, 0]
    y = tab.xq[:, :, 1]
    ns = vs.num_dofs
    gx = tab.gather(u_values[:ns])
    gy = tab.gather(u_values[ns:])
    uhx = np.einsum("ci,iq->cq", gx, tab.phi)
    uhy = np.einsum("ci,iq->cq", gy, tab.phi)
    ex, ey = problem.velocity(x, y, t)
    l2_sq = float(np.sum(tab.wdet * ((uhx - ex) ** 2 + (uhy - ey) ** 2)))
    # physical gradients of the discrete field at quadrature points
    duhx = np.einsum("ci,ciqd->cqd", gx, tab.dphys)
    duhy = np.einsum("ci,ciqd->cqd", gy, tab.dphys)
    gxx, gxy, gyx, gyy = problem.velocity_gradient(x, y, t)
    grad_sq = (
        (duhx[:, :, 0] - gxx) ** 2
        + (duhx[:, :, 1] - gxy) ** 2
        + (duhy[:, :, 0] - gyx) ** 2
        + (duhy[:, :, 1] - gyy) ** 2
    )
    h1_sq = l2_sq + float(np.sum(tab.wdet * grad_sq))
    return np.sqrt(l2_sq), np.sqrt(h1_sq)


# -- second differences ----------------------------------------------


def _second_differences(series, dt):
    """Three-point second difference quotients at every grid node."""
    n = series.shape[1]
    if n < 3:
        raise ValueError("need at least three time levels (M >= 2)")
    ztt = np.empty_like(series)
    ztt[:, 1:-1] = (series[:, 2:] - 2.0 * series[:, 1:-1] + series[:, :-2]) / dt**2
    ztt[:, 0] = (series[:, 0] - 2.0 * series[:, 1] + series[:, 2]) / dt**2
    ztt[:, -1] = (series[:, -1] - 2.0 * series[:, -2] + series[:, -3]) / dt**2
    return ztt


def _trapezoid_weights(n, dt):
    w = np.full(n, dt)
    w[0] = w[-1] = 0.5 * dt
    return w


def second_derivative_integrals(traj, ops):
    """Approximations of int_0^T ||u_tt||^2 dt in the L2 norm and the
    gradient seminorm, from second differences of the stored velocity
    series."""
    dt = float(traj.times[1] - traj.times[0])
    ztt = _second_differences(traj.velocities, dt)
    w = _trapezoid_weights(ztt.shape[1], dt)
    i0 = sum(w[j] * _sq_norm(ops.M, ztt[:, j]) for j in range(ztt.shape[1]))
    i1 = sum(w[j] * _sq_norm(ops.A, ztt[:, j]) for j in range(ztt.shape[1]))
    return float(i0), float(i1)


def series_second_derivative_integral(series, dt, op):
    """Same quadrature for an arbitrary series and norm operator."""
    ztt = _second_differences(series, dt)
    w = _trapezoid_weights(ztt.shape[1], dt)
    return float(sum(w[j] * _sq_norm(op, ztt[:, j]) for j in range(ztt.shape[1])))


# -- pointwise-in-time projection bounds -----------------------------


def pointwise_bound_check(z_series, zt_series, inner, variant, dt):
    """Discrete pointwise bound on a series z with derivative series zt.

    variant 'initial':
        max_k ||z^k||_X^2 <= 3 ||z^0||_X^2 + (3 T^2 / M) sum_n ||zt^n||_X^2
                             + (4T/3) dt^2 int ||z_tt||_X^2
    variant 'mean': anchor ||z-bar||_X^2 with constants (3, 12, 16/3).

    zt_series holds the M derivative members at t_1..t_M.  The z_tt
    integral is measured from second differences of z itself.  Returns
    (lhs, rhs, margin) with margin = rhs - lhs.
    """
    if variant not in ("initial", "mean"):
        raise ValueError("variant must be 'initial' or 'mean'")
    n_levels = z_series.shape[1]
    M = n_levels - 1
    if M < 2:
        raise ValueError("need M >= 2 for the second-difference integral")
    if zt_series.shape[1] != M:
        raise ValueError(f"expected {M} derivative members, got {zt_series.shape[1]}")
    T = M * dt
    X = inner.operator

    lhs = max(_sq_norm(X, z_series[:, k]) for k in range(n_levels))
    if variant == "initial":
        anchor = _sq_norm(X, z_series[:, 0])
        c_anchor, c_rate, c_tt = 3.0, 3.0, 4.0 / 3.0
    else:
        anchor = _sq_norm(X, z_series.mean(axis=1))
        c_anchor, c_rate, c_tt = 3.0, 12.0, 16.0 / 3.0
    rate_sum = sum(_sq_norm(X, zt_series[:, n]) for n in range(M))
    itt = series_second_derivative_integral(z_series, dt, X)
    rhs = c_anchor * anchor + c_rate * (T**2 / M) * rate_sum + c_tt * T * dt**2 * itt
    return lhs, rhs, rhs - lhs


def tail_bound(basis, r, T, dt, itt_x, variant="initial"):
    """Upper bound C_X^2 on the max-in-time squared X-projection error:

        (3 + 6 (T/tau)^2) sum_{k>r} lambda_k + (16T/3) dt^2 int ||u_tt||_X^2

    for anchor variant 'initial'; the mean-anchored variant doubles the
    derivative-member constant (6 -> 24 via (M+1)/M <= 2).
    """
    tail = basis.tail_sum(r)
    ratio = (T / basis.tau) ** 2
    c_deriv = 6.0 if variant == "initial" else 24.0
    return (3.0 + c_deriv * ratio) * tail + (16.0 * T / 3.0) * dt**2 * itt_x


# -- convergence rates -----------------------------------------------


def convergence_rates(errors, spacings):
    """Pairwise rates log(e_i/e_{i+1}) / log(h_i/h_{i+1}).

    Zero errors make the quotient degenerate; those entries are flagged
    as saturated (rate reported as None).
    """
    errors = list(errors)
    spacings = list(spacings)
    if len(errors) != len(spacings) or len(errors) < 2:
        raise ValueError("need equally many errors and spacings, at least two")
    if any(h <= 0 for h in spacings):
        raise ValueError("spacings must be positive")
    rates = []
    for e0, e1, h0, h1 in zip(errors, errors[1:], spacings, spacings[1:]):
        if e0 < 0 or e1 < 0:
            raise ValueError("errors must be non-negative")
        if e0 == 0.0 or e1 == 0.0:
            rates.append(None)
        else:
            rates.append(float(np.log(e0 / e1) / np.log(h0 / h1)))
    return rates


# -- a priori constants ----------------------------------------------


@dataclass
class ConstantsReport:
    """Discrete surrogates of the a priori constants.

    Max norms are computed over DOF values (fields) and quadrature
    points (gradients); they are surrogates of the analytic sup-norms.
    """

    c_inf: float
    c_1_inf: float
    c_ld: float
    k_inf: float
    k_1_inf: float
    c_u: float
    time_step_value: float
    time_step_ok: bool
    per_step: dict = field(default_factory=dict)


def _gradient_point_norms(space, u):
    """Pointwise |grad u| (Frobenius) at all quadrature points: (nc, nq)."""
    from podns.assembly import get_tables

    vs = space.velocity.scalar
    tab = get_tables(vs, 3 * space.degree - 1)
    ns = vs.num_dofs
    gx = np.einsum("ci,ciqd->cqd", tab.gather(u[:ns]), tab.dphys)
    gy = np.einsum("ci,ciqd->cqd", tab.gather(u[ns:]), tab.dphys)
    return np.sqrt(gx[:, :, 0] ** 2 + gx[:, :, 1] ** 2 + gy[:, :, 0] ** 2 + gy[:, :, 1] ** 2)


def _field_point_values(u, ns):
    return np.sqrt(u[:ns] ** 2 + u[ns:] ** 2)


def constants_report(proj_series, space, ops, mu, dt):
    """Evaluate C_inf, C_1_inf, C_ld, K_inf, K_1_inf, C_u and the
    time-step condition value for a projected velocity series."""
    from podns.assembly import get_tables

    vs = space.velocity.scalar
    ns = vs.num_dofs
    tab = get_tables(vs, 3 * space.degree - 1)
    n = proj_series.shape[1]
    sup_vals = np.empty(n)
    sup_grads = np.empty(n)
    ld_norms = np.empty(n)
    for j in range(n):
        u = proj_series[:, j]
        sup_vals[j] = float(_field_point_values(u, ns).max()) if ns else 0.0
        g = _gradient_point_norms(space, u)
        sup_grads[j] = float(g.max())
        ld_norms[j] = float(np.sum(tab.wdet * g**4) ** 0.25)
    T = dt * (n - 1)
    c_inf = float(sup_vals.max())
    c_1_inf = float(sup_grads.max())
    c_ld = float(ld_norms.max())
    k_inf = float(dt * np.sum(sup_vals**2))
    k_1_inf = float(dt * np.sum(sup_grads))
    c_u = 2.0 * k_1_inf + k_inf**2 / (2.0 * mu) + 2.0
    ts_value = dt * (2.0 * c_1_inf + c_inf**2 / (2.0 * mu) + (2.0 / T if T > 0 else 0.0))
    return ConstantsReport(
        c_inf=c_inf,
        c_1_inf=c_1_inf,
        c_ld=c_ld,
        k_inf=k_inf,
        k_1_inf=k_1_inf,
        c_u=c_u,
        time_step_value=ts_value,
        time_step_ok=bool(ts_value <= 0.5),
        per_step={"sup_values": sup_vals, "sup_gradients": sup_grads, "l4_gradients": ld_norms},
    )


# -- CSV writers -----------------------------------------------------


def write_report_csv(rows, path):
    """rows: iterables (check_id, time_index, lhs, rhs, margin, passed)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["check_id", "time_index", "lhs", "rhs", "margin", "pass"])
        for check_id, tindex, lhs, rhs, margin, passed in rows:
            w.writerow(
                [
                    check_id,
                    tindex,
                    "%.17g" % lhs,
                    "%.17g" % rhs,
                    "%.17g" % margin,
                    "true" if passed else "false",
                ]
            )


def write_rates_csv(rows, path):
    """rows: (level, h_or_dt, error_L2, error_H1, rate_L2, rate_H1);
    rates may be None (first level or saturated)."""

    def fmt(v):
        return "" if v is None else "%.17g" % v

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "h_or_dt", "error_L2", "error_H1", "rate_L2", "rate_H1"])
        for level, h, e2, e1, r2, r1 in rows:
            w.writerow([level, "%.17g" % h, "%.17g" % e2, "%.17g" % e1, fmt(r2), fmt(r1)])


def write_singular_values_csv(basis, path):
    sigma, sigma_rel = basis.singular_values()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "sigma_k", "sigma_rel"])
        for k in range(len(sigma)):
            w.writerow([k + 1, "%.17g" % sigma[k], "%.17g" % sigma_rel[k]])
