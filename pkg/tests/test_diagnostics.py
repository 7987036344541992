"""Tests for error norms, discrete bounds and constants reporting."""

import csv

import numpy as np
import pytest
import sympy

from podns.diagnostics import (
    compute_error_norms,
    constants_report,
    convergence_rates,
    exact_error_norms,
    pointwise_bound_check,
    second_derivative_integrals,
    series_second_derivative_integral,
    tail_bound,
    write_rates_csv,
    write_report_csv,
    write_singular_values_csv,
)
from podns.fe_space import TaylorHoodSpace, interpolate
from podns.fom_solver import Trajectory
from podns.manufactured import ManufacturedProblem, get_problem
from podns.mesh import build_rect_mesh
from podns.pod import InnerProduct, compute_pod_basis
from podns.snapshot_sets import build_snapshot_set


@pytest.fixture(scope="module")
def small_basis(vortex_traj, vortex_ops):
    snap = build_snapshot_set(vortex_traj, "initial_plus_derivatives")
    inner = InnerProduct.from_operators(vortex_ops, "L2")
    return compute_pod_basis(snap, inner, r=4)


# -- convergence rates -----------------------------------------------


def test_rates_halving():
    assert convergence_rates([1.0, 0.25], [1.0, 0.5]) == [pytest.approx(2.0)]
    assert convergence_rates([1.0, 0.125], [1.0, 0.5]) == [pytest.approx(3.0)]
    assert convergence_rates([1.0, 1.0], [1.0, 0.5]) == [pytest.approx(0.0)]


def test_rates_scale_invariant(rng):
    errs = [1.3e-2, 3.1e-3, 7.7e-4]
    hs = [0.2, 0.1, 0.05]
    base = convergence_rates(errs, hs)
    scaled = convergence_rates([7.0 * e for e in errs], hs)
    assert np.allclose(base, scaled)


def test_rates_degenerate_and_invalid():
    assert convergence_rates([1.0, 0.0, 0.5], [1.0, 0.5, 0.25]) == [None, None]
    with pytest.raises(ValueError):
        convergence_rates([1.0], [1.0])
    with pytest.raises(ValueError):
        convergence_rates([1.0, 0.5], [1.0])
    with pytest.raises(ValueError):
        convergence_rates([1.0, -0.5], [1.0, 0.5])
    with pytest.raises(ValueError):
        convergence_rates([1.0, 0.5], [1.0, 0.0])


# -- series error norms ----------------------------------------------


def test_error_norms_identical_series(ops2, rng):
    n = ops2.M.shape[0]
    ref = rng.standard_normal((n, 4))
    out = compute_error_norms(ref, ref, ops2, dt=0.1)
    assert np.all(out["l2_abs"] == 0.0)
    assert np.all(out["h1_abs"] == 0.0)
    assert out["l2_accumulated"] == 0.0
    assert not out["zero_denominator"].any()


def test_error_norms_doubled_series(ops2, rng):
    n = ops2.M.shape[0]
    ref = rng.standard_normal((n, 3))
    out = compute_error_norms(2.0 * ref, ref, ops2, dt=0.25)
    assert np.allclose(out["l2_rel"], 1.0)
    assert np.allclose(out["h1_rel"], 1.0)
    acc = 0.25 * sum(
        float(ref[:, j] @ (ops2.M @ ref[:, j])) for j in range(3)
    )
    assert out["l2_accumulated"] == pytest.approx(acc, rel=1e-12)


def test_error_norms_zero_reference_flagged(ops2, rng):
    n = ops2.M.shape[0]
    ref = rng.standard_normal((n, 3))
    ref[:, 1] = 0.0
    series = ref + rng.standard_normal((n, 3))
    out = compute_error_norms(series, ref, ops2)
    assert out["zero_denominator"][1]
    assert not out["zero_denominator"][0]
    assert out["l2_rel"][1] == out["l2_abs"][1]


def test_error_norms_shape_mismatch(ops2):
    n = ops2.M.shape[0]
    with pytest.raises(ValueError):
        compute_error_norms(np.zeros((n, 3)), np.zeros((n, 4)), ops2)


# -- second differences ----------------------------------------------


def test_second_differences_kill_linear(vortex_ops, rng):
    n = vortex_ops.M.shape[0]
    a = rng.standard_normal(n)
    b = rng.standard_normal(n)
    dt = 0.05
    times = dt * np.arange(9)
    series = a[:, None] + times[None, :] * b[:, None]
    val = series_second_derivative_integral(series, dt, vortex_ops.M)
    assert val < 1e-20


def test_second_differences_quadratic_exact(ops2, rng):
    # z(t) = t^2 w has exact second difference 2w at every node, so the
    # trapezoid quadrature gives 4 T w'Mw exactly.
    n = ops2.M.shape[0]
    w = rng.standard_normal(n)
    dt, m = 0.125, 8
    times = dt * np.arange(m + 1)
    series = (times**2)[None, :] * w[:, None]
    val = series_second_derivative_integral(series, dt, ops2.M)
    expect = 4.0 * (m * dt) * float(w @ (ops2.M @ w))
    assert val == pytest.approx(expect, rel=1e-12)


def test_second_differences_need_three_levels(ops2):
    n = ops2.M.shape[0]
    with pytest.raises(ValueError):
        series_second_derivative_integral(np.zeros((n, 2)), 0.1, ops2.M)


def test_trajectory_second_derivative_integrals(vortex_traj, vortex_ops):
    i0, i1 = second_derivative_integrals(vortex_traj, vortex_ops)
    assert i0 > 0.0 and i1 > 0.0
    # Dual route through the series-level helper.
    dt = float(vortex_traj.times[1] - vortex_traj.times[0])
    alt = series_second_derivative_integral(
        vortex_traj.velocities, dt, vortex_ops.M
    )
    assert i0 == pytest.approx(alt, rel=1e-14)


# -- pointwise-in-time bounds ----------------------------------------


def test_pointwise_bound_zero_series(ops2):
    n = ops2.M.shape[0]
    inner = InnerProduct.from_operators(ops2, "L2")
    lhs, rhs, margin = pointwise_bound_check(
        np.zeros((n, 5)), np.zeros((n, 4)), inner, "initial", 0.1
    )
    assert lhs == 0.0 and rhs == 0.0 and margin == 0.0


def test_pointwise_bound_constant_series(ops2, rng):
    n = ops2.M.shape[0]
    c = rng.standard_normal(n)
    series = np.tile(c[:, None], (1, 5))
    inner = InnerProduct.from_operators(ops2, "L2")
    sq = float(c @ (ops2.M @ c))
    for variant in ("initial", "mean"):
        lhs, rhs, margin = pointwise_bound_check(
            series, np.zeros((n, 4)), inner, variant, 0.1
        )
        assert lhs == pytest.approx(sq, rel=1e-12)
        assert rhs == pytest.approx(3.0 * sq, rel=1e-12)
        assert margin > 0.0


def test_pointwise_bound_difference_quotients(ops2, rng):
    # With zt the backward quotients the telescoping argument makes the
    # bound hold outright, no matter the series.
    n = ops2.M.shape[0]
    dt, m = 0.1, 6
    series = rng.standard_normal((n, m + 1))
    zt = (series[:, 1:] - series[:, :-1]) / dt
    for tag in ("L2", "H1"):
        inner = InnerProduct.from_operators(ops2, tag)
        for variant in ("initial", "mean"):
            lhs, rhs, margin = pointwise_bound_check(
                series, zt, inner, variant, dt
            )
            assert margin >= -1e-12 * rhs


def test_pointwise_bound_galerkin_derivatives(vortex_traj, vortex_ops):
    dt = float(vortex_traj.times[1] - vortex_traj.times[0])
    for tag in ("L2", "H1"):
        inner = InnerProduct.from_operators(vortex_ops, tag)
        for variant in ("initial", "mean"):
            lhs, rhs, margin = pointwise_bound_check(
                vortex_traj.velocities,
                vortex_traj.derivatives[:, 1:],
                inner,
                variant,
                dt,
            )
            assert margin >= -1e-8 * rhs


def test_pointwise_bound_validation(ops2):
    n = ops2.M.shape[0]
    inner = InnerProduct.from_operators(ops2, "L2")
    with pytest.raises(ValueError):
        pointwise_bound_check(
            np.zeros((n, 5)), np.zeros((n, 4)), inner, "median", 0.1
        )
    with pytest.raises(ValueError):
        pointwise_bound_check(
            np.zeros((n, 2)), np.zeros((n, 1)), inner, "initial", 0.1
        )
    with pytest.raises(ValueError):
        pointwise_bound_check(
            np.zeros((n, 5)), np.zeros((n, 3)), inner, "initial", 0.1
        )


def test_tail_bound_formula(small_basis):
    T, dt, itt = 0.5, 0.05, 3.7
    r = 2
    tail = small_basis.tail_sum(r)
    ratio = (T / small_basis.tau) ** 2
    expect = (3.0 + 6.0 * ratio) * tail + (16.0 * T / 3.0) * dt**2 * itt
    assert tail_bound(small_basis, r, T, dt, itt) == pytest.approx(expect)
    expect_m = (3.0 + 24.0 * ratio) * tail + (16.0 * T / 3.0) * dt**2 * itt
    assert tail_bound(small_basis, r, T, dt, itt, variant="mean") == (
        pytest.approx(expect_m)
    )


# -- constants report ------------------------------------------------


def test_constants_zero_series(space2, ops2):
    n = ops2.M.shape[0]
    rep = constants_report(np.zeros((n, 3)), space2, ops2, mu=0.01, dt=0.1)
    assert rep.c_inf == 0.0
    assert rep.c_1_inf == 0.0
    assert rep.c_ld == 0.0
    assert rep.k_inf == 0.0
    assert rep.k_1_inf == 0.0
    assert rep.c_u == pytest.approx(2.0)
    # time-step condition reduces to dt * 2/T = 0.1 * 2/0.2
    assert rep.time_step_value == pytest.approx(1.0)
    assert not rep.time_step_ok


def test_constants_rotation_field(space2, ops2):
    # u = (y, -x): |u|max = sqrt(2) at (1,1), |grad u| = sqrt(2)
    # everywhere, l4 gradient norm = (integral 4)^(1/4) = sqrt(2).
    u = interpolate(space2.velocity, lambda x, y: (y, -x)).values
    series = np.tile(u[:, None], (1, 3))
    dt = 0.1
    rep = constants_report(series, space2, ops2, mu=0.01, dt=dt)
    s2 = np.sqrt(2.0)
    assert rep.c_inf == pytest.approx(s2, rel=1e-12)
    assert rep.c_1_inf == pytest.approx(s2, rel=1e-10)
    assert rep.c_ld == pytest.approx(s2, rel=1e-10)
    assert rep.k_inf == pytest.approx(dt * 3 * 2.0, rel=1e-10)
    assert rep.k_1_inf == pytest.approx(dt * 3 * s2, rel=1e-10)
    assert rep.c_u == pytest.approx(
        2.0 * rep.k_1_inf + rep.k_inf**2 / 0.02 + 2.0, rel=1e-12
    )
    assert rep.per_step["sup_values"].shape == (3,)


# -- exact-solution error norms --------------------------------------


def test_exact_error_norms_polynomial_field():
    # Divergence-free quadratic velocity lies in the P2 space, so the
    # interpolant reproduces it to round-off.
    x, y, t = sympy.symbols("x y t")
    prob = ManufacturedProblem(
        "poly", 0.01, (y**2, x**2), x + y - sympy.Integer(1), homogeneous=False
    )
    space = TaylorHoodSpace(build_rect_mesh(3, 3), 2)
    u = interpolate(space.velocity, lambda xx, yy: prob.velocity(xx, yy, 0.0)).values
    l2, h1 = exact_error_norms(space, u, prob, 0.0)
    assert l2 < 1e-13
    assert h1 < 1e-12


def test_exact_error_norms_interpolant_rate():
    prob = get_problem("taylor_green", 0.01)
    errs = []
    for nx in (4, 8):
        space = TaylorHoodSpace(build_rect_mesh(nx, nx), 2)
        u = interpolate(
            space.velocity, lambda xx, yy: prob.velocity(xx, yy, 0.1)
        ).values
        l2, h1 = exact_error_norms(space, u, prob, 0.1)
        assert h1 > l2
        errs.append((l2, h1))
    # P2 interpolation: L2 error O(h^3), H1 error O(h^2).
    assert errs[0][0] / errs[1][0] == pytest.approx(8.0, rel=0.25)
    assert errs[0][1] / errs[1][1] == pytest.approx(4.0, rel=0.25)


# -- CSV writers -----------------------------------------------------


def test_write_report_csv(tmp_path):
    path = tmp_path / "report.csv"
    rows = [("tail", 0, 1.0 / 3.0, 0.5, 0.5 - 1.0 / 3.0, True),
            ("inv", 3, 2.0, 1.0, -1.0, False)]
    write_report_csv(rows, path)
    with open(path, newline="") as fh:
        got = list(csv.reader(fh))
    assert got[0] == ["check_id", "time_index", "lhs", "rhs", "margin", "pass"]
    assert got[1][0] == "tail"
    assert float(got[1][2]) == 1.0 / 3.0
    assert got[1][5] == "true"
    assert got[2][5] == "false"


def test_write_rates_csv(tmp_path):
    path = tmp_path / "rates.csv"
    rows = [(8, 0.125, 1e-3, 1e-2, None, None),
            (16, 0.0625, 1.25e-4, 2.5e-3, 3.0, 2.0)]
    write_rates_csv(rows, path)
    with open(path, newline="") as fh:
        got = list(csv.reader(fh))
    assert got[0][0] == "level"
    assert got[1][4] == "" and got[1][5] == ""
    assert float(got[2][4]) == 3.0


def test_write_singular_values_csv(small_basis, tmp_path):
    path = tmp_path / "sv.csv"
    write_singular_values_csv(small_basis, path)
    with open(path, newline="") as fh:
        got = list(csv.reader(fh))
    assert got[0] == ["k", "sigma_k", "sigma_rel"]
    assert len(got) - 1 == small_basis.d_v
    sigma, sigma_rel = small_basis.singular_values()
    assert float(got[1][1]) == pytest.approx(sigma[0], rel=1e-15)
    assert float(got[1][2]) == pytest.approx(sigma_rel[0], rel=1e-15)
    # Energy-relative scaling: sigma_k / sqrt(sum lambda_j) <= 1.
    assert 0.0 < sigma_rel[0] <= 1.0
