"""Manufactured solutions: divergence-freeness, forcing consistency."""

import numpy as np
import pytest

from podns.manufactured import get_problem


@pytest.mark.parametrize(
    "name", ["taylor_green", "decaying_vortex", "oscillating_vortex"]
)
def test_velocity_divergence_free(name):
    prob = get_problem(name, 0.01)
    rng = np.random.default_rng(7)
    x, y = rng.uniform(0.05, 0.95, size=(2, 200))
    eps = 1e-6
    for t in (0.0, 0.3):
        ddx = (
            np.stack(prob.velocity(x + eps, y, t))
            - np.stack(prob.velocity(x - eps, y, t))
        ) / (2 * eps)
        ddy = (
            np.stack(prob.velocity(x, y + eps, t))
            - np.stack(prob.velocity(x, y - eps, t))
        ) / (2 * eps)
        div = ddx[0] + ddy[1]
        assert np.max(np.abs(div)) < 1e-8


@pytest.mark.parametrize(
    "name", ["taylor_green", "decaying_vortex", "oscillating_vortex"]
)
def test_forcing_closes_momentum_equation(name):
    """Second route to the forcing: finite differences of the exact
    velocity/pressure must reproduce the symbolic derivation."""
    nu = 0.01
    prob = get_problem(name, nu)
    rng = np.random.default_rng(11)
    x, y = rng.uniform(0.1, 0.9, size=(2, 50))
    t = 0.2
    eps = 1e-5

    def vel(xx, yy, tt):
        return np.stack(prob.velocity(xx, yy, tt))

    u = vel(x, y, t)
    u_t = (vel(x, y, t + eps) - vel(x, y, t - eps)) / (2 * eps)
    ux = (vel(x + eps, y, t) - vel(x - eps, y, t)) / (2 * eps)
    uy = (vel(x, y + eps, t) - vel(x, y - eps, t)) / (2 * eps)
    lap = (
        vel(x + eps, y, t)
        + vel(x - eps, y, t)
        + vel(x, y + eps, t)
        + vel(x, y - eps, t)
        - 4 * u
    ) / eps**2
    px = (prob.pressure(x + eps, y, t) - prob.pressure(x - eps, y, t)) / (2 * eps)
    py = (prob.pressure(x, y + eps, t) - prob.pressure(x, y - eps, t)) / (2 * eps)
    conv = u[0] * ux + u[1] * uy
    resid = u_t - nu * lap + conv + np.stack([px, py]) - np.stack(prob.forcing(x, y, t))
    assert np.max(np.abs(resid)) < 1e-5


def test_homogeneous_flags_and_boundary_trace():
    s = np.linspace(0.0, 1.0, 33)
    zero = np.zeros_like(s)
    for name, expect in (
        ("taylor_green", False),
        ("decaying_vortex", True),
        ("oscillating_vortex", True),
    ):
        prob = get_problem(name, 0.01)
        assert prob.homogeneous is expect
        for xx, yy in ((s, zero), (s, zero + 1.0), (zero, s), (zero + 1.0, s)):
            un = np.stack(prob.velocity(xx, yy, 0.25))
            if expect:
                assert np.max(np.abs(un)) < 1e-12
        # the normal component vanishes on the square for every problem
        assert np.max(np.abs(np.stack(prob.velocity(zero, s, 0.1))[0])) < 1e-12
        assert np.max(np.abs(np.stack(prob.velocity(s, zero, 0.1))[1])) < 1e-12


def test_velocity_gradient_matches_fd():
    prob = get_problem("decaying_vortex", 0.01)
    rng = np.random.default_rng(3)
    x, y = rng.uniform(0.1, 0.9, size=(2, 30))
    t = 0.4
    eps = 1e-6
    gxx, gxy, gyx, gyy = prob.velocity_gradient(x, y, t)
    ux_fd = (
        np.stack(prob.velocity(x + eps, y, t)) - np.stack(prob.velocity(x - eps, y, t))
    ) / (2 * eps)
    uy_fd = (
        np.stack(prob.velocity(x, y + eps, t)) - np.stack(prob.velocity(x, y - eps, t))
    ) / (2 * eps)
    assert np.max(np.abs(gxx - ux_fd[0])) < 1e-8
    assert np.max(np.abs(gyx - ux_fd[1])) < 1e-8
    assert np.max(np.abs(gxy - uy_fd[0])) < 1e-8
    assert np.max(np.abs(gyy - uy_fd[1])) < 1e-8


def test_velocity_t_matches_fd():
    prob = get_problem("oscillating_vortex", 0.01)
    x = np.array([0.3, 0.7])
    y = np.array([0.6, 0.2])
    eps = 1e-6
    ut = np.stack(prob.velocity_t(x, y, 0.15))
    fd = (
        np.stack(prob.velocity(x, y, 0.15 + eps))
        - np.stack(prob.velocity(x, y, 0.15 - eps))
    ) / (2 * eps)
    assert np.max(np.abs(ut - fd)) < 1e-8


def test_oscillating_modes_have_zero_time_mean():
    prob = get_problem("oscillating_vortex", 0.01, period=0.5)
    x = np.array([0.35])
    y = np.array([0.55])
    # integrate over one period with many samples, excluding the
    # duplicated endpoint
    ts = np.linspace(0.0, 0.5, 2048, endpoint=False)
    vals = np.array([prob.velocity(x, y, t)[0][0] for t in ts])
    assert abs(vals.mean()) < 1e-10 * np.max(np.abs(vals))


def test_unknown_problem_rejected():
    with pytest.raises(ValueError):
        get_problem("channel", 0.01)


def test_nonsolenoidal_velocity_rejected():
    import sympy

    from podns.manufactured import ManufacturedProblem

    x, y, t = sympy.symbols("x y t")
    with pytest.raises(ValueError):
        ManufacturedProblem("bad", 0.01, (x, y), sympy.Integer(0), True)
