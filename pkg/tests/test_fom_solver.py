"""Full-order solver: trivial fixed points, stability, convergence,
derivative recovery, persistence."""

import numpy as np
import pytest

from podns.assembly import assemble_operators
from podns.fe_space import build_taylor_hood, interpolate
from podns.fom_solver import FomConfig, FomSolver, NewtonError, Trajectory, run_fom
from podns.manufactured import get_problem
from podns.mesh import build_rect_mesh


def _small_space():
    return build_taylor_hood(build_rect_mesh(4, 4), 2)


def test_config_validation():
    with pytest.raises(ValueError):
        FomConfig(nu=0.01, dt=0.1, t_end=0.5, integrator="rk4")
    with pytest.raises(ValueError):
        FomConfig(nu=0.01, dt=-0.1, t_end=0.5)
    with pytest.raises(ValueError):
        FomConfig(nu=0.01, dt=0.3, t_end=0.5)
    assert FomConfig(nu=0.01, dt=0.1, t_end=0.5).num_steps == 5


def test_zero_data_zero_trajectory():
    space = _small_space()
    cfg = FomConfig(nu=0.01, dt=0.125, t_end=0.5)
    traj = run_fom(space, cfg, problem=None)
    assert np.max(np.abs(traj.velocities)) == 0.0
    assert np.max(np.abs(traj.pressures)) == 0.0
    assert np.max(np.abs(traj.derivatives)) == 0.0


def test_zero_steps_initial_only():
    space = _small_space()
    prob = get_problem("decaying_vortex", 0.01)
    cfg = FomConfig(nu=0.01, dt=0.5, t_end=0.5)
    traj = run_fom(space, cfg, prob)
    assert traj.velocities.shape[1] == 2
    short = Trajectory(
        traj.space,
        traj.times[:1],
        traj.velocities[:, :1],
        traj.pressures[:, :1],
        traj.derivatives[:, :1],
        traj.meta,
    )
    assert short.velocities.shape[1] == 1


def test_velocities_discretely_divergence_free(vortex_traj, vortex_ops):
    B = vortex_ops.B
    scale = np.max(np.abs(vortex_traj.velocities))
    for j in range(vortex_traj.velocities.shape[1]):
        assert np.max(np.abs(B @ vortex_traj.velocities[:, j])) < 1e-8 * scale
        assert np.max(np.abs(B @ vortex_traj.derivatives[:, j])) < 1e-8 * scale


def test_pressure_zero_mean(vortex_traj, vortex_ops):
    m = vortex_ops.pressure_mean
    scale = max(np.max(np.abs(vortex_traj.pressures)), 1.0)
    for j in range(1, vortex_traj.pressures.shape[1]):
        assert abs(m @ vortex_traj.pressures[:, j]) < 1e-8 * scale


def test_energy_decay_unforced_implicit_euler(rng):
    space = _small_space()
    ops = assemble_operators(space)
    cfg = FomConfig(nu=0.01, dt=0.05, t_end=0.5, integrator="ie")
    solver = FomSolver(space, cfg, problem=None, operators=ops)
    u0 = np.zeros(space.num_velocity_dofs)
    u0[space.velocity.interior_dofs] = rng.standard_normal(
        len(space.velocity.interior_dofs)
    )
    u0 = solver.project_initial(u0)
    norms = [np.sqrt(u0 @ (ops.M @ u0))]
    u = u0
    p = np.zeros(ops.num_pressure_dofs)
    for n in range(1, cfg.num_steps + 1):
        u, p = solver._nonlinear_step(
            n, 1.0 / cfg.dt, (1.0 / cfg.dt) * (ops.M @ u), n * cfg.dt, u, p
        )
        norms.append(np.sqrt(u @ (ops.M @ u)))
    assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))


def test_galerkin_derivative_constraint_and_zero_case():
    space = _small_space()
    ops = assemble_operators(space)
    cfg = FomConfig(nu=0.01, dt=0.1, t_end=0.5)
    solver = FomSolver(space, cfg, problem=None, operators=ops)
    w = solver.galerkin_time_derivative(np.zeros(space.num_velocity_dofs), 0.0)
    assert np.max(np.abs(w)) == 0.0


def test_galerkin_derivative_tracks_difference_quotients():
    """The recovered rate minus the backward quotient shrinks ~ O(dt)."""
    space = _small_space()
    prob = get_problem("decaying_vortex", 0.01)
    devs = []
    for dt in (1.0 / 16.0, 1.0 / 32.0):
        cfg = FomConfig(nu=0.01, dt=dt, t_end=0.25, integrator="ie")
        traj = run_fom(space, cfg, prob)
        U, W = traj.velocities, traj.derivatives
        dq = (U[:, 1:] - U[:, :-1]) / dt
        devs.append(np.max(np.abs(W[:, 1:] - dq)))
    assert devs[1] < 0.75 * devs[0]


def test_bdf2_beats_implicit_euler():
    space = _small_space()
    prob = get_problem("decaying_vortex", 0.01)
    fine = run_fom(
        space, FomConfig(nu=0.01, dt=1.0 / 256.0, t_end=0.25, integrator="bdf2"), prob
    ).velocities[:, -1]
    errs = {}
    for integ in ("ie", "bdf2"):
        traj = run_fom(
            space, FomConfig(nu=0.01, dt=1.0 / 32.0, t_end=0.25, integrator=integ), prob
        )
        errs[integ] = np.linalg.norm(traj.velocities[:, -1] - fine)
    assert errs["bdf2"] < 0.2 * errs["ie"]


def test_newton_failure_reports_step():
    space = _small_space()
    prob = get_problem("decaying_vortex", 0.01)
    cfg = FomConfig(
        nu=0.01,
        dt=0.25,
        t_end=0.5,
        newton_tol=1e-30,
        newton_maxiter=1,
        picard_fallback=False,
    )
    with pytest.raises(NewtonError) as err:
        run_fom(space, cfg, prob)
    assert err.value.step_index == 1
    assert err.value.residual_norm > 0.0


def test_trajectory_roundtrip(tmp_path, vortex_traj):
    vortex_traj.save(tmp_path / "traj")
    back = Trajectory.load(tmp_path / "traj", vortex_traj.space)
    assert np.array_equal(back.times, vortex_traj.times)
    assert np.array_equal(back.velocities, vortex_traj.velocities)
    assert np.array_equal(back.pressures, vortex_traj.pressures)
    assert np.array_equal(back.derivatives, vortex_traj.derivatives)
    assert back.meta["integrator"] == "bdf2"


def test_determinism():
    space = _small_space()
    prob = get_problem("decaying_vortex", 0.01)
    cfg = FomConfig(nu=0.01, dt=0.125, t_end=0.25)
    a = run_fom(space, cfg, prob)
    b = run_fom(space, cfg, prob)
    assert np.array_equal(a.velocities, b.velocities)
    assert np.array_equal(a.pressures, b.pressures)
