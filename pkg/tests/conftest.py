"""Shared fixtures: small spaces and one precomputed trajectory."""

import numpy as np
import pytest

from podns.assembly import assemble_operators
from podns.fe_space import build_taylor_hood
from podns.fom_solver import FomConfig, run_fom
from podns.manufactured import get_problem
from podns.mesh import build_rect_mesh


@pytest.fixture(scope="session")
def space2():
    return build_taylor_hood(build_rect_mesh(4, 4), 2)


@pytest.fixture(scope="session")
def space3():
    return build_taylor_hood(build_rect_mesh(2, 2), 3)


@pytest.fixture(scope="session")
def ops2(space2):
    return assemble_operators(space2)


@pytest.fixture(scope="session")
def ops3(space3):
    return assemble_operators(space3)


@pytest.fixture(scope="session")
def vortex_traj():
    """8x8 multi-mode vortex run, BDF2, 16 steps, with derivatives."""
    space = build_taylor_hood(build_rect_mesh(8, 8), 2)
    problem = get_problem("decaying_vortex", 0.01)
    cfg = FomConfig(nu=0.01, dt=1.0 / 32.0, t_end=0.5, mu=0.01, integrator="bdf2")
    return run_fom(space, cfg, problem)


@pytest.fixture(scope="session")
def vortex_ops(vortex_traj):
    return assemble_operators(vortex_traj.space)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
