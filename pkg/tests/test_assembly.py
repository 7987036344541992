"""Assembled operators: mass/stiffness/grad-div/divergence/load."""

import numpy as np
import pytest

from podns.assembly import (
    assemble_load,
    assemble_operators,
    read_sparse_csv,
    trilinear_form,
    write_sparse_csv,
)
from podns.fe_space import interpolate
from podns.mesh import build_rect_mesh
from podns.fe_space import build_taylor_hood


def test_quadrature_degree_tracks_velocity_degree(ops2, ops3):
    assert ops2.quad_degree == 5
    assert ops3.quad_degree == 8


@pytest.mark.parametrize("fixture", ["ops2", "ops3"])
def test_operator_symmetry(fixture, request):
    ops = request.getfixturevalue(fixture)
    for mat in (ops.M, ops.A, ops.G, ops.Mp):
        assert abs(mat - mat.T).max() < 1e-12


def test_mass_total_is_domain_area(ops2):
    # each scalar block integrates the constant 1 against itself
    assert ops2.M.sum() == pytest.approx(2.0, abs=1e-12)
    assert ops2.Mp.sum() == pytest.approx(1.0, abs=1e-12)
    assert ops2.pressure_mean.sum() == pytest.approx(1.0, abs=1e-12)


def test_mass_positive_definite(ops2):
    eigs = np.linalg.eigvalsh(ops2.M.toarray())
    assert eigs.min() > 0.0


def test_stiffness_kills_constants(space2, ops2):
    ones = interpolate(space2.velocity, lambda x, y: (np.ones_like(x), np.ones_like(x)))
    assert np.max(np.abs(ops2.A @ ones.values)) < 1e-12


def test_divergence_free_rotation_field(space2, ops2):
    u = interpolate(space2.velocity, lambda x, y: (y, -x))
    assert np.max(np.abs(ops2.G @ u.values)) < 1e-10
    assert np.max(np.abs(ops2.B @ u.values)) < 1e-10


def test_grad_div_below_stiffness(ops2, rng):
    n = ops2.num_velocity_dofs
    for _ in range(100):
        v = rng.standard_normal(n)
        assert v @ (ops2.G @ v) <= v @ (ops2.A @ v) + 1e-12 * (v @ v)


def test_load_zero_forcing(ops2):
    z = assemble_load(ops2, lambda x, y: (np.zeros_like(x), np.zeros_like(x)))
    assert np.max(np.abs(z)) == 0.0


def test_load_constant_forcing(ops2):
    L = assemble_load(ops2, lambda x, y: (np.ones_like(x), np.zeros_like(x)))
    ns = ops2.num_velocity_dofs // 2
    scalar_mass_rows = np.asarray(ops2.M[:ns, :ns].sum(axis=1)).ravel()
    assert np.max(np.abs(L[:ns] - scalar_mass_rows)) < 1e-12
    assert np.max(np.abs(L[ns:])) == 0.0


def test_trilinear_hand_quadrature():
    # b((1,0), (x,0), (1,0)) = integral of d/dx(x) = |Omega| = 1
    th = build_taylor_hood(build_rect_mesh(2, 2), 2)
    ops = assemble_operators(th)
    u = interpolate(th.velocity, lambda x, y: (np.ones_like(x), np.zeros_like(x)))
    v = interpolate(th.velocity, lambda x, y: (x, np.zeros_like(x)))
    val = trilinear_form(ops, u.values, v.values, u.values)
    assert val == pytest.approx(1.0, abs=1e-10)


def test_sparse_csv_roundtrip(tmp_path, ops2):
    path = tmp_path / "m.csv"
    write_sparse_csv(ops2.B, path)
    back = read_sparse_csv(path, shape=ops2.B.shape)
    assert abs(ops2.B - back).max() == 0.0


def test_h1_full_is_mass_plus_stiffness(ops2):
    assert abs(ops2.h1_full() - (ops2.M + ops2.A)).max() == 0.0
