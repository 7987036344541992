"""Command line front end orchestrating the POD-ROM pipeline.

Subcommands::

    podns fom run            solve the full-order model, write a trajectory
    podns pod build          build a POD basis from a stored trajectory
    podns rom run            march the reduced model from a stored basis
    podns study convergence  mesh (or time step) refinement study -> rates.csv
    podns study compare-sets snapshot-set comparison -> singular values,
                             projection errors, ROM errors per inner product
    podns check invariants   orthonormality / tail / Gram / inequality checks
    podns report             error norms and a priori constants for a run

Configuration comes from a JSON file (--config) merged over built-in
defaults; any command line flag overrides both.  All numeric CSV output
uses 17 significant digits so values round-trip exactly, and every
randomized check derives from the configured seed, so reruns with the
same config are byte-identical.  The default output root is the
PODNS_OUTPUT_ROOT environment variable (falling back to ./podns_out).

Exit codes: 0 success, 1 usage or configuration error, 2 numerical
failure (nonlinear solver breakdown, singular systems).
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from podns.assembly import assemble_operators
from podns.diagnostics import (
    compute_error_norms,
    constants_report,
    convergence_rates,
    exact_error_norms,
    pointwise_bound_check,
    series_second_derivative_integral,
    tail_bound,
    write_rates_csv,
    write_report_csv,
    write_singular_values_csv,
)
from podns.fe_space import build_taylor_hood
from podns.fom_solver import FomConfig, NewtonError, Trajectory, run_fom
from podns.manufactured import get_problem
from podns.mesh import build_rect_mesh, read_mesh, write_mesh
from podns.pod import (
    InnerProduct,
    PodBasis,
    compute_pod_basis,
    pod_gram_matrices,
    project_series,
)
from podns.rom_solver import (
    RomConfig,
    RomNewtonError,
    build_rom_operators,
    initial_coordinates,
    run_rom,
    slice_rom_operators,
)
from podns.snapshot_sets import (
    VARIANTS,
    build_snapshot_set,
    fluctuation_trajectory,
)

_FMT = "%.17g"

DEFAULTS = {
    "nx": 16,
    "ny": 16,
    "degree": 2,
    "nu": 0.01,
    "mu": 0.01,
    "dt": 1.0 / 64.0,
    "t_end": 0.5,
    "integrator": "bdf2",
    "problem": "decaying_vortex",
    "problem_args": {},
    "variant": "initial_plus_derivatives",
    "tau": None,
    "x": "L2",
    "r": None,
    "threshold": None,
    "levels": [8, 16, 32],
    "dts": [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
    "ref_dt": 1.0 / 1024.0,
    "mode": "space",
    "rom_r_max": 8,
    "seed": 1234,
    "out": None,
}

_SET_CHOICES = VARIANTS + ("mean_fluctuations",)
_PROBLEMS = ("taylor_green", "decaying_vortex", "oscillating_vortex", "none")


class UsageError(Exception):
    """Configuration or command line problem (exit code 1)."""


# -- configuration ---------------------------------------------------


def _load_config_file(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return data


def merged_config(args):
    """DEFAULTS <- JSON file <- command line flags; returns the merged
    dict plus the set of keys given explicitly (file or flag)."""
    cfg = dict(DEFAULTS)
    explicit = set()
    path = getattr(args, "config", None)
    if path:
        file_cfg = _load_config_file(path)
        cfg.update(file_cfg)
        explicit |= set(file_cfg)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
            explicit.add(key)
    _validate_config(cfg)
    return cfg, explicit


def _validate_config(cfg):
    def bad(msg):
        raise UsageError(f"invalid config: {msg}")

    for key in ("nx", "ny"):
        if not (isinstance(cfg[key], int) and cfg[key] >= 1):
            bad(f"{key} must be a positive integer")
    if cfg["degree"] not in (2, 3):
        bad("degree must be 2 or 3")
    for key in ("nu", "dt", "t_end"):
        if not cfg[key] > 0:
            bad(f"{key} must be positive")
    if cfg["mu"] < 0:
        bad("mu must be non-negative")
    if cfg["integrator"] not in ("ie", "bdf2"):
        bad("integrator must be 'ie' or 'bdf2'")
    if cfg["problem"] not in _PROBLEMS:
        bad(f"problem must be one of {_PROBLEMS}")
    if not isinstance(cfg["problem_args"], dict):
        bad("problem_args must be an object")
    if cfg["variant"] not in _SET_CHOICES:
        bad(f"variant must be one of {_SET_CHOICES}")
    if cfg["x"] not in ("L2", "H1"):
        bad("x must be 'L2' or 'H1'")
    if cfg["r"] is not None and cfg["threshold"] is not None:
        bad("give at most one of r and threshold")
    if cfg["r"] is not None and cfg["r"] < 1:
        bad("r must be >= 1")
    if cfg["tau"] is not None and not cfg["tau"] > 0:
        bad("tau must be positive")
    if cfg["mode"] not in ("space", "time"):
        bad("mode must be 'space' or 'time'")
    for key in ("levels", "dts"):
        seq = cfg[key]
        if not (isinstance(seq, list) and len(seq) >= 2):
            bad(f"{key} must list at least two values")
    if not (isinstance(cfg["rom_r_max"], int) and cfg["rom_r_max"] >= 1):
        bad("rom_r_max must be a positive integer")


def _output_root():
    return os.environ.get("PODNS_OUTPUT_ROOT", "podns_out")


def _resolve_out(cfg, default_name):
    return cfg["out"] if cfg["out"] else os.path.join(_output_root(), default_name)


# -- shared builders -------------------------------------------------


def _build_space(cfg):
    mesh = build_rect_mesh(cfg["nx"], cfg["ny"])
    return mesh, build_taylor_hood(mesh, cfg["degree"])


def _build_problem(cfg):
    if cfg["problem"] == "none":
        return None
    return get_problem(cfg["problem"], cfg["nu"], **cfg["problem_args"])


def _fom_config(cfg):
    return FomConfig(
        nu=cfg["nu"],
        dt=cfg["dt"],
        t_end=cfg["t_end"],
        mu=cfg["mu"],
        integrator=cfg["integrator"],
    )


def _load_traj(path):
    meta_path = os.path.join(path, "meta.json")
    if not os.path.isfile(meta_path):
        raise UsageError(f"no trajectory at {path} (missing meta.json)")
    with open(meta_path) as fh:
        meta = json.load(fh)
    mesh_dir = os.path.join(path, "mesh")
    if os.path.isdir(mesh_dir):
        mesh = read_mesh(mesh_dir)
    elif "nx" in meta and "ny" in meta:
        mesh = build_rect_mesh(meta["nx"], meta["ny"])
    else:
        raise UsageError(f"trajectory {path} records no mesh")
    space = build_taylor_hood(mesh, meta.get("degree", 2))
    return Trajectory.load(path, space)


def _load_basis(path, ops):
    meta_path = os.path.join(path, "meta.json")
    if not os.path.isfile(meta_path):
        raise UsageError(f"no basis at {path} (missing meta.json)")
    with open(meta_path) as fh:
        meta = json.load(fh)
    inner = InnerProduct.from_operators(ops, meta["x_tag"])
    return PodBasis.load(path, inner)


def _build_set(traj, variant, tau):
    if variant == "mean_fluctuations":
        snap = build_snapshot_set(fluctuation_trajectory(traj), "mean_plus_derivatives", tau)
        snap.variant = "mean_fluctuations"
        snap.meta["applied_to"] = "fluctuations"
        return snap
    return build_snapshot_set(traj, variant, tau)


def _final_time_errors(traj, problem):
    """Quadrature L2/H1 errors of the last stored level against the
    exact manufactured velocity."""
    t = float(traj.times[-1])
    return exact_error_norms(traj.space, traj.velocities[:, -1], problem, t)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (str, int)) else _FMT % v for v in row])


# -- fom run ---------------------------------------------------------


def cmd_fom_run(cfg, explicit, args):
    mesh, space = _build_space(cfg)
    ops = assemble_operators(space)
    problem = _build_problem(cfg)
    fomcfg = _fom_config(cfg)
    traj = run_fom(space, fomcfg, problem, ops)
    traj.meta.update(
        {
            "nx": cfg["nx"],
            "ny": cfg["ny"],
            "degree": cfg["degree"],
            "problem": cfg["problem"],
            "problem_args": cfg["problem_args"],
            "nu": cfg["nu"],
            "mu": cfg["mu"],
            "dt": cfg["dt"],
            "t_end": cfg["t_end"],
            "integrator": cfg["integrator"],
        }
    )
    out = _resolve_out(cfg, "fom")
    traj.save(out)
    write_mesh(mesh, os.path.join(out, "mesh"))
    print(
        f"wrote trajectory {out}: {space.velocity.num_dofs} velocity DOFs, "
        f"{fomcfg.num_steps} steps of {_FMT % cfg['dt']}"
    )
    if problem is not None:
        e2, e1 = _final_time_errors(traj, problem)
        print(f"final-time error vs exact solution: L2 {_FMT % e2}  H1 {_FMT % e1}")
    return 0


# -- pod build -------------------------------------------------------


def cmd_pod_build(cfg, explicit, args):
    traj = _load_traj(args.traj)
    snap = _build_set(traj, cfg["variant"], cfg["tau"])
    ops = assemble_operators(traj.space)
    inner = InnerProduct.from_operators(ops, cfg["x"])
    basis = compute_pod_basis(snap, inner, r=cfg["r"], threshold=cfg["threshold"])
    out = _resolve_out(cfg, "basis")
    basis.save(out)
    write_singular_values_csv(basis, os.path.join(out, "singular_values.csv"))
    print(
        f"wrote basis {out}: r={basis.r} of d_v={basis.d_v}, X={basis.x_tag}, "
        f"variant={basis.variant}"
    )
    return 0


# -- rom run ---------------------------------------------------------


def cmd_rom_run(cfg, explicit, args):
    traj = _load_traj(args.traj)
    ops = assemble_operators(traj.space)
    basis = _load_basis(args.basis, ops)
    # unset time stepping / physics keys inherit the trajectory's values
    run_cfg = dict(cfg)
    for key in ("nu", "mu", "dt", "t_end", "integrator", "problem", "problem_args"):
        if key not in explicit and key in traj.meta:
            run_cfg[key] = traj.meta[key]
    problem = _build_problem(run_cfg)
    romcfg = RomConfig(
        nu=run_cfg["nu"],
        dt=run_cfg["dt"],
        t_end=run_cfg["t_end"],
        mu=run_cfg["mu"],
        integrator=run_cfg["integrator"],
    )
    rops = build_rom_operators(
        basis, ops, forcing=None if problem is None else problem.forcing
    )
    a0 = initial_coordinates(basis, traj.velocities[:, 0])
    romtraj = run_rom(rops, romcfg, a0)
    out = _resolve_out(cfg, "rom")
    os.makedirs(out, exist_ok=True)
    romtraj.save_csv(os.path.join(out, "coords.csv"))
    print(f"wrote reduced trajectory {out}: r={basis.r}, {romcfg.num_steps} steps")
    if len(romtraj.times) == len(traj.times) and np.allclose(
        romtraj.times, traj.times
    ):
        norms = compute_error_norms(romtraj.lift(), traj.velocities, ops, dt=romcfg.dt)
        rows = [
            (j, romtraj.times[j], norms["l2_abs"][j], norms["h1_abs"][j])
            for j in range(len(romtraj.times))
        ]
        _write_csv(
            os.path.join(out, "errors.csv"),
            ["time_index", "t", "error_L2", "error_H1"],
            rows,
        )
        print(
            f"accumulated L2 error vs source trajectory: "
            f"{_FMT % norms['l2_accumulated']}"
        )
    return 0


# -- study convergence -----------------------------------------------


def _space_study(cfg):
    problem_cfg = dict(cfg)
    rows, errs2, errs1, hs = [], [], [], []
    for nx in cfg["levels"]:
        if not (isinstance(nx, int) and nx >= 1):
            raise UsageError("levels must be positive integers (cells per side)")
        mesh = build_rect_mesh(nx, nx)
        space = build_taylor_hood(mesh, cfg["degree"])
        ops = assemble_operators(space)
        problem = _build_problem(problem_cfg)
        traj = run_fom(space, _fom_config(cfg), problem, ops)
        e2, e1 = _final_time_errors(traj, problem)
        hs.append(mesh.h_max)
        errs2.append(e2)
        errs1.append(e1)
        print(f"level nx={nx}: h={_FMT % mesh.h_max} L2 {_FMT % e2} H1 {_FMT % e1}")
    r2 = convergence_rates(errs2, hs)
    r1 = convergence_rates(errs1, hs)
    for i, nx in enumerate(cfg["levels"]):
        rows.append(
            (
                nx,
                hs[i],
                errs2[i],
                errs1[i],
                None if i == 0 else r2[i - 1],
                None if i == 0 else r1[i - 1],
            )
        )
    return rows


def _time_study(cfg):
    mesh, space = _build_space(cfg)
    ops = assemble_operators(space)
    problem = _build_problem(cfg)
    ref_cfg = FomConfig(
        nu=cfg["nu"],
        dt=cfg["ref_dt"],
        t_end=cfg["t_end"],
        mu=cfg["mu"],
        integrator=cfg["integrator"],
    )
    ref = run_fom(space, ref_cfg, problem, ops)
    u_ref = ref.velocities[:, -1]
    H = ops.h1_full()
    rows, errs2, errs1 = [], [], []
    for dt in cfg["dts"]:
        if not dt > cfg["ref_dt"]:
            raise UsageError("every studied dt must exceed ref_dt")
        run_cfg = FomConfig(
            nu=cfg["nu"], dt=dt, t_end=cfg["t_end"], mu=cfg["mu"],
            integrator=cfg["integrator"],
        )
        traj = run_fom(space, run_cfg, problem, ops)
        d = traj.velocities[:, -1] - u_ref
        e2 = float(np.sqrt(max(d @ (ops.M @ d), 0.0)))
        e1 = float(np.sqrt(max(d @ (H @ d), 0.0)))
        errs2.append(e2)
        errs1.append(e1)
        print(f"dt={_FMT % dt}: L2 {_FMT % e2} H1 {_FMT % e1}")
    r2 = convergence_rates(errs2, cfg["dts"])
    r1 = convergence_rates(errs1, cfg["dts"])
    for i, dt in enumerate(cfg["dts"]):
        rows.append(
            (
                i,
                dt,
                errs2[i],
                errs1[i],
                None if i == 0 else r2[i - 1],
                None if i == 0 else r1[i - 1],
            )
        )
    return rows


def cmd_study_convergence(cfg, explicit, args):
    if cfg["problem"] == "none":
        raise UsageError("study convergence needs a manufactured problem")
    rows = _space_study(cfg) if cfg["mode"] == "space" else _time_study(cfg)
    out = _resolve_out(cfg, "convergence")
    os.makedirs(out, exist_ok=True)
    write_rates_csv(rows, os.path.join(out, "rates.csv"))
    rates = [row[4] for row in rows[1:]]
    print(f"wrote {os.path.join(out, 'rates.csv')}; L2 rates: "
          + " ".join("saturated" if v is None else "%.3f" % v for v in rates))
    return 0


# -- study compare-sets ----------------------------------------------

# spectrum/projection curves: the classic data-set comparison
_COMPARE_CURVE_VARIANTS = (
    "fluctuations",
    "initial_plus_derivatives",
    "difference_quotients",
)
# reduced-model error curves: only sets whose span can carry the full
# velocity; a plain fluctuation span drops the mean component
_COMPARE_ROM_VARIANTS = (
    "initial_plus_derivatives",
    "difference_quotients",
    "mean_fluctuations",
)
_COMPARE_ALL = _COMPARE_CURVE_VARIANTS + ("mean_fluctuations",)


def cmd_study_compare_sets(cfg, explicit, args):
    if cfg["problem"] == "none":
        raise UsageError("study compare-sets needs a manufactured problem")
    if "problem" not in explicit:
        # data-set comparisons presume an orbit-like trajectory where
        # fluctuations dominate; the decaying default is mean-dominated
        cfg = dict(cfg)
        cfg["problem"] = "oscillating_vortex"
    mesh, space = _build_space(cfg)
    ops = assemble_operators(space)
    problem = _build_problem(cfg)
    fomcfg = _fom_config(cfg)
    traj = run_fom(space, fomcfg, problem, ops)
    U = traj.velocities
    dt = cfg["dt"]
    n_levels = U.shape[1]
    out = _resolve_out(cfg, "compare_sets")
    romcfg = RomConfig(
        nu=cfg["nu"], dt=dt, t_end=cfg["t_end"], mu=cfg["mu"],
        integrator=cfg["integrator"],
    )
    for x in ("L2", "H1"):
        inner = InnerProduct.from_operators(ops, x)
        xdir = os.path.join(out, f"X_{x}")
        os.makedirs(xdir, exist_ok=True)
        sv_rows, pe_rows, re_rows = [], [], []
        for variant in _COMPARE_ALL:
            snap = _build_set(traj, variant, cfg["tau"])
            basis = compute_pod_basis(snap, inner, threshold=0.0)
            if variant in _COMPARE_CURVE_VARIANTS:
                sigma, sigma_rel = basis.singular_values()
                sv_rows += [
                    (variant, k + 1, sigma[k], sigma_rel[k])
                    for k in range(basis.d_v)
                ]
                # projection error of the raw velocity levels per rank
                coords, _ = project_series(basis, U)
                total = float(np.einsum("ij,ij->", U, inner.operator @ U))
                captured = np.cumsum(np.sum(coords**2, axis=1))
                for r in range(1, basis.d_v + 1):
                    pe_rows.append(
                        (variant, r,
                         np.sqrt(max(total - captured[r - 1], 0.0) / n_levels))
                    )
            if variant not in _COMPARE_ROM_VARIANTS:
                continue
            rops_full = build_rom_operators(basis, ops, forcing=problem.forcing)
            for r in range(1, min(cfg["rom_r_max"], basis.d_v) + 1):
                rops = slice_rom_operators(rops_full, r)
                a0 = initial_coordinates(rops.basis, U[:, 0])
                romtraj = run_rom(rops, romcfg, a0)
                diff = romtraj.lift() - U
                acc = dt * float(np.einsum("ij,ij->", diff, ops.M @ diff))
                re_rows.append((variant, r, np.sqrt(acc)))
        _write_csv(
            os.path.join(xdir, "singular_values.csv"),
            ["variant", "k", "sigma_k", "sigma_rel"],
            sv_rows,
        )
        _write_csv(
            os.path.join(xdir, "projection_errors.csv"),
            ["variant", "r", "error"],
            pe_rows,
        )
        _write_csv(
            os.path.join(xdir, "rom_errors.csv"),
            ["variant", "r", "error"],
            re_rows,
        )
        print(f"X={x}: wrote {xdir} ({len(sv_rows)} singular values, "
              f"{len(re_rows)} ROM runs)")
    return 0


# -- check invariants ------------------------------------------------


def _orthonormality_rows(basis, inner, label):
    Phi = basis.vectors
    G = Phi.T @ (inner.operator @ Phi)
    dev = float(np.max(np.abs(G - np.eye(basis.r))))
    tol = 1e-8
    return [(f"orthonormality:{label}", -1, dev, tol, tol - dev, dev < tol)]


def _tail_rows(basis, snap, inner, label):
    Y = snap.members
    coords, _ = project_series(basis, Y)
    ysq = np.einsum("ij,ij->j", Y, inner.operator @ Y)
    total = float(np.sum(ysq)) / snap.count
    captured = np.cumsum(np.sum(coords**2, axis=1)) / snap.count
    worst = 0.0
    for r in range(1, basis.d_v + 1):
        mse = max(total - captured[r - 1], 0.0)
        worst = max(worst, abs(mse - basis.tail_sum(r)))
    tol = 1e-8 * max(total, 1e-300)
    return [(f"tail_identity:{label}", -1, worst, tol, tol - worst, worst < tol)]


def _gram_rows(basis, ops, label):
    Mv, Sv, inv_m_norm, s_norm = pod_gram_matrices(basis, ops.M, ops.A)
    target = Mv if basis.x_tag == "L2" else Sv
    dev = float(np.max(np.abs(target - np.eye(basis.r))))
    tol = 1e-8
    name = "Mv" if basis.x_tag == "L2" else "Sv"
    rows = [(f"gram_identity_{name}:{label}", -1, dev, tol, tol - dev, dev < tol)]
    return rows, inv_m_norm, s_norm


def _inverse_inequality_rows(basis, ops, inv_m_norm, s_norm, rng, label, n_samples=200):
    Phi = basis.vectors
    C = rng.standard_normal((basis.r, n_samples))
    V = Phi @ C
    grad_sq = np.einsum("ij,ij->j", V, ops.A @ V)
    mass_sq = np.einsum("ij,ij->j", V, ops.M @ V)
    factor = inv_m_norm if basis.x_tag == "H1" else s_norm
    lhs = np.sqrt(np.maximum(grad_sq, 0.0))
    rhs = np.sqrt(factor * np.maximum(mass_sq, 0.0))
    margins = rhs - lhs
    j = int(np.argmin(margins))
    return [
        (
            f"inverse_inequality:{label}",
            j,
            float(lhs[j]),
            float(rhs[j]),
            float(margins[j]),
            bool(margins[j] >= 0.0),
        )
    ]


def _pointwise_rows(basis, traj, inner, dt, label):
    anchor = "initial" if basis.variant == "initial_plus_derivatives" else "mean"
    U = traj.velocities
    W = traj.derivatives[:, 1:]
    _, pu = project_series(basis, U)
    _, pw = project_series(basis, W)
    lhs, rhs, margin = pointwise_bound_check(U - pu, W - pw, inner, anchor, dt)
    tol = 1e-8 * rhs
    return [(f"pointwise_bound:{label}", -1, lhs, rhs, margin, margin >= -tol)]


def _tail_consistency_rows(basis, traj, inner, dt, label):
    anchor = "initial" if basis.variant == "initial_plus_derivatives" else "mean"
    U = traj.velocities
    _, pu = project_series(basis, U)
    E = U - pu
    err_sq = np.einsum("ij,ij->j", E, inner.operator @ E)
    T = float(traj.times[-1] - traj.times[0])
    mean_err = dt * float(np.sum(err_sq[1:])) / T
    itt = series_second_derivative_integral(U, dt, inner.operator)
    bound = tail_bound(basis, basis.r, T, dt, itt, anchor)
    return [
        (
            f"tail_consistency:{label}",
            -1,
            mean_err,
            bound,
            bound - mean_err,
            mean_err <= bound,
        )
    ]


def cmd_check_invariants(cfg, explicit, args):
    traj = _load_traj(args.traj)
    ops = assemble_operators(traj.space)
    rng = np.random.default_rng(cfg["seed"])
    dt = float(traj.times[1] - traj.times[0]) if len(traj.times) > 1 else 0.0
    rows = []
    for x in ("L2", "H1"):
        inner = InnerProduct.from_operators(ops, x)
        for variant in VARIANTS:
            needs_rate = variant in (
                "initial_plus_derivatives",
                "mean_plus_derivatives",
            )
            if needs_rate and traj.derivatives is None:
                continue
            snap = build_snapshot_set(traj, variant, cfg["tau"])
            label = f"{x}:{variant}"
            try:
                full = compute_pod_basis(snap, inner, threshold=0.0)
            except ValueError:
                print(f"skipping {label}: snapshot set is numerically zero")
                continue
            rows += _orthonormality_rows(full, inner, label)
            rows += _tail_rows(full, snap, inner, label)
            r_check = cfg["r"] if cfg["r"] else full.r
            basis = compute_pod_basis(snap, inner, r=min(r_check, full.d_v))
            gram, inv_m_norm, s_norm = _gram_rows(basis, ops, label)
            rows += gram
            rows += _inverse_inequality_rows(
                basis, ops, inv_m_norm, s_norm, rng, label
            )
            if needs_rate and len(traj.times) >= 3:
                rows += _pointwise_rows(basis, traj, inner, dt, label)
                rows += _tail_consistency_rows(basis, traj, inner, dt, label)
    out = _resolve_out(cfg, "checks")
    os.makedirs(out, exist_ok=True)
    write_report_csv(rows, os.path.join(out, "report.csv"))
    failed = [row for row in rows if not row[5]]
    print(f"wrote {os.path.join(out, 'report.csv')}: {len(rows)} checks, "
          f"{len(failed)} failed")
    for row in failed:
        print(f"FAILED {row[0]}: lhs={_FMT % row[2]} rhs={_FMT % row[3]}")
    return 0 if not failed else 2


# -- report ----------------------------------------------------------


def cmd_report(cfg, explicit, args):
    traj = _load_traj(args.traj)
    ops = assemble_operators(traj.space)
    basis = _load_basis(args.basis, ops)
    mu = traj.meta.get("mu", cfg["mu"])
    dt = float(traj.times[1] - traj.times[0])
    _, proj = project_series(basis, traj.velocities)
    rep = constants_report(proj, traj.space, ops, mu, dt)
    nan = float("nan")
    rows = [
        ("constant:C_inf", -1, rep.c_inf, nan, nan, True),
        ("constant:C_1_inf", -1, rep.c_1_inf, nan, nan, True),
        ("constant:C_ld", -1, rep.c_ld, nan, nan, True),
        ("constant:K_inf", -1, rep.k_inf, nan, nan, True),
        ("constant:K_1_inf", -1, rep.k_1_inf, nan, nan, True),
        ("constant:C_u", -1, rep.c_u, nan, nan, True),
        (
            "time_step_condition",
            -1,
            rep.time_step_value,
            0.5,
            0.5 - rep.time_step_value,
            rep.time_step_ok,
        ),
    ]
    if (
        basis.variant in ("initial_plus_derivatives", "mean_plus_derivatives")
        and traj.derivatives is not None
        and len(traj.times) >= 3
    ):
        label = f"{basis.x_tag}:{basis.variant}"
        rows += _pointwise_rows(basis, traj, basis.inner, dt, label)
        rows += _tail_consistency_rows(basis, traj, basis.inner, dt, label)
    if args.rom:
        lifted = basis.vectors @ _read_coords_csv(args.rom, basis.r)
        if lifted.shape[1] == len(traj.times):
            norms = compute_error_norms(lifted, traj.velocities, ops, dt=dt)
            rows.append(
                (
                    "rom_accumulated_L2",
                    -1,
                    norms["l2_accumulated"],
                    nan,
                    nan,
                    True,
                )
            )
    out = _resolve_out(cfg, "report")
    os.makedirs(out, exist_ok=True)
    write_report_csv(rows, os.path.join(out, "report.csv"))
    for name, val in [
        ("C_inf", rep.c_inf),
        ("C_1_inf", rep.c_1_inf),
        ("C_ld", rep.c_ld),
        ("K_inf", rep.k_inf),
        ("K_1_inf", rep.k_1_inf),
        ("C_u", rep.c_u),
        ("time_step_condition", rep.time_step_value),
    ]:
        print(f"{name} = {_FMT % val}")
    if not rep.time_step_ok:
        print("warning: time step condition value exceeds 1/2")
    print(f"wrote {os.path.join(out, 'report.csv')}")
    return 0


def _read_coords_csv(path, r):
    coords_path = path if path.endswith(".csv") else os.path.join(path, "coords.csv")
    if not os.path.isfile(coords_path):
        raise UsageError(f"no reduced coordinates at {coords_path}")
    with open(coords_path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) != r + 1:
        raise UsageError(
            f"{coords_path} holds {len(rows[0]) - 1 if rows else 0} coordinates, "
            f"basis has r={r}"
        )
    data = np.array([[float(v) for v in row[1:]] for row in rows[1:]])
    return data.T


# -- parser ----------------------------------------------------------


def _common_parser():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="seed for randomized checks")
    p.add_argument("--nx", type=int, help="cells along x")
    p.add_argument("--ny", type=int, help="cells along y")
    p.add_argument("--degree", type=int, choices=(2, 3), help="velocity degree l")
    p.add_argument("--nu", type=float, help="kinematic viscosity")
    p.add_argument("--mu", type=float, help="grad-div parameter")
    p.add_argument("--dt", type=float, help="time step")
    p.add_argument("--t-end", type=float, dest="t_end", help="final time")
    p.add_argument("--integrator", choices=("ie", "bdf2"))
    p.add_argument("--problem", choices=_PROBLEMS)
    p.add_argument("--variant", choices=_SET_CHOICES, help="snapshot set")
    p.add_argument("--tau", type=float, help="derivative time scale")
    p.add_argument("--x", choices=("L2", "H1"), help="inner product")
    p.add_argument("--r", type=int, help="retained POD rank")
    p.add_argument("--threshold", type=float, help="relative singular value cut")
    p.add_argument("--mode", choices=("space", "time"), help="refinement axis")
    p.add_argument("--rom-r-max", type=int, dest="rom_r_max",
                   help="largest ROM rank in sweeps")
    return p


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="podns",
        description="POD-ROM pipeline for grad-div stabilized Navier-Stokes",
    )
    sub = parser.add_subparsers(dest="group", metavar="command")

    fom = sub.add_parser("fom", help="full-order model")
    fom_sub = fom.add_subparsers(dest="action", metavar="action")
    p = fom_sub.add_parser("run", parents=[common], help="solve and store a trajectory")
    p.set_defaults(func=cmd_fom_run)

    pod = sub.add_parser("pod", help="proper orthogonal decomposition")
    pod_sub = pod.add_subparsers(dest="action", metavar="action")
    p = pod_sub.add_parser("build", parents=[common], help="build a basis")
    p.add_argument("--traj", required=True, help="trajectory directory")
    p.set_defaults(func=cmd_pod_build)

    rom = sub.add_parser("rom", help="reduced-order model")
    rom_sub = rom.add_subparsers(dest="action", metavar="action")
    p = rom_sub.add_parser("run", parents=[common], help="march the reduced model")
    p.add_argument("--traj", required=True, help="source trajectory directory")
    p.add_argument("--basis", required=True, help="basis directory")
    p.set_defaults(func=cmd_rom_run)

    study = sub.add_parser("study", help="sweeps and comparisons")
    study_sub = study.add_subparsers(dest="action", metavar="action")
    p = study_sub.add_parser(
        "convergence", parents=[common], help="refinement study -> rates.csv"
    )
    p.set_defaults(func=cmd_study_convergence)
    p = study_sub.add_parser(
        "compare-sets", parents=[common], help="snapshot set comparison"
    )
    p.set_defaults(func=cmd_study_compare_sets)

    check = sub.add_parser("check", help="verification")
    check_sub = check.add_subparsers(dest="action", metavar="action")
    p = check_sub.add_parser(
        "invariants", parents=[common], help="identity and inequality checks"
    )
    p.add_argument("--traj", required=True, help="trajectory directory")
    p.set_defaults(func=cmd_check_invariants)

    p = sub.add_parser("report", parents=[common], help="constants and error report")
    p.add_argument("--traj", required=True, help="trajectory directory")
    p.add_argument("--basis", required=True, help="basis directory")
    p.add_argument("--rom", help="reduced run directory or coords.csv")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        return 0 if code == 0 else 1
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 1
    try:
        cfg, explicit = merged_config(args)
        return args.func(cfg, explicit, args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NewtonError, RomNewtonError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
