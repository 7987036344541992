"""End-to-end tests of the command line driver (in-process)."""

import csv
import filecmp
import json
import os

import numpy as np
import pytest

import podns.cli as cli
from podns.fom_solver import NewtonError

TINY = ["--nx", "3", "--ny", "3", "--dt", "0.125", "--t-end", "0.25"]


def run_cli(*argv):
    return cli.main(list(argv))


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# -- argument handling -----------------------------------------------


def test_no_command_is_usage_error(capsys):
    assert run_cli() == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_command_is_usage_error(capsys):
    assert run_cli("frobnicate") == 1


def test_help_exits_zero(capsys):
    assert run_cli("--help") == 0
    assert "fom" in capsys.readouterr().out


def test_bad_flag_value(capsys):
    assert run_cli("fom", "run", "--degree", "7") == 1


def test_invalid_dt_rejected(capsys):
    assert run_cli("fom", "run", "--dt", "-0.5") == 1
    assert "invalid config" in capsys.readouterr().err


def test_t_end_not_multiple_of_dt(tmp_path, capsys):
    out = tmp_path / "x"
    code = run_cli("fom", "run", "--nx", "2", "--ny", "2",
                   "--dt", "0.15", "--t-end", "0.25", "--out", str(out))
    assert code == 1


# -- config file handling --------------------------------------------


def test_config_file_applies_and_flags_win(tmp_path, capsys):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps(
        {"nx": 3, "ny": 3, "dt": 0.125, "t_end": 0.25, "nu": 0.02}
    ))
    out = tmp_path / "run"
    code = run_cli("fom", "run", "--config", str(cfgfile),
                   "--nx", "2", "--out", str(out))
    assert code == 0
    meta = json.loads((out / "meta.json").read_text())
    assert meta["nx"] == 2        # flag overrides file
    assert meta["ny"] == 3        # file overrides default
    assert meta["nu"] == 0.02


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({"nx": 2, "banana": 1}))
    assert run_cli("fom", "run", "--config", str(cfgfile)) == 1
    assert "banana" in capsys.readouterr().err


def test_malformed_config_rejected(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli("fom", "run", "--config", str(bad)) == 1
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    assert run_cli("fom", "run", "--config", str(arr)) == 1
    assert run_cli("fom", "run", "--config", str(tmp_path / "nope.json")) == 1


# -- fom run ---------------------------------------------------------


def test_fom_unforced_run_is_zero(tmp_path, capsys):
    out = tmp_path / "zero"
    code = run_cli("fom", "run", *TINY, "--problem", "none",
                   "--out", str(out))
    assert code == 0
    from podns.fe_space import build_taylor_hood
    from podns.fom_solver import Trajectory
    from podns.mesh import read_mesh

    space = build_taylor_hood(read_mesh(out / "mesh"), 2)
    traj = Trajectory.load(out, space)
    assert np.all(traj.velocities == 0.0)
    assert traj.times.shape == (3,)


def test_fom_run_prints_exact_errors(tmp_path, capsys):
    out = tmp_path / "run"
    code = run_cli("fom", "run", *TINY, "--problem", "decaying_vortex",
                   "--out", str(out))
    assert code == 0
    text = capsys.readouterr().out
    assert "final-time error vs exact solution" in text


def test_reruns_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run_cli("fom", "run", *TINY, "--problem", "decaying_vortex",
                       "--out", str(out)) == 0
    names = sorted(
        os.path.relpath(os.path.join(root, f), a)
        for root, _, files in os.walk(a) for f in files
    )
    assert names
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert mismatch == [] and errors == []


def test_output_root_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("PODNS_OUTPUT_ROOT", str(tmp_path / "root"))
    monkeypatch.chdir(tmp_path)
    assert run_cli("fom", "run", *TINY, "--problem", "none") == 0
    assert (tmp_path / "root" / "fom" / "meta.json").is_file()


def test_newton_failure_exit_code(tmp_path, monkeypatch, capsys):
    def explode(space, config, problem=None, operators=None):
        raise NewtonError(3, 25, 1.7e2)

    monkeypatch.setattr(cli, "run_fom", explode)
    code = run_cli("fom", "run", *TINY, "--out", str(tmp_path / "x"))
    assert code == 2
    assert "numerical failure" in capsys.readouterr().err


# -- pipeline: pod build, rom run, check, report ---------------------


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One tiny trajectory, basis and reduced run shared by the tests."""
    root = tmp_path_factory.mktemp("pipeline")
    traj = root / "traj"
    basis = root / "basis"
    rom = root / "rom"
    assert cli.main(["fom", "run", *TINY, "--problem", "decaying_vortex",
                     "--out", str(traj)]) == 0
    assert cli.main(["pod", "build", "--traj", str(traj), "--r", "2",
                     "--out", str(basis)]) == 0
    assert cli.main(["rom", "run", "--traj", str(traj), "--basis", str(basis),
                     "--out", str(rom)]) == 0
    return root


def test_pod_build_outputs(pipeline):
    basis = pipeline / "basis"
    meta = json.loads((basis / "meta.json").read_text())
    assert meta["r"] == 2
    assert meta["x_tag"] == "L2"
    sv = read_csv(basis / "singular_values.csv")
    assert sv[0] == ["k", "sigma_k", "sigma_rel"]
    assert len(sv) - 1 == meta["d_v"]


def test_rom_run_outputs(pipeline):
    rom = pipeline / "rom"
    coords = read_csv(rom / "coords.csv")
    assert coords[0] == ["t", "a_1", "a_2"]
    assert len(coords) - 1 == 3
    errors = read_csv(rom / "errors.csv")
    assert errors[0] == ["time_index", "t", "error_L2", "error_H1"]
    assert len(errors) - 1 == 3
    # reduced start point reproduces the projected initial condition,
    # so the first-level error is well below later ones
    assert float(errors[1][2]) <= float(errors[3][2]) + 1e-12


def test_check_invariants_passes(pipeline, tmp_path, capsys):
    out = tmp_path / "checks"
    code = cli.main(["check", "invariants", "--traj", str(pipeline / "traj"),
                     "--out", str(out)])
    assert code == 0
    report = read_csv(out / "report.csv")
    assert report[0] == ["check_id", "time_index", "lhs", "rhs", "margin", "pass"]
    assert len(report) > 10
    assert all(row[5] == "true" for row in report[1:])


def test_check_invariants_missing_traj(tmp_path, capsys):
    assert cli.main(["check", "invariants", "--traj", str(tmp_path / "no")]) == 1


def test_report_outputs(pipeline, tmp_path, capsys):
    out = tmp_path / "report"
    code = cli.main(["report", "--traj", str(pipeline / "traj"),
                     "--basis", str(pipeline / "basis"),
                     "--rom", str(pipeline / "rom"), "--out", str(out)])
    assert code == 0
    assert (out / "constants.csv").is_file() or (out / "report.csv").is_file()


def test_rom_rejects_mismatched_basis(pipeline, tmp_path, capsys):
    # basis built on the 3x3 trajectory cannot drive a 2x2 one
    other = tmp_path / "other"
    assert cli.main(["fom", "run", "--nx", "2", "--ny", "2", "--dt", "0.125",
                     "--t-end", "0.25", "--problem", "decaying_vortex",
                     "--out", str(other)]) == 0
    code = cli.main(["rom", "run", "--traj", str(other),
                     "--basis", str(pipeline / "basis"),
                     "--out", str(tmp_path / "r")])
    assert code == 1


# -- studies ---------------------------------------------------------


def test_convergence_space_smoke(tmp_path, capsys):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({"levels": [2, 4]}))
    out = tmp_path / "space"
    code = run_cli("study", "convergence", "--config", str(cfgfile),
                   "--mode", "space", "--problem", "taylor_green",
                   "--dt", "0.125", "--t-end", "0.25", "--out", str(out))
    assert code == 0
    rows = read_csv(out / "rates.csv")
    assert rows[0][0] == "level"
    assert len(rows) - 1 == 2
    assert rows[1][4] == ""          # no rate at the first level
    assert float(rows[2][4]) > 0.0   # refinement reduces the error


def test_convergence_time_smoke(tmp_path, capsys):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps(
        {"dts": [0.25, 0.125], "ref_dt": 0.03125, "nx": 2, "ny": 2}
    ))
    out = tmp_path / "time"
    code = run_cli("study", "convergence", "--config", str(cfgfile),
                   "--mode", "time", "--problem", "decaying_vortex",
                   "--t-end", "0.5", "--out", str(out))
    assert code == 0
    rows = read_csv(out / "rates.csv")
    assert len(rows) - 1 == 2
    assert float(rows[1][2]) > float(rows[2][2])


def test_compare_sets_smoke(tmp_path, capsys):
    out = tmp_path / "cmp"
    code = run_cli("study", "compare-sets", *TINY, "--rom-r-max", "2",
                   "--out", str(out))
    assert code == 0
    for x in ("L2", "H1"):
        xdir = out / f"X_{x}"
        sv = read_csv(xdir / "singular_values.csv")
        curves = {row[0] for row in sv[1:]}
        assert curves == {"fluctuations", "initial_plus_derivatives",
                          "difference_quotients"}
        rom = read_csv(xdir / "rom_errors.csv")
        rom_variants = {row[0] for row in rom[1:]}
        assert rom_variants == {"initial_plus_derivatives",
                                "difference_quotients", "mean_fluctuations"}
        pe = read_csv(xdir / "projection_errors.csv")
        assert {row[0] for row in pe[1:]} == curves
        # per-curve row count equals that curve's d_v
        for variant in curves:
            ks = [int(row[1]) for row in sv[1:] if row[0] == variant]
            rs = [int(row[1]) for row in pe[1:] if row[0] == variant]
            assert ks == list(range(1, len(ks) + 1))
            assert rs == list(range(1, len(rs) + 1))
            assert len(ks) == len(rs)


def test_compare_sets_rejects_unforced(capsys):
    assert run_cli("study", "compare-sets", "--problem", "none") == 1
