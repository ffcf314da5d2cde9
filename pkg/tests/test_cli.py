"""CLI plumbing: config round-trip, exit codes, output formats."""

import json
import math

import pytest

from bicons.cli import (RunConfig, emit_config, main, parse_config)
from bicons.errors import DomainError


def test_config_roundtrip():
    cfg = RunConfig(eps=-1, C=0.5, window=(-3.0, 3.0, 0.0, 1.0),
                    grid=(40, 50), tolerances={"codazzi": 1e-6},
                    out="x.csv", fmt="obj", workers=2)
    assert parse_config(emit_config(cfg)) == cfg
    assert parse_config(emit_config(RunConfig())) == RunConfig()


def test_config_validation():
    with pytest.raises(DomainError):
        RunConfig(eps=5)
    with pytest.raises(DomainError):
        RunConfig(grid=(1, 10))
    with pytest.raises(DomainError):
        RunConfig(window=(0.0, math.inf, 0.0, 1.0))
    with pytest.raises(DomainError):
        RunConfig(window=(1.0, 0.0, 0.0, 1.0))
    with pytest.raises(DomainError):
        RunConfig(tolerances={"codazzi": -1.0})
    with pytest.raises(DomainError):
        RunConfig(tolerances={"no_such_check": 1.0})
    with pytest.raises(DomainError):
        RunConfig(fmt="stl")


def test_default_C_per_eps():
    assert RunConfig(eps=1).C_value == 3.0
    assert RunConfig(eps=0).C_value == 1.0
    assert RunConfig(eps=-1).C_value == 0.0
    assert RunConfig(eps=1, C=5.0).C_value == 5.0


def test_roots_exit_codes(capsys):
    assert main(["roots", "--eps", "0", "--C", "4"]) == 0
    out = capsys.readouterr().out
    assert "xi02" in out and "8" in out
    # inadmissible C: exit 2 with the rule printed
    assert main(["roots", "--eps", "1", "--C", "2"]) == 2
    err = capsys.readouterr().err
    assert "C >" in err


def test_bad_tol_flag(capsys):
    assert main(["roots", "--eps", "0", "--tol", "nonsense"]) == 2


def test_profile_csv(tmp_path, capsys):
    out = tmp_path / "p.csv"
    assert main(["profile", "--eps", "1", "--C", "3",
                 "--grid", "40", "8", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "rho,F,Gamma,K,f"
    assert len(rows) == 41
    F = [float(r.split(",")[1]) for r in rows[1:]]
    assert max(F) <= 4.8711581792848 + 1e-10
    assert min(F) >= 1.2844545283264 - 1e-10


def test_glue_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["glue", "--eps", "1", "--grid", "60", "8"]
    assert main(args + ["--out", str(a)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["junction_positions"] == sorted(rep["junction_positions"])
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_verify_pass_and_forced_fail(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert main(["verify", "--eps", "1", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["failures"] == []
    assert "X1 = d/drho" in rep["sign_convention"]
    assert {e["identity"] for e in rep["identities"]} >= {
        "curvature_ode", "laplace_identity", "bicons_pde",
        "first_integral_alpha", "codazzi", "biconservative_tangency"}
    # an impossible tolerance must flip the exit code and name the identity
    assert main(["verify", "--eps", "1", "--out", str(out),
                 "--tol", "biconservative_tangency=1e-30"]) == 1
    rep = json.loads(out.read_text())
    assert rep["failures"] == ["biconservative_tangency"]


def test_config_file_with_flag_override(tmp_path, capsys):
    cfgfile = tmp_path / "c.json"
    cfgfile.write_text(emit_config(RunConfig(eps=1, C=4.0)))
    out = tmp_path / "r.json"
    # flag wins over the file value
    assert main(["roots", "--config", str(cfgfile), "--C", "3",
                 "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["C"] == 3.0 and rep["eps"] == 1


def test_mesh_command(tmp_path, capsys):
    out = tmp_path / "m.obj"
    assert main(["mesh", "--eps", "1", "--grid", "20", "16",
                 "--out", str(out)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["vertices"] == 320
    assert rep["triangles"] == 2 * 19 * 15
    assert out.exists()


def test_immerse_eps0_oracle_report(tmp_path, capsys):
    assert main(["immerse", "--eps", "0", "--grid", "40", "40",
                 "--format", "json", "--out", str(tmp_path / "i.json")]) == 0
    rep = json.loads((tmp_path / "i.json").read_text())
    assert rep["oracle"]["max_aligned_distance"] <= 1e-5


def test_immerse_numerical_failure_exit3(tmp_path, capsys):
    # hyperbolic window deep enough to exhaust the drift budget
    code = main(["immerse", "--eps", "-1", "--format", "json",
                 "--window", "-12", "9", "0", "6.3", "--grid", "30", "80",
                 "--out", str(tmp_path / "x.json")])
    assert code == 3
    assert "numerical failure" in capsys.readouterr().err
