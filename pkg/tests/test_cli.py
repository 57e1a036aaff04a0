import json
import math

import numpy as np
import pytest

from nlparax import Axis, Field, Frame, Grid, read_paf, write_paf
from nlparax.cli import main

COEFF = {"c": 1.0, "rho0": 1.0, "gamma": 1.4, "nu": 0.3, "eps": 0.01}


def _write(tmp_path, name, payload):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


def _solve_cfg(tmp_path, **solve_extra):
    solve = {
        "model": "kzk",
        "coeff": COEFF,
        "grid": {"frame": "kzk",
                 "axes": [{"name": "tau", "length": 2 * math.pi, "points": 64},
                          {"name": "y1", "length": 2 * math.pi, "points": 16,
                           "origin": -math.pi}]},
        "initial": {"preset": "gaussian_beam"},
        "span": 0.5, "step": 0.005, "samples": 3,
    }
    solve.update(solve_extra)
    return _write(tmp_path, "solve.json",
                  {"schema_version": 1, "solve": solve})


def test_solve_writes_artifacts(tmp_path):
    cfg = _solve_cfg(tmp_path)
    out = str(tmp_path / "run")
    assert main(["solve", "--config", cfg, "--out", out]) == 0
    index = json.loads((tmp_path / "run" / "index.json").read_text())
    assert len(index["files"]) == 3
    assert len(index["evol"]) == 3
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert "config_sha256" in manifest
    first = read_paf(tmp_path / "run" / index["files"][0])
    assert first.grid.frame is Frame.KZK
    assert np.isfinite(first.values).all()


def test_solve_dry_run_prints_plan(tmp_path, capsys):
    cfg = _solve_cfg(tmp_path)
    assert main(["solve", "--config", cfg, "--dry-run"]) == 0
    plan = json.loads(capsys.readouterr().out)
    assert plan["model"] == "kzk"


def test_unknown_key_is_named(tmp_path, capsys):
    payload = {"schema_version": 1, "solve": {
        "model": "kzk", "coeff": COEFF,
        "grid": {"axes": [{"name": "tau", "length": 1.0, "points": 16}]},
        "initial": {"preset": "single_mode"},
        "span": 1.0, "step": 0.1, "bogus_key": 3}}
    cfg = _write(tmp_path, "bad.json", payload)
    assert main(["solve", "--config", cfg]) == 1
    assert "bogus_key" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.json")]) == 1


def test_invalid_json(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert main(["solve", "--config", str(p)]) == 1


def test_numerical_failure_exits_2(tmp_path):
    # absurd amplitude and step blow up the march
    cfg = _solve_cfg(tmp_path, step=0.5,
                     initial={"preset": "gaussian_beam",
                              "params": {"amplitude": 1e6}})
    assert main(["solve", "--config", cfg, "--out",
                 str(tmp_path / "boom")]) == 2


def test_residual_csv(tmp_path):
    payload = {"schema_version": 1, "residual": {
        "pair": "kuznetsov-kzk",
        "coeff": {"eps": 0.05, "nu": 0.2},
        "grid": {"frame": "kzk",
                 "axes": [{"name": "tau", "length": 2 * math.pi, "points": 32},
                          {"name": "z", "length": 2.0, "points": 32,
                           "periodic": False},
                          {"name": "y1", "length": 2 * math.pi, "points": 16,
                           "origin": -math.pi}]},
        "initial": {"preset": "gaussian_beam"}}}
    cfg = _write(tmp_path, "res.json", payload)
    out = str(tmp_path / "res")
    assert main(["residual", "--config", cfg, "--out", out]) == 0
    lines = (tmp_path / "res" / "residual.csv").read_text().splitlines()
    assert lines[0] == "pair,term_id,eps_power,l2_norm,linf_norm"
    assert any(row.startswith("kuznetsov-kzk,total-") for row in lines[1:])
    assert len(lines) > 3


def test_sweep_pass_and_artifacts(tmp_path, monkeypatch):
    monkeypatch.setenv("THREADS", "2")
    payload = {"schema_version": 1, "sweep": {
        "name": "mini", "pair": "kuznetsov-westervelt",
        "coeff": COEFF, "eps_list": [0.04, 0.02],
        "horizon": 2.0, "horizon_over_eps": False,
        "points": 32, "samples": 4,
        "preset_params": {"amplitude": 0.3}}}
    cfg = _write(tmp_path, "sweep.json", payload)
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    for name in ("report.json", "errors.csv", "plot.svg", "manifest.json"):
        assert (out / name).exists(), name
    rep = json.loads((out / "report.json").read_text())
    assert all(v["passed"] for v in rep["verdicts"])


def test_sweep_verdict_failure_exits_3(tmp_path):
    # heavy viscosity over an eps-long horizon erodes the eps^2 grading,
    # so the slope floor verdict must fail
    payload = {"schema_version": 1, "sweep": {
        "name": "fail", "pair": "kuznetsov-westervelt",
        "coeff": dict(COEFF, nu=2.0), "eps_list": [0.04, 0.02],
        "horizon": 1.0, "horizon_over_eps": True,
        "points": 32, "samples": 4,
        "preset_params": {"amplitude": 0.5}}}
    cfg = _write(tmp_path, "sweepfail.json", payload)
    assert main(["sweep", "--config", cfg, "--out",
                 str(tmp_path / "sf")]) == 3


def test_compare_does_not_enforce_verdicts(tmp_path):
    payload = {"schema_version": 1, "compare": {
        "name": "cmp", "pair": "kuznetsov-westervelt",
        "coeff": dict(COEFF, nu=2.0), "eps_list": [0.04, 0.02],
        "horizon": 1.0, "horizon_over_eps": True,
        "points": 32, "samples": 4,
        "preset_params": {"amplitude": 0.5}}}
    cfg = _write(tmp_path, "cmp.json", payload)
    assert main(["compare", "--config", cfg, "--out",
                 str(tmp_path / "cmp")]) == 0


def test_transform_round_trip(tmp_path):
    g = Grid((Axis("t", 2 * math.pi, 32), Axis("x2", 4.0, 16)),
             Frame.PHYSICAL)
    T, X = g.mesh()
    f = Field(g, np.sin(T) * np.cos(2 * np.pi * X / 4.0))
    src = str(tmp_path / "phys.paf")
    mid = str(tmp_path / "kzk.paf")
    dst = str(tmp_path / "back.paf")
    write_paf(src, f)
    assert main(["transform", "--from", "physical", "--to", "kzk",
                 "--input", src, "--output", mid, "--eps", "0.01"]) == 0
    assert main(["transform", "--from", "kzk", "--to", "physical",
                 "--input", mid, "--output", dst, "--eps", "0.01"]) == 0
    back = read_paf(dst)
    assert np.abs(back.values - f.values).max() <= 1e-10
    assert back.grid == g


def test_transform_kzk_npe_round_trip(tmp_path):
    g = Grid((Axis("tau", 2 * math.pi, 32), Axis("y1", 2.0, 8)), Frame.KZK)
    T, Y = g.mesh()
    f = Field(g, np.sin(T) * np.cos(np.pi * Y))
    src = str(tmp_path / "k.paf")
    mid = str(tmp_path / "n.paf")
    dst = str(tmp_path / "k2.paf")
    write_paf(src, f)
    assert main(["transform", "--from", "kzk", "--to", "npe",
                 "--input", src, "--output", mid, "--c", "1.3"]) == 0
    assert main(["transform", "--from", "npe", "--to", "kzk",
                 "--input", mid, "--output", dst, "--c", "1.3"]) == 0
    back = read_paf(dst)
    assert np.abs(back.values - f.values).max() <= 1e-10
    # the axis rescaling by c and 1/c may round in the last bit
    for a, b in zip(back.grid.axes, g.grid.axes if hasattr(g, "grid") else g.axes):
        assert a.name == b.name and a.points == b.points
        assert a.length == pytest.approx(b.length, rel=1e-15)


def test_help_and_version_exit_zero(capsys):
    assert main(["--help"]) == 0
    capsys.readouterr()
    assert main(["--version"]) == 0


def test_bad_flag_exits_one():
    assert main(["solve", "--frobnicate"]) == 1
