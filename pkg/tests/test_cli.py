import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from magflow.cli import main


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run(tmp_path, command, cfg, out="out", seed=None):
    argv = [command, "--config", write(tmp_path, cfg), "--out", str(tmp_path / out)]
    if seed is not None:
        argv += ["--seed", str(seed)]
    code = main(argv)
    report = tmp_path / out / "report.json"
    return code, (json.loads(report.read_text()) if report.exists() else None)


def test_presets_listing(capsys):
    assert main(["presets"]) == 0
    first = json.loads(capsys.readouterr().out)
    names = [p["name"] for p in first]
    assert "kt_b0" in names and "heisenberg" in names and "abelian" in names
    main(["presets"])
    assert json.loads(capsys.readouterr().out) == first
    assert names == sorted(names)


def test_simulate_kt_b0(tmp_path):
    cfg = {"preset": "kt_b0", "params": {"a": 1, "c": 1, "rho": 1}, "integrator": {"t_end": 2.0, "step": 1e-3}}
    code, report = run(tmp_path, "simulate", cfg)
    assert code == 0 and report["schema"] == 1 and report["case"] == "kt_b0"
    drift = report["checks"]["simulate"]["drift"]
    assert {"E", "I1", "I2", "I3", "I4", "f2", "f3", "f4"} <= set(drift)
    assert max(drift.values()) <= 1e-8
    assert (tmp_path / "out" / "trajectory.csv").exists()
    long_rows = list(csv.reader(open(tmp_path / "out" / "trajectory_long.csv")))
    assert long_rows[0] == ["t", "name", "value"]


def test_abelian_straight_line_csv(tmp_path):
    cfg = {"preset": "abelian", "params": {"n": 3}, "integrator": {"t_end": 1.0, "step": 0.01},
           "initial_state": {"W": [0, 0, 0], "V": [1, 2, -1]}}
    code, _ = run(tmp_path, "simulate", cfg)
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "out" / "trajectory.csv")))
    for row in rows[::10]:
        t = float(row["t"])
        np.testing.assert_allclose([float(row[f"W{i}"]) for i in (1, 2, 3)], [t, 2 * t, -t], atol=1e-12)


def test_invalid_configs_exit_two(tmp_path):
    code, _ = run(tmp_path, "simulate", {"preset": "kt_b0", "integrator": {"step": 0}})
    assert code == 2
    bad_form = {"algebra": {"preset": "h3r"}, "force": {"two_form": [[3, 4, 1]]}, "invariants": ["energy"]}
    assert run(tmp_path, "verify", bad_form)[0] == 2
    assert run(tmp_path, "simulate", {"preset": "nope"})[0] == 2
    (tmp_path / "broken.json").write_text("{not json")
    assert main(["simulate", "--config", str(tmp_path / "broken.json"), "--out", str(tmp_path)]) == 2
    assert main(["simulate"]) == 2


def test_involution_kt_c0(tmp_path):
    code, report = run(tmp_path, "involution", {"preset": "kt_c0", "sampling": {"count": 100}})
    assert code == 0
    assert report["checks"]["involution"]["max"] <= 1e-6


def test_killing_heisenberg(tmp_path):
    s1 = {"degree": 2, "terms": [{"indices": [1, 1], "coeff": 1}, {"indices": [2, 2], "coeff": 1}]}
    cfg = {"preset": "heisenberg", "params": {"n": 2, "k": 0},
           "killing": {"components": [{"degree": 0, "terms": []}, {"degree": 1, "terms": []}, s1]},
           "integrator": {"t_end": 1.0}}
    code, report = run(tmp_path, "killing", cfg)
    assert code == 0 and report["case"] == "heisenberg(2,0)"


def test_lattice_failure_witness(tmp_path):
    cfg = {"preset": "kt_b0", "lattice": {"generators": np.eye(4).astype(int).tolist()}}
    code, report = run(tmp_path, "lattice", cfg)
    assert code == 1
    assert report["checks"]["lattice"]["witness"] == [1, 2]


def test_reports_are_byte_identical(tmp_path):
    cfg = {"preset": "kt_c0", "sampling": {"count": 50}}
    run(tmp_path, "rank", cfg, out="a", seed=7)
    run(tmp_path, "rank", cfg, out="b", seed=7)
    a = (tmp_path / "a" / "report.json").read_bytes()
    assert a == (tmp_path / "b" / "report.json").read_bytes()
    assert json.loads(a)["seed"] == 7


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "magflow", "presets"], capture_output=True, text=True)
    assert out.returncode == 0 and "kt_c0" in out.stdout


@pytest.mark.parametrize("preset", ["kt_b0", "kt_c0", "heisenberg", "abelian"])
def test_verify_presets_pass(tmp_path, preset):
    cfg = {"preset": preset, "integrator": {"t_end": 1.0}, "sampling": {"count": 60}}
    code, report = run(tmp_path, "verify", cfg)
    assert code == 0, json.dumps(report["checks"], indent=1)[:2000]
