import csv
import json
import subprocess
import sys

import pytest

from biotpicard.cli import main

CONSTANT = {
    "dimension": 1, "n": 8, "T": 1.0, "dt": 0.25, "c0": 1.0,
    "law": {"kind": "constant", "k1": 1.0, "k2": 1.0, "value": 1.0},
    "sources": {"S": "sin(pi*x)", "F": ["t*x*(1-x)"], "d0": "x*(1-x)"},
    "snapshot_times": [0.5],
}
NONLINEAR = dict(CONSTANT, law={"kind": "clamped-exponential", "k1": 0.5, "k2": 2.0, "k0": 1.0, "beta": 1.0},
                 sources={"S": "4*sin(pi*x)", "F": ["t*cos(pi*x)"], "d0": "sin(pi*x)"})


def write(tmp_path, spec, name="sc.json"):
    path = tmp_path / name
    path.write_text(json.dumps(spec))
    return path


def test_check_ops_1d(tmp_path, capsys):
    sc = write(tmp_path, dict(CONSTANT, n=8))
    assert main(["--mode", "check-ops", "--scenario", str(sc), "--seed", "42", "--out", str(tmp_path / "o")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all("PASS" in line for line in lines)
    assert all(line.startswith("d=1 n=8") for line in lines)


def test_solve_constant_law_reports_two_iterations(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["--mode", "solve", "--scenario", str(write(tmp_path, CONSTANT)), "--out", str(out)]) == 0
    with open(out / "iteration_log.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 3
    for name in ("trajectory.csv", "mesh.txt", "snapshot_00002.txt", "audit.json", "uniqueness.json",
                 "manifest.json", "scenario.json"):
        assert (out / name).exists(), name
    assert "PASS picard convergence" in capsys.readouterr().out


def test_audit_round_trip(tmp_path, capsys):
    out = tmp_path / "o"
    sc = write(tmp_path, NONLINEAR)
    assert main(["--mode", "solve", "--scenario", str(sc), "--out", str(out)]) == 0
    assert main(["--mode", "audit", "--scenario", str(sc), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "PASS audit round-trip" in text
    stored = json.loads((out / "audit.json").read_text())
    again = json.loads((out / "reaudit.json").read_text())
    for group in ("energy_audit", "fixed_point"):
        for key, value in again[group].items():
            if isinstance(value, str):
                assert float(value) == pytest.approx(float(stored[group][key]), rel=1e-12, abs=1e-300)


def test_lagged_flag(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["--mode", "solve", "--scenario", str(write(tmp_path, NONLINEAR)), "--out", str(out),
                 "--per-step-lagged-k"]) == 0
    assert "lagged-k preview" in capsys.readouterr().out
    assert json.loads((out / "manifest.json").read_text())["per_step_lagged_k"] is True


def test_limit_rows(tmp_path):
    spec = dict(CONSTANT, c0=0.0, limit={"c0_ladder": [0.1, 0.01]})
    out = tmp_path / "o"
    assert main(["--mode", "limit", "--scenario", str(write(tmp_path, spec)), "--out", str(out)]) == 0
    with open(out / "limit.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["c0"]) for r in rows] == [0.0, 0.1, 0.01]


def test_mms_mode(tmp_path, capsys):
    spec = dict(CONSTANT, mms={"p": "sin(pi*x)*exp(-t)", "u": ["x*(1-x)*(1+t)"], "mesh_ladder": [4, 8, 16]})
    out = tmp_path / "o"
    assert main(["--mode", "mms", "--scenario", str(write(tmp_path, spec)), "--out", str(out)]) == 0
    assert (out / "rates_spatial.csv").exists()
    assert "PASS spatial order p" in capsys.readouterr().out


@pytest.mark.parametrize("argv_tail, spec", [
    (["--mode", "solve"], None),
    (["--mode", "solve"], dict(CONSTANT, dt=0.3)),
    (["--mode", "audit"], CONSTANT),
    (["--mode", "mms"], CONSTANT),
    (["--mode", "solve", "--seed", "-1"], CONSTANT),
])
def test_errors_exit_nonzero(tmp_path, capsys, argv_tail, spec):
    argv = argv_tail + ["--out", str(tmp_path / "o")]
    if spec is not None:
        argv += ["--scenario", str(write(tmp_path, spec))]
    assert main(argv) == 2
    assert "error" in capsys.readouterr().err


def test_failed_check_exits_one(tmp_path):
    spec = dict(NONLINEAR, solver={"max_iters": 1, "picard_tol": 1e-14})
    assert main(["--mode", "solve", "--scenario", str(write(tmp_path, spec)), "--out", str(tmp_path / "o")]) == 1


def test_console_entry_point(tmp_path):
    result = subprocess.run([sys.executable, "-m", "biotpicard.cli", "--mode", "check-ops", "--scenario",
                             str(write(tmp_path, CONSTANT)), "--out", str(tmp_path / "o")],
                            capture_output=True, text=True)
    assert result.returncode == 0, result.stderr
