from __future__ import annotations

import json
import subprocess
import sys

import pytest

from heckelab.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out) if out else None, out


def test_amplify_smoke(capsys):
    code, doc, _ = run(["amplify", "--d", "2", "--p", "5", "--nu", "1,1"], capsys)
    assert code == 0
    assert doc["command"] == "amplify" and doc["seed"] == 0
    res = doc["result"]
    assert res["lambda"] > 0 and int(res["support_size"]) >= 5
    assert res["lambda_over_sqrt_support"] >= 0.05
    assert set(doc["versions"]) == {"heckelab", "numpy", "python"}


def test_plancherel_check_smoke(capsys):
    code, doc, _ = run(["plancherel-check", "--d", "2", "--p", "7", "--rmax", "3"], capsys)
    assert code == 0
    assert doc["result"]["max_relative_residual"] < 1e-8
    assert doc["result"]["total_mass_error"] < 1e-8


@pytest.mark.parametrize("argv", [
    ["amplify", "--d", "2", "--p", "5", "--bogus", "1"],
    ["frobnicate"],
    [],
    ["cosets", "--d", "2", "--p", "0", "--a", "1,0"],
    ["plancherel-check", "--d", "2", "--p", "4"],
    ["amplify", "--d", "2", "--p", "5"],
    ["amplify", "--d", "2", "--p", "5", "--sweep", "random:4"],
    ["--seed", "-1", "cosets", "--d", "2", "--p", "3", "--a", "1,0"],
])
def test_errors_exit_2(argv, capsys):
    code, doc, _ = run(argv, capsys)
    assert code == 2
    assert doc["status"] == 2 and isinstance(doc["error"], str)


def test_cosets_command(capsys):
    code, doc, _ = run(["cosets", "--d", "2", "--p", "5", "--a", "1,0", "--enumerate"], capsys)
    assert code == 0
    assert doc["result"]["coset_count"] == "6" and doc["result"]["enumerated_count"] == 6


def test_satake_command(capsys):
    code, doc, _ = run(["satake", "--d", "2", "--p", "3", "--a", "1,0", "--a", "2,0"], capsys)
    assert code == 0 and len(doc["result"]["transforms"]) == 2


@pytest.mark.parametrize("argv", [
    ["dioph", "--demo", "colinear", "--M", "2"],
    ["dioph", "--demo", "nearsub", "--trials", "20"],
    ["dioph", "--demo", "badprimes", "--trials", "20"],
    ["mass-lab", "--check", "cov1"],
    ["mass-lab", "--check", "cov2", "--trials", "50"],
    ["mass-lab", "--check", "cover", "--trials", "50"],
    ["mass-lab", "--check", "decay"],
    ["amplify", "--d", "2", "--p", "7", "--sweep", "tempered:10"],
])
def test_commands_deterministic(argv, capsys):
    code1, _, out1 = run(["--seed", "17", *argv], capsys)
    code2, _, out2 = run(["--seed", "17", *argv], capsys)
    assert code1 == code2 == 0
    assert out1 == out2


def test_dioph_results(capsys):
    _, doc, _ = run(["dioph", "--demo", "colinear", "--M", "2"], capsys)
    assert doc["result"]["false_negatives"] == 0
    _, doc, _ = run(["dioph", "--demo", "nearsub", "--trials", "20"], capsys)
    assert doc["result"]["perturbed"]["proper"] == 20
    assert doc["result"]["generic"]["condition_holds"] == 0


def test_decay_result(capsys):
    _, doc, _ = run(["mass-lab", "--check", "decay"], capsys)
    assert doc["result"]["eigenfunction"]["positive"]
    assert not doc["result"]["point_mass_control"]["positive"]


def test_config_overrides_flags(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"p": 7, "a": [2, 0]}))
    code, doc, _ = run(["--config", str(cfg), "cosets", "--d", "2", "--p", "3", "--a", "1,0"], capsys)
    assert code == 0
    assert doc["config"]["p"] == 7 and doc["result"]["a"] == [2, 0]
    assert doc["result"]["coset_count"] == str(7 * 7 + 7)


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"wat": 1}))
    code, doc, _ = run(["--config", str(cfg), "cosets", "--d", "2", "--p", "3", "--a", "1,0"], capsys)
    assert code == 2 and "wat" in doc["error"]


def test_output_file_and_timings(tmp_path, capsys):
    path = tmp_path / "out.json"
    code = main(["--output", str(path), "--timings", "cosets", "--d", "3", "--p", "2", "--a", "1,0,0"])
    assert code == 0
    assert capsys.readouterr().out == ""
    doc = json.loads(path.read_text())
    assert doc["timings"]["wall_seconds"] >= 0
    assert "output" not in doc["config"]


def test_threads_recorded(monkeypatch, capsys):
    monkeypatch.setenv("MASS_LAB_THREADS", "3")
    _, doc, _ = run(["cosets", "--d", "2", "--p", "3", "--a", "1,0"], capsys)
    assert doc["threads"] == 3


def test_module_entry_point_byte_identical():
    argv = [sys.executable, "-m", "heckelab", "--seed", "5", "mass-lab", "--check", "cov2", "--trials", "30"]
    first = subprocess.run(argv, capture_output=True, check=True)
    second = subprocess.run(argv, capture_output=True, check=True)
    assert first.stdout == second.stdout and first.stdout
    assert b"violations" in first.stderr
