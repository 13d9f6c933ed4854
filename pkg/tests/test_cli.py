"""Command-line client: verbs, output roots, exit codes."""

import json
import subprocess
import sys

import numpy as np
import pytest

from sislab.cli import main


def write_scenario(path, **over):
    d = {
        "id": "cli-case",
        "domain": {"extents": [1.0], "cells": [8]},
        "params": {"d_S": 0.3, "d_I": 0.2, "chi": 0.0, "mu": 0.5,
                   "p": 1.0, "q": 1.0},
        "beta": {"kind": "constant", "value": 1.0},
        "gamma": {"kind": "constant", "value": 1.0},
        "initial": {"S": {"kind": "constant", "value": 1.0},
                    "I": {"kind": "constant", "value": 0.1}},
        "t_end": 0.2,
        "stepper": {"dt": 0.01},
        "output": {"record_interval": 0.1, "snapshot_times": []},
    }
    d.update(over)
    path.write_text(json.dumps(d))
    return d


def test_run_writes_under_out_flag(tmp_path, capsys):
    case = tmp_path / "case.json"
    write_scenario(case)
    code = main(["run", str(case), "--out", str(tmp_path / "root")])
    assert code == 0
    assert (tmp_path / "root" / "cli-case" / "summary.json").exists()
    out = capsys.readouterr().out
    assert "summary.json" in out and "stop_reason: t_end" in out


def test_run_honors_environment_root(tmp_path, monkeypatch, capsys):
    case = tmp_path / "case.json"
    write_scenario(case)
    monkeypatch.setenv("SISLAB_OUT", str(tmp_path / "envroot"))
    assert main(["run", str(case)]) == 0
    assert (tmp_path / "envroot" / "cli-case" / "summary.json").exists()


def test_run_defaults_to_local_directory(tmp_path, monkeypatch):
    case = tmp_path / "case.json"
    write_scenario(case)
    monkeypatch.delenv("SISLAB_OUT", raising=False)
    monkeypatch.chdir(tmp_path)
    assert main(["run", str(case)]) == 0
    assert (tmp_path / "sislab-out" / "cli-case" / "summary.json").exists()


def test_run_invalid_scenario_exits_2(tmp_path, capsys):
    case = tmp_path / "case.json"
    write_scenario(case, t_end=-1.0)
    assert main(["run", str(case), "--out", str(tmp_path)]) == 2
    assert "error:" in capsys.readouterr().err


def test_run_missing_file_exits_2(tmp_path, capsys):
    assert main(["run", str(tmp_path / "absent.json"),
                 "--out", str(tmp_path)]) == 2


def test_run_blowup_exits_3(tmp_path, capsys):
    case = tmp_path / "case.json"
    write_scenario(
        case,
        params={"d_S": 0.3, "d_I": 0.2, "chi": 0.0, "mu": 0.5,
                "p": 1.0, "q": 2.0},
        initial={"S": {"kind": "constant", "value": 1e155},
                 "I": {"kind": "constant", "value": 1.0}},
        stepper={"dt": 0.1, "max_dt_shrink": 2},
    )
    with np.errstate(over="ignore"):
        code = main(["run", str(case), "--out", str(tmp_path / "root")])
    assert code == 3
    captured = capsys.readouterr()
    assert "stop_reason: aborted" in captured.out
    assert "abort" in captured.err
    # artifacts are still written for the aborted run
    assert (tmp_path / "root" / "cli-case" / "summary.json").exists()


def test_check_prints_classification(tmp_path, capsys):
    case = tmp_path / "case.json"
    write_scenario(case)
    assert main(["check", str(case)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["valid"] is True
    assert doc["certificate"]["verdict"] == "AnyChi"
    assert doc["prediction"]["outcome"] == "disease-free"
    assert doc["totals"]["mean_density"] == pytest.approx(1.1)


def test_check_inadmissible_exits_2(tmp_path, capsys):
    case = tmp_path / "case.json"
    write_scenario(case, initial={"S": {"kind": "constant", "value": 1.0},
                                  "I": {"kind": "constant", "value": 0.0}})
    assert main(["check", str(case)]) == 2
    assert "identically" in capsys.readouterr().err


def test_r0_prints_spectral_document(tmp_path, capsys):
    case = tmp_path / "case.json"
    write_scenario(case)
    assert main(["r0", str(case)]) == 0
    doc = json.loads(capsys.readouterr().out)
    # homogeneous rates: R0 = m beta / gamma = 1.1, lambda* = gamma - m beta
    assert doc["R0"] == pytest.approx(1.1, rel=1e-12)
    assert doc["lambda_star"] == pytest.approx(-0.1, rel=1e-10)
    assert doc["sign_consistent"] is True


def test_sweep_writes_results_and_flags_failures(tmp_path, capsys):
    template = tmp_path / "template.json"
    write_scenario(template)
    axes = tmp_path / "axes.json"
    axes.write_text(json.dumps({"axes": {"params.mu": [0.3, 0.5]}}))
    code = main(["sweep", str(template), str(axes),
                 "--out", str(tmp_path / "root")])
    assert code == 0
    results = tmp_path / "root" / "cli-case-sweep" / "results.csv"
    assert results.exists()
    assert "2 runs, 0 failed" in capsys.readouterr().out

    axes.write_text(json.dumps({"axes": {"params.d_S": [0.3, -1.0]}}))
    code = main(["sweep", str(template), str(axes),
                 "--out", str(tmp_path / "root2")])
    assert code == 3
    assert "1 failed" in capsys.readouterr().out
    assert (tmp_path / "root2" / "cli-case-sweep" / "results.csv").exists()


def test_sweep_missing_template_exits_2(tmp_path, capsys):
    axes = tmp_path / "axes.json"
    axes.write_text(json.dumps({"axes": {"params.mu": [0.1]}}))
    assert main(["sweep", str(tmp_path / "absent.json"), str(axes)]) == 2


def test_console_script_smoke(tmp_path):
    case = tmp_path / "case.json"
    write_scenario(case)
    proc = subprocess.run([sys.executable, "-m", "sislab.cli", "check",
                           str(case)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["valid"] is True
