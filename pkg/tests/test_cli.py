import json
import math
import subprocess
import sys

import numpy as np
import pytest

from zngauge.cli import main

SMALL_RUN = {"dim": 3, "N": 1, "n": 2, "beta": 0.7, "seed": 9, "thermalization": 5,
             "measurements": 40, "loops": [{"R": 1, "T": 1}], "census": True}


def test_constants_json(capsys):
    assert main(["constants", "--n", "2", "--beta0", "1.0"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["K_lower"] == 0.5
    assert data["lambda_at_beta0"] == pytest.approx(math.exp(-2))
    assert "lambda_formula" in data and data["provenance"]["b"].startswith("conservative")


def test_constants_refuses_inadmissible(capsys):
    assert main(["constants", "--n", "2", "--beta0", "0.3"]) == 2
    assert "inadmissible" in capsys.readouterr().err
    assert main(["constants", "--n", "2", "--beta0", "0.3", "--allow-inadmissible"]) == 0


def test_simulate_is_deterministic(tmp_path):
    manifest = tmp_path / "run.json"
    manifest.write_text(json.dumps(SMALL_RUN))
    outs = []
    for i in range(2):
        out = tmp_path / f"out{i}.csv"
        assert main(["simulate", str(manifest), "-o", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    lines = outs[0].decode().splitlines()
    assert lines[0] == "# zngauge sample csv v1"
    assert lines[1].split(",")[:2] == ["sweep", "re_w"]
    assert len(lines) == 2 + SMALL_RUN["measurements"]


def test_simulate_then_census(tmp_path):
    manifest = tmp_path / "run.json"
    manifest.write_text(json.dumps(SMALL_RUN))
    snaps = tmp_path / "snaps.npz"
    assert main(["simulate", str(manifest), "-o", str(tmp_path / "s.csv"),
                 "--snapshots", str(snaps), "--snapshot-every", "10"]) == 0
    assert len(np.load(snaps)["values"]) == 4
    out = tmp_path / "census.csv"
    assert main(["census", str(snaps), "-o", str(out)]) == 0
    assert len(out.read_text().splitlines()) >= 2 + 4


def test_malformed_manifest_names_the_line(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "n": 2,\n  "beta": [1]\n}')
    assert main(["simulate", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "bad.json:3" in err and "beta" in err


def test_oracle_command(tmp_path):
    spec = {"box": {"lower": [0, 0], "upper": [1, 1]}, "n": 2, "betas": [0.25, 0.5],
            "loops": [[{"plane": [1, 2], "R": 1, "T": 1, "corner": [0, 0]}]]}
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    out = tmp_path / "oracle.csv"
    assert main(["oracle", str(path), "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[:2] == ["# zngauge oracle csv v1", "loop,beta,re,im"]
    for line, beta in zip(lines[2:], [0.25, 0.5]):
        _, b, re, im = line.split(",")
        assert float(b) == beta and float(re) == pytest.approx(math.tanh(2 * beta), abs=1e-14)


def test_verify_via_module_entry_point(tmp_path):
    report = tmp_path / "agreement.json"
    proc = subprocess.run([sys.executable, "-m", "zngauge", "verify", "agreement", "--json", str(report)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    data = json.loads(report.read_text())
    assert data["suite"] == "agreement" and data["passed"] is True
    assert "build" in data
