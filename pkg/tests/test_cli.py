import json
import subprocess
import sys

import pytest

from polyshare.cli import main
from polyshare.matrix import Matrix
from polyshare.rng import derive_rng

P = (1 << 61) - 1


@pytest.fixture
def files(tmp_path):
    rng = derive_rng(31)
    mats = {n: Matrix.random(4, 4, P, rng) for n in "ABC"}
    paths = {}
    for n, m in mats.items():
        paths[n] = tmp_path / f"{n}.json"
        paths[n].write_text(m.to_json())
    paths["expr"] = tmp_path / "g.txt"
    paths["expr"].write_text("X1' * X2 + X3\n")
    paths["bad"] = tmp_path / "bad.json"
    paths["bad"].write_text('{"rows": 2, "cols": 2, "modulus": 7, "data": [1, 2, 3, 7]}')
    return mats, paths, tmp_path


def run_args(paths, workers):
    return [
        "run", "-t", "4", "-k", "2", "--workers", str(workers), "--seed", "5",
        "--expr", str(paths["expr"]), "--input", str(paths["A"]), str(paths["B"]), str(paths["C"]),
    ]


def test_run_example(files, capsys):
    mats, paths, tmp = files
    out = tmp / "report.json"
    assert main(run_args(paths, 13) + ["--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert Matrix.from_dict(rep["output"]) == mats["A"].T @ mats["B"] + mats["C"]
    assert rep["seed"] == 5 and rep["config"]["N"] == 13
    assert rep["counters"] == rep["predicted_counters"]
    assert "rounds=2" in capsys.readouterr().out


def test_run_below_bound(files, capsys):
    _, paths, _ = files
    assert main(run_args(paths, 12)) == 2
    assert "min{2k^2+2t-3, k^2+kt+t-2}" in capsys.readouterr().err


def test_run_bad_inputs(files, tmp_path):
    _, paths, _ = files
    assert main(["run", "-t", "2", "--expression", "X1", "--input", str(paths["bad"])]) == 1
    assert main(["run", "-t", "2", "--expression", "X1", "--input", str(tmp_path / "missing.json")]) == 1
    assert main(["run", "-t", "2", "--expression", "X1 *", "--input", str(paths["A"])]) == 1
    assert main(["run", "-t", "2", "--expression", "X2", "--input", str(paths["A"])]) == 1


def test_seed_from_environment(files, monkeypatch, tmp_path):
    _, paths, _ = files
    base = ["run", "-t", "2", "-k", "2", "--expression", "X1*X2", "--input", str(paths["A"]), str(paths["B"])]
    monkeypatch.setenv("POLYSHARE_SEED", "77")
    assert main(base + ["--out", str(tmp_path / "a.json")]) == 0
    assert json.loads((tmp_path / "a.json").read_text())["seed"] == 77
    monkeypatch.setenv("POLYSHARE_SEED", "x")
    assert main(base) == 1


def test_bound(capsys):
    assert main(["bound", "-t", "200", "-k", "16"]) == 0
    out = capsys.readouterr().out
    assert "909" in out and "102144" in out
    assert main(["bound", "-t", "4", "-k", "2", "--table"]) == 0
    lines = capsys.readouterr().out.splitlines()
    header, row = lines[0].split(), lines[2].split()
    assert dict(zip(header, row))["polyshare"] == "13"
    assert dict(zip(header, row))["chang-tandon"] == "25"
    assert main(["bound", "-t", "1", "-k", "1"]) == 0
    assert "polyshare workers: 1" in capsys.readouterr().out
    assert main(["bound", "-t", "4", "-k", "2", "--table", "--format", "csv"]) == 0
    assert capsys.readouterr().out.startswith("t,k,polyshare")


def test_bound_grid(capsys):
    assert main(["bound", "--table", "-t", "2", "4", "-k", "2", "3", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 5 and lines[3].startswith("4,2,13,")
    assert main(["bound", "-t", "1", "2", "-k", "2", "--format", "json"]) == 0
    assert [r["polyshare"] for r in json.loads(capsys.readouterr().out)] == [5, 8]


def test_audit_certificate_failure(capsys):
    assert main(["audit", "-t", "2", "-k", "1", "--workers", "3", "--modulus", "7", "--alphas", "1", "0", "3"]) == 3
    assert "failing coalition: [1]" in capsys.readouterr().out


def test_audit_passes_and_leak_demo(capsys, tmp_path):
    base = ["audit", "-t", "2", "-k", "1", "--workers", "3", "--modulus", "7", "--seed", "3"]
    assert main(base + ["--trials", "4000", "--tv-threshold", "0.12", "--out", str(tmp_path / "a.json")]) == 0
    rep = json.loads((tmp_path / "a.json").read_text())
    assert rep["certificate"]["passed"] and rep["audit"]["max_tv"] <= 0.12
    assert rep["config"]["modulus"] == 7
    assert main(base + ["--trials", "2000", "--subset-size", "2", "--expect-leak"]) == 0
    assert "expected leakage detected" in capsys.readouterr().out
    assert main(base + ["--trials", "10", "--subset-size", "2"]) == 1


def test_audit_threshold_failure():
    base = ["audit", "-t", "2", "-k", "1", "--workers", "3", "--modulus", "7", "--trials", "200"]
    assert main(base + ["--tv-threshold", "0.0001"]) == 3


def test_audit_large_params_skip_statistics(capsys):
    assert main(["audit", "-t", "3", "-k", "2", "--workers", "13"]) == 0
    out = capsys.readouterr().out
    assert "78 coalitions" in out and "skipped" in out


def test_bench(capsys, tmp_path):
    assert main(["bench", "--out", str(tmp_path / "b.json")]) == 0
    rows = json.loads((tmp_path / "b.json").read_text())["rows"]
    assert {(r["k"], r["t"]) for r in rows} == {(1, 2), (1, 3), (2, 2), (2, 3)}
    assert all(r["match"] == 1 for r in rows)
    assert main(["bench", "-e", "X1", "-k", "2", "-t", "2", "--out", str(tmp_path / "z.json")]) == 0
    assert json.loads((tmp_path / "z.json").read_text())["rows"][0]["ww_measured"] == 0
    assert main(["bench", "-k", "2", "-t", "2", "-m", "4", "8", "--workers", "8", "--out", str(tmp_path / "m.json")]) == 0
    r4, r8 = json.loads((tmp_path / "m.json").read_text())["rows"]
    assert r8["ww_measured"] == 4 * r4["ww_measured"]


def test_share_and_reconstruct(files, tmp_path, capsys):
    mats, paths, _ = files
    bundle = tmp_path / "bundle.json"
    assert main(["share", "--input", str(paths["A"]), "-t", "2", "-k", "2", "-b", "2", "--out", str(bundle)]) == 0
    out = tmp_path / "back.json"
    assert main(["reconstruct", "--bundle", str(bundle), "--out", str(out)]) == 0
    assert Matrix.from_dict(json.loads(out.read_text())) == mats["A"]
    assert main(["reconstruct", "--bundle", str(bundle), "--workers-subset", "0"]) == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "polyshare", "bound", "-t", "4", "-k", "2"], capture_output=True, text=True
    )
    assert proc.returncode == 0 and "13" in proc.stdout
