import json
import subprocess
import sys

import pytest

from icechain.cli import main
from icechain.graph import load


@pytest.fixture
def torus(tmp_path):
    path = tmp_path / "g.json"
    assert main(["gen", "--family", "torus", "--rows", "2", "--cols", "2", "--out", str(path)]) == 0
    return path


def test_gen_writes_valid_instance(torus):
    g = load(torus)
    assert g.vertex_count == 4 and len(g.edges) == 8


@pytest.mark.parametrize("family,extra", [("theta", []), ("fig2", []), ("chain", ["--k", "4"]),
                                          ("cycle", ["--k", "5"]), ("random", ["--vertices", "5"])])
def test_gen_families(tmp_path, family, extra):
    path = tmp_path / "g.json"
    assert main(["gen", "--family", family, *extra, "--out", str(path)]) == 0
    load(path)


def test_exact_report(torus, capsys):
    assert main(["exact", "--in", str(torus), "--b", "1/2", "--report"]) == 0
    out = capsys.readouterr().out
    assert "Z = 17/8" in out
    assert "|Omega| = 7" in out
    assert "detailed balance residual = 0" in out
    assert "irreducible and aperiodic = true" in out


def test_exact_curve_csv(torus, tmp_path):
    out = tmp_path / "curve.csv"
    assert main(["exact", "--in", str(torus), "--b", "1/2", "--tmax", "20", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,delta_max" and len(lines) == 22


def test_windable_fstar(capsys):
    assert main(["windable", "--fn", "fstar", "--b", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "unwindable"


def test_windable_from_file(tmp_path, capsys):
    from icechain.constraint import make_six_vertex

    path = tmp_path / "f.json"
    make_six_vertex(1, 1, 1).save(path)
    assert main(["windable", "--fn-file", str(path)]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "windable"


def test_decompose_report(torus, capsys):
    assert main(["decompose", "--in", str(torus), "--convention", "neighbor"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["delta_max"] == 2
    assert data["flags"]["two_by_two_free"] and data["flags"]["coherent"]


def test_sample_reproducible_and_env_seed(torus, tmp_path, monkeypatch):
    a, b, c = (tmp_path / f"{x}.jsonl" for x in "abc")
    args = ["sample", "--in", str(torus), "--b", "0.5", "--steps", "200", "--burn-in", "50"]
    assert main([*args, "--seed", "7", "--out", str(a)]) == 0
    monkeypatch.setenv("ICECHAIN_SEED", "7")
    assert main([*args, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert main([*args, "--seed", "8", "--out", str(c)]) == 0
    assert a.read_bytes() != c.read_bytes()
    rows = [json.loads(line) for line in a.read_text().splitlines()]
    assert len(rows) == 200 and all(len(r) == 4 for r in rows)


def test_couple_modes(torus, capsys):
    assert main(["couple", "--in", str(torus), "--b", "1/2", "--mode", "drift"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["all_bounds_hold"] and data["all_cases_match"] and data["pairs"] == 8
    assert main(["couple", "--in", str(torus), "--b", "1/2", "--mode", "bound", "--eps", "0.01"]) == 0
    assert json.loads(capsys.readouterr().out)["mixing_bound"] == pytest.approx(133.69, abs=0.01)
    assert main(["couple", "--in", str(torus), "--b", "1/3", "--mode", "coalesce", "--trials", "20"]) == 0
    assert json.loads(capsys.readouterr().out)["trials"] == 20


def test_estimate_is_byte_identical(torus, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["estimate-z", "--in", str(torus), "--b", "1/2", "--eps", "0.05", "--seed", "3"]
    assert main([*args, "--out", str(a)]) == 0
    assert main([*args, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["estimate"] == pytest.approx(17 / 8, rel=0.05)


@pytest.mark.parametrize("family,extra", [("torus", []), ("chain", ["--k", "5"]), ("cycle", ["--k", "4"]),
                                          ("fig2", []), ("theta", []), ("random", ["--vertices", "6"])])
def test_piped_workflow(tmp_path, family, extra):
    g = tmp_path / "g.json"
    assert main(["gen", "--family", family, *extra, "--seed", "4", "--out", str(g)]) == 0
    assert main(["decompose", "--in", str(g), "--out", str(tmp_path / "d.json")]) == 0
    assert main(["sample", "--in", str(g), "--b", "1/4", "--steps", "10", "--out", str(tmp_path / "s.jsonl")]) == 0
    assert main(["estimate-z", "--in", str(g), "--b", "1/4", "--out", str(tmp_path / "e.json")]) == 0


def test_usage_errors(torus, capsys):
    assert main([]) == 2
    assert main(["bogus"]) == 2
    assert main(["exact", "--in", str(torus), "--b", "1/2", "--unknown"]) == 2
    assert main(["exact", "--in", str(torus), "--b", "abc"]) == 2
    assert main(["exact", "--in", str(torus), "--b", "-1"]) == 2
    assert main(["windable"]) == 2
    assert main(["windable", "--fn", "fstar"]) == 2


def test_bad_env_seed_is_usage_error(torus, monkeypatch):
    monkeypatch.setenv("ICECHAIN_SEED", "nope")
    assert main(["sample", "--in", str(torus), "--b", "1/2", "--steps", "3"]) == 2


def test_validation_failures(tmp_path, torus):
    assert main(["exact", "--in", str(tmp_path / "missing.json"), "--b", "1/2", "--report"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"vertices": 1, "edges": []}')
    assert main(["decompose", "--in", str(bad)]) == 1
    one = tmp_path / "one.json"
    assert main(["gen", "--family", "chain", "--k", "1", "--out", str(one)]) == 0
    assert main(["sample", "--in", str(one), "--b", "1/2", "--steps", "3"]) == 1
    assert main(["couple", "--in", str(torus), "--b", "1", "--mode", "bound"]) == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "icechain", "windable", "--fn", "fstar", "--b", "1/2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["verdict"] == "unwindable"
