import csv
import json
import subprocess
import sys

import pytest

from resonance11.cli import dumps, main


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


BASE = {"a": ["1", "2", "4"], "b": ["1", "1", "1"]}


def test_invariants_rows(tmp_path, capsys):
    src = tmp_path / "z.csv"
    src.write_text("1,0,0,0\n0,1,1,0\n")
    assert main(["invariants", str(src)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "I1,I2,I3,I4,residual"
    assert out[1] == "0.5,0.5,0,0,0"
    assert out[2] == "1,0,0,-1,0"


def test_invariants_empty_and_malformed(tmp_path, capsys):
    empty = tmp_path / "e.csv"
    empty.write_text("")
    assert main(["invariants", str(empty)]) == 0
    assert capsys.readouterr().out == ""
    bad = tmp_path / "b.csv"
    bad.write_text("1,0,0,0\n1,2,oops,0\n")
    assert main(["invariants", str(bad)]) == 1
    assert "row 2" in capsys.readouterr().err


def test_codim(tmp_path, capsys):
    assert main(["codim", "--config", write(tmp_path, "c.json", BASE)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["total"] == 5 and rep["nondegenerate"] is True
    assert list(rep)[:7] == ["N", "per_degree", "total", "complement", "nondegenerate", "det_A2", "det_A5"]
    assert main(["codim", "--config", write(tmp_path, "d.json", {"a": [1, 1, 2], "b": [1, 1, 1]})]) == 0
    assert json.loads(capsys.readouterr().out)["nondegenerate"] is False
    totals = []
    for N in ("5", "8"):
        assert main(["codim", "--config", write(tmp_path, "c.json", BASE), "--N", N]) == 0
        totals.append(json.loads(capsys.readouterr().out)["total"])
    assert totals == [5, 5]


def test_codim_rejects_unknown_keys_and_floats(tmp_path, capsys):
    assert main(["codim", "--config", write(tmp_path, "x.json", dict(BASE, colour=1))]) == 1
    assert main(["codim", "--config", write(tmp_path, "y.json", {"a": [1.5, 2, 4], "b": [1, 1, 1]})]) == 1
    assert main(["codim", "--config", str(tmp_path / "missing.json")]) == 1


def test_generators(tmp_path, capsys):
    assert main(["generators", "--config", write(tmp_path, "c.json", BASE)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["G1"] == "1/2*I2^3 + 1/2*I3^3 + 1/2*I4^3"
    assert out["det_A2"] == "6" and out["F5"]


def test_portrait(tmp_path, capsys):
    cfg = write(tmp_path, "q.json", {"a": [1, 2, 4], "b": [0, 0, 0]})
    out = tmp_path / "out"
    assert main(["portrait", "--config", cfg, "--levels", "12", "--output-dir", str(out)]) == 0
    rep = json.loads((out / "equilibria.json").read_text())
    assert len(rep["equilibria"]) == 6
    assert len(rep["levels"]) == 12
    with open(out / "curves_000.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["curve_id", "vertex_index", "x2", "x3", "x4"] and len(rows) > 10


def test_portrait_level_outside_and_degenerate(tmp_path, capsys):
    cfg = write(tmp_path, "q.json", {"a": [1, 1, 2], "b": [0, 0, 0], "levels": [10.0]})
    out = tmp_path / "out"
    assert main(["portrait", "--config", cfg, "--output-dir", str(out)]) == 0
    assert "warning" in capsys.readouterr().err
    assert (out / "curves_000.csv").read_text().strip() == "curve_id,vertex_index,x2,x3,x4"


def test_integrate(tmp_path, capsys):
    cfg = write(tmp_path, "i.json", {"a": [1, 2, 4], "b": [0, 0, 0], "x0": [0.6, 0.8, 0.0]})
    assert main(["integrate", "--config", cfg, "--T", "0.01", "--dt", "0.001"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t,x2,x3,x4" and len(lines) == 12
    assert main(["integrate", "--config", cfg, "--T", "1", "--dt", "0.5"]) == 1


def test_scan_and_bad_path(tmp_path, capsys):
    cfg = write(tmp_path, "s.json", {"a": [1, 2, 4], "b": [0, 0, 0],
                                     "mu_path": {"start": [1, 0, 0, 0, 0], "end": [1, 0, 0, 0, 0]},
                                     "samples": 2})
    assert main(["scan", "--config", cfg]) == 0
    assert json.loads(capsys.readouterr().out)["events"] == []
    bad = write(tmp_path, "b.json", {"a": [1, 2, 4], "b": [0, 0, 0], "mu_path": {"start": [0, 0]}})
    assert main(["scan", "--config", bad]) == 1
    assert "mu_path" in capsys.readouterr().err


def test_lift_and_moduli(tmp_path, capsys):
    cfg = write(tmp_path, "l.json", {"a": [1, 2, 4], "b": [0, 0, 0]})
    assert main(["lift-check", "--config", cfg]) == 0
    assert json.loads(capsys.readouterr().out)["all_passed"] is True
    assert main(["moduli-check", "--config", write(tmp_path, "c.json", BASE), "--sample", "1/10,1/10"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["consistent"] is True and rep["base_total"] == 5
    assert main(["moduli-check", "--config", write(tmp_path, "c.json", BASE), "--sample", "x"]) == 1


def test_output_is_deterministic(tmp_path):
    cfg = write(tmp_path, "q.json", {"a": [1, 2, 4], "b": [1, 1, 1]})
    runs = [subprocess.run([sys.executable, "-m", "resonance11.cli", "lift-check", "--config", cfg],
                           capture_output=True, check=False).stdout for _ in range(2)]
    assert runs[0] == runs[1] and runs[0]


def test_dumps_uses_17_digits():
    assert dumps({"x": 0.1, "y": [1, 2.5]}) == '{\n  "x": 0.10000000000000001,\n  "y": [1, 2.5]\n}\n'


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2
