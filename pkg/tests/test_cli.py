import json
import subprocess
import sys

import pytest

from ccnd import model
from ccnd.cli import main


@pytest.fixture
def diamond_file(tmp_path):
    path = tmp_path / "diamond.json"
    model.save(model.diamond(), path)
    return path


def run_json(capsys, argv):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


def test_solve_flowmis(capsys, diamond_file):
    code, doc = run_json(capsys, ["solve", str(diamond_file), "--formulation", "flowmis", "--vi", "--metric"])
    assert code == 0 and doc["status"] == "optimal" and doc["objective"] == 16.0


def test_solve_deq_same_objective(capsys, diamond_file):
    code, doc = run_json(capsys, ["solve", str(diamond_file), "--formulation", "deq"])
    assert code == 0 and doc["objective"] == 16.0


def test_solve_alpha_override(capsys, diamond_file):
    code, doc = run_json(capsys, ["solve", str(diamond_file), "--alpha", "1", "--strategy", "iterative"])
    assert code == 0 and doc["objective"] == 0.0


def test_missing_file(capsys, tmp_path):
    assert main(["solve", str(tmp_path / "nope.json")]) == 1
    assert "error" in capsys.readouterr().err


def test_invalid_instance(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nodes": 2, "arcs": [[0, 1, -1, 1]], "commodities": [[0, 1]],
                               "scenarios": [{"p": 0.5, "d": [1]}], "alpha": 0}))
    assert main(["validate", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "negative capacity on arc 0" in err and "probabilities sum to 0.5" in err
    assert main(["solve", str(bad)]) == 1


def test_time_limit_exit_code(capsys, tmp_path):
    path = tmp_path / "g.json"
    assert main(["generate", "--nodes", "6", "--arcs", "14", "--commodities", "3", "--scenarios", "8",
                 "--out", str(path)]) == 0
    capsys.readouterr()
    assert main(["solve", str(path), "--time-limit", "1e-9"]) == 2


def test_generate_r04(tmp_path, capsys):
    out = tmp_path / "a.json"
    assert main(["generate", "--shape", "R04", "--scenarios", "16", "--out", str(out)]) == 0
    inst = model.load(out)
    assert (inst.num_nodes, inst.num_arcs, inst.num_commodities, inst.num_scenarios) == (10, 60, 10, 16)
    again = tmp_path / "b.json"
    main(["generate", "--shape", "R04", "--scenarios", "16", "--out", str(again)])
    assert out.read_bytes() == again.read_bytes()
    single = tmp_path / "c.json"
    main(["generate", "--shape", "r04", "--scenarios", "16", "--single-commodity", "--out", str(single)])
    one = model.load(single)
    assert one.num_commodities == 1 and one.arcs == inst.arcs
    assert one.commodities[0] == inst.commodities[0]
    assert [s.demand[0] for s in one.scenarios] == [s.demand[0] for s in inst.scenarios]


def test_generate_directory(tmp_path, capsys):
    assert main(["generate", "--nodes", "4", "--arcs", "6", "--commodities", "1", "--scenarios", "2",
                 "--count", "3", "--seed", "5", "--out", str(tmp_path / "suite")]) == 0
    names = sorted(p.name for p in (tmp_path / "suite").iterdir())
    assert names == ["N4A6K1_s2_5.json", "N4A6K1_s2_6.json", "N4A6K1_s2_7.json"]
    assert main(["generate", "--nodes", "4", "--out", str(tmp_path / "x")]) == 1


def test_bench(tmp_path, capsys, diamond_file):
    out, summary = tmp_path / "r.csv", tmp_path / "s.json"
    assert main(["bench", str(diamond_file.parent), "--out", str(out), "--summary", str(summary)]) == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 5 and rows[0].startswith("instance,formulation")
    assert "diamond" in json.loads(summary.read_text())


def test_bench_empty_suite(tmp_path, capsys):
    assert main(["bench", str(tmp_path)]) == 0
    assert capsys.readouterr().out.startswith("instance,formulation")


def test_oracle_command(capsys, diamond_file):
    code, doc = run_json(capsys, ["oracle", str(diamond_file), "--method", "brute"])
    assert code == 0 and doc["objective"] == 16.0 and doc["y"] == [1, 1, 1, 1]


def test_module_entry_point(diamond_file):
    proc = subprocess.run([sys.executable, "-m", "ccnd", "validate", str(diamond_file)],
                          capture_output=True, text=True, env={"CCND_LOG_LEVEL": "DEBUG", "PATH": ""})
    assert proc.returncode == 0 and proc.stdout.startswith("ok")
