import math

import pytest

from ccnd import bench, model
from ccnd.bench import RunRecord


def rec(instance, formulation, status="optimal", t=1.0, iterations=3):
    return RunRecord(instance, formulation, False, False, "tree", status, 1.0 if status == "optimal" else None,
                     iterations, 0, 0, t)


def test_geometric_mean_fixture():
    assert bench.geometric_mean([1, 4, 16]) == pytest.approx(4.0)
    assert math.isnan(bench.geometric_mean([]))


def test_fastest_tally_fixture():
    records = [rec("R04_a", "bb", t=2.0), rec("R04_a", "flowmis", t=1.0), rec("R04_a", "snc", t=1.5),
               rec("R04_b", "bb", t=1.0), rec("R04_b", "flowmis", status="time_limit", t=0.1)]
    assert bench.fastest_tally(records) == {"flowmis": 1, "bb": 1}


def test_speedup_only_over_commonly_solved():
    records = [
        rec("g_1", "bb", t=4.0), rec("g_1", "flowmis", t=1.0),
        rec("g_2", "bb", status="time_limit", t=60.0), rec("g_2", "flowmis", t=2.0),
        rec("g_3", "bb", t=1.0), rec("g_3", "flowmis", t=4.0),
        rec("g_4", "bb", t=9.0), rec("g_4", "mis", status="time_limit"),
    ]
    sp = bench.speedups(records)
    # g_1 ratio 4, g_3 ratio 1/4 -> geometric mean 1; g_2 excluded since BB did not solve it.
    assert sp["flowmis"] == pytest.approx(1.0)
    assert "mis" not in sp


def test_speedup_none_when_nothing_common():
    records = [rec("g_1", "bb", status="time_limit"), rec("g_1", "snc")]
    assert bench.speedups(records) == {"snc": None}


def test_aggregate_groups():
    records = [rec("R04_1", "bb", iterations=2), rec("R04_2", "bb", iterations=4, status="time_limit"),
               rec("R05_1", "bb")]
    agg = bench.aggregate(records)
    assert set(agg) == {"R04", "R05"}
    assert agg["R04"]["formulations"]["bb"] == {"runs": 2, "solved": 1, "mean_iterations": 3.0, "mean_time_s": 1.0}


def test_csv_column_order():
    text = bench.to_csv([rec("x", "bb")])
    header, row = text.splitlines()
    assert header == ",".join(bench.COLUMNS)
    assert row.startswith("x,bb,False,False,tree,optimal,1.0,3,0,0,")


def suite(tmp_path, count=2):
    for i in range(count):
        model.save(model.diamond(6.0 + i), tmp_path / f"D_{i}.json")
    return tmp_path


def test_run_suite_one_instance_four_formulations(tmp_path):
    paths = bench.suite_files(suite(tmp_path, 1))
    records = bench.run_suite(paths, bench.grid())
    assert [r.formulation for r in records] == ["bb", "flowmis", "mis", "snc"]
    assert all(r.solved and r.objective == 16.0 for r in records)
    assert sum(bench.fastest_tally(records).values()) == 1


def test_run_suite_parallel_matches_serial(tmp_path):
    paths = bench.suite_files(suite(tmp_path))
    configs = bench.grid(("flowmis", "deq"), vis=(False, True))
    serial = bench.run_suite(paths, configs)
    parallel = bench.run_suite(paths, configs, workers=2)
    strip = lambda rs: [(r.instance, r.formulation, r.vis, r.status, r.objective) for r in rs]
    assert strip(serial) == strip(parallel)


def test_errors_are_recorded(tmp_path):
    bad = model.build_instance(2, [(0, 1, 1, 1)], [(0, 1)], [(1.0, [5.0])], 0.0)
    record = bench.run_one("bad", bad, bench.RunConfig("nonsense"))
    assert record.status.startswith("error") and record.objective is None


def test_empty_suite(tmp_path):
    assert bench.run_suite(bench.suite_files(tmp_path), bench.grid()) == []
    assert bench.to_csv([]) == ",".join(bench.COLUMNS) + "\n"
