"""Experiment grid runner and result tables.

Each (instance, configuration) pair produces one RunRecord. Records are sorted
by key after the pool drains, so the table never depends on completion order.
"""

from __future__ import annotations

import csv
import io
import math
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from . import model, oracle
from .master import SolveOptions, SolveStatus, solve

FORMULATIONS = ("bb", "flowmis", "mis", "snc")

#: Fixed CSV column order.
COLUMNS = (
    "instance", "formulation", "vis", "metric", "strategy", "status",
    "objective", "iterations", "cuts_added", "bnb_nodes", "wall_time_s",
)


@dataclass(frozen=True)
class RunConfig:
    formulation: str
    vis: bool = False
    metric: bool = False
    strategy: str = "tree"
    time_limit: float = 60.0

    @property
    def key(self) -> tuple:
        return (self.formulation, self.vis, self.metric, self.strategy)


@dataclass(frozen=True)
class RunRecord:
    instance: str
    formulation: str
    vis: bool
    metric: bool
    strategy: str
    status: str
    objective: float | None
    iterations: int
    cuts_added: int
    bnb_nodes: int
    wall_time_s: float

    @property
    def solved(self) -> bool:
        return self.status == SolveStatus.OPTIMAL.value


def grid(formulations=FORMULATIONS, vis=(False,), metric=(False,), strategies=("tree",),
         time_limit: float = 60.0) -> list[RunConfig]:
    return [
        RunConfig(f, v, m, s, time_limit)
        for f in formulations for v in vis for m in metric for s in strategies
    ]


def run_one(name: str, instance: model.Instance, config: RunConfig) -> RunRecord:
    """Run one configuration; failures become a status, never an exception."""
    base = dict(instance=name, formulation=config.formulation, vis=config.vis,
                metric=config.metric, strategy=config.strategy)
    try:
        if config.formulation == "deq":
            start = time.perf_counter()
            res = oracle.solve_deq(instance, row_budget=10**6, time_limit=config.time_limit)
            return RunRecord(**base, status=res.status, objective=_finite(res.objective),
                             iterations=0, cuts_added=0, bnb_nodes=0,
                             wall_time_s=time.perf_counter() - start)
        res = solve(instance, SolveOptions(
            formulation=config.formulation, use_vis=config.vis, use_metric=config.metric,
            strategy=config.strategy, time_limit=config.time_limit,
        ))
    except Exception as exc:  # noqa: BLE001 - recorded, the suite keeps going
        return RunRecord(**base, status=f"error: {type(exc).__name__}: {exc}", objective=None,
                         iterations=0, cuts_added=0, bnb_nodes=0, wall_time_s=0.0)
    st = res.stats
    return RunRecord(**base, status=res.status.value, objective=_finite(res.objective),
                     iterations=st.iterations, cuts_added=st.cuts_added, bnb_nodes=st.bnb_nodes,
                     wall_time_s=st.wall_time)


def _finite(x: float) -> float | None:
    return x if math.isfinite(x) else None


def _task(args):
    path, config = args
    return run_one(Path(path).stem, model.load(path), config)


def run_suite(paths, configs, workers: int = 1) -> list[RunRecord]:
    tasks = [(str(p), c) for p in sorted(paths, key=str) for c in configs]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_task, tasks))
    else:
        records = [_task(t) for t in tasks]
    return sorted(records, key=lambda r: (r.instance, RunConfig(r.formulation, r.vis, r.metric, r.strategy).key))


def suite_files(directory) -> list[Path]:
    return sorted(Path(directory).glob("*.json"))


# -- tables ------------------------------------------------------------------------------

def to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in records:
        row = asdict(r)
        row["objective"] = "" if r.objective is None else repr(r.objective)
        row["wall_time_s"] = f"{r.wall_time_s:.6f}"
        w.writerow(row)
    return buf.getvalue()


def group_of(name: str) -> str:
    """Instance group: the file stem up to the first underscore."""
    return name.split("_", 1)[0]


def geometric_mean(values) -> float:
    values = list(values)
    if not values:
        return math.nan
    return math.exp(math.fsum(math.log(v) for v in values) / len(values))


def fastest_tally(records) -> dict[str, int]:
    """Per instance, the solved formulation with the least wall time scores one."""
    by_instance = defaultdict(list)
    for r in records:
        by_instance[r.instance].append(r)
    tally: dict[str, int] = defaultdict(int)
    for runs in by_instance.values():
        solved = [r for r in runs if r.solved]
        if solved:
            best = min(solved, key=lambda r: r.wall_time_s)
            tally[best.formulation] += 1
    return dict(tally)


def speedups(records, baseline: str = "bb") -> dict[str, float | None]:
    """Geometric-mean time ratio baseline/other over instances both solve.

    None when no instance is solved by both.
    """
    times = defaultdict(dict)
    for r in records:
        if r.solved:
            times[r.formulation][r.instance] = max(r.wall_time_s, 1e-9)
    base = times.get(baseline, {})
    out = {}
    for f, ts in times.items():
        if f == baseline:
            continue
        common = sorted(base.keys() & ts.keys())
        out[f] = geometric_mean(base[i] / ts[i] for i in common) if common else None
    return out


def aggregate(records) -> dict[str, dict]:
    """Per instance group: mean iterations, solved count, mean time, tally, speed-ups."""
    groups = defaultdict(list)
    for r in records:
        groups[group_of(r.instance)].append(r)
    out = {}
    for g, recs in sorted(groups.items()):
        per = defaultdict(list)
        for r in recs:
            per[r.formulation].append(r)
        out[g] = {
            "formulations": {
                f: {
                    "runs": len(rs),
                    "solved": sum(r.solved for r in rs),
                    "mean_iterations": math.fsum(r.iterations for r in rs) / len(rs),
                    "mean_time_s": math.fsum(r.wall_time_s for r in rs) / len(rs),
                }
                for f, rs in sorted(per.items())
            },
            "fastest": fastest_tally(recs),
            "speedup_vs_bb": speedups(recs),
        }
    return out
