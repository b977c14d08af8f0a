"""
Comparing the four formulations
===============================

Runs the bench grid over a handful of generated single-commodity instances and
prints the per-group aggregates: solved counts, mean iterations, the fastest
formulation tally and the geometric-mean speed-up relative to BB.
"""

import json
import tempfile
from pathlib import Path

from ccnd import bench, model
from ccnd.generator import GeneratorSpec, generate_instance

with tempfile.TemporaryDirectory() as tmp:
    for seed in range(4):
        inst = generate_instance(GeneratorSpec(8, 22, 3, 12, capacity_ratio=0.9, seed=seed))
        model.save(model.single_commodity(inst), Path(tmp) / f"SC_{seed}.json")

    configs = bench.grid(vis=(True,), time_limit=30.0)
    records = bench.run_suite(bench.suite_files(tmp), configs)

print(bench.to_csv(records))
print(json.dumps(bench.aggregate(records), indent=2))
