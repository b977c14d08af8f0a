"""Command-line front end: ``ccnd solve|bench|generate|validate|oracle``.

Exit codes: 0 optimal (or success), 2 time or node limit, 1 error.
Set ``CCND_LOG_LEVEL`` (e.g. DEBUG) for log output on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import bench, model, oracle
from .generator import GeneratorError, GeneratorSpec, R_SHAPES, generate_instance, r_shape
from .master import SolveOptions, SolveStatus, solve

EXIT_OK, EXIT_ERROR, EXIT_LIMIT = 0, 1, 2


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_ERROR


def _load_checked(path: str) -> model.Instance:
    inst = model.load(path)
    problems = model.validate(inst)
    if problems:
        raise model.InstanceFormatError("; ".join(problems))
    return inst


def _alpha(inst: model.Instance, args) -> model.Instance:
    return inst if args.alpha is None else model.with_alpha(inst, args.alpha)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    try:
        inst = _alpha(_load_checked(args.instance), args)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    if args.formulation == "deq":
        res = oracle.solve_deq(inst, row_budget=10**6, time_limit=args.time_limit)
        doc = {"status": res.status, "objective": res.objective if res.y else None,
               "y": list(res.y) if res.y else None, "z": list(res.z) if res.z else None}
        status = res.status
    else:
        try:
            result = solve(inst, SolveOptions(
                formulation=args.formulation, use_vis=args.vi, use_metric=args.metric,
                strategy=args.strategy, time_limit=args.time_limit, seed=args.seed,
            ))
        except RuntimeError as exc:
            return _fail(str(exc))
        doc, status = result.to_dict(), result.status.value
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    if status == SolveStatus.OPTIMAL.value:
        return EXIT_OK
    if status in (SolveStatus.TIME_LIMIT.value, SolveStatus.NODE_LIMIT.value):
        return EXIT_LIMIT
    return EXIT_ERROR


def cmd_bench(args) -> int:
    paths = bench.suite_files(args.suite)
    formulations = args.formulations.split(",")
    for f in formulations:
        if f not in (*bench.FORMULATIONS, "deq"):
            return _fail(f"unknown formulation {f!r}")
    configs = bench.grid(formulations, (args.vi,), (args.metric,), (args.strategy,), args.time_limit)
    records = bench.run_suite(paths, configs, workers=args.workers)
    _emit(bench.to_csv(records), args.out)
    if args.summary:
        Path(args.summary).write_text(json.dumps(bench.aggregate(records), indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_generate(args) -> int:
    try:
        if args.shape:
            spec = r_shape(args.shape, args.scenarios, alpha=args.alpha, capacity_ratio=args.capacity_ratio)
        else:
            if None in (args.nodes, args.arcs, args.commodities):
                return _fail("give --shape or all of --nodes, --arcs, --commodities")
            spec = GeneratorSpec(args.nodes, args.arcs, args.commodities, args.scenarios,
                                 capacity_ratio=args.capacity_ratio, alpha=args.alpha)
        out = Path(args.out)
        single = args.count == 1 and out.suffix == ".json"
        if not single:
            out.mkdir(parents=True, exist_ok=True)
        stem = (args.shape or f"N{spec.num_nodes}A{spec.num_arcs}K{spec.num_commodities}").upper()
        for i in range(args.count):
            inst = generate_instance(spec, seed=args.seed + i)
            if args.single_commodity:
                inst = model.single_commodity(inst, 0)
            path = out if single else out / f"{stem}_s{spec.num_scenarios}_{args.seed + i}.json"
            model.save(inst, path)
            print(path)
    except (GeneratorError, OSError, KeyError) as exc:
        return _fail(str(exc))
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        inst = model.load(args.instance)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    problems = model.validate(inst)
    for p in problems:
        print(p, file=sys.stderr)
    if problems:
        return EXIT_ERROR
    print(f"ok: {inst.num_nodes} nodes, {inst.num_arcs} arcs, "
          f"{inst.num_commodities} commodities, {inst.num_scenarios} scenarios")
    return EXIT_OK


def cmd_oracle(args) -> int:
    try:
        inst = _alpha(_load_checked(args.instance), args)
        if args.method == "deq":
            res = oracle.solve_deq(inst, row_budget=10**6, time_limit=args.time_limit)
        else:
            res = oracle.brute_force_design(inst)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    doc = {"method": args.method, "status": res.status,
           "objective": res.objective if res.y else None,
           "y": list(res.y) if res.y else None, "z": list(res.z) if res.z else None}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK if res.status == "optimal" else (EXIT_LIMIT if "limit" in res.status else EXIT_ERROR)


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--vi", action=argparse.BooleanOptionalAction, default=False,
                   help="embed the scenario-creation valid inequalities")
    p.add_argument("--metric", action=argparse.BooleanOptionalAction, default=False,
                   help="strengthen cuts with metric inequalities")
    p.add_argument("--strategy", choices=("tree", "iterative"), default="tree")
    p.add_argument("--time-limit", type=float, default=60.0, help="seconds per run (default 60)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccnd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("instance")
    p.add_argument("--formulation", choices=("bb", "flowmis", "mis", "snc", "deq"), default="flowmis")
    _solver_flags(p)
    p.add_argument("--alpha", type=float, default=None, help="override the instance's alpha")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a formulation grid over a directory of instances")
    p.add_argument("suite")
    p.add_argument("--formulations", default=",".join(bench.FORMULATIONS),
                   help="comma-separated subset of bb,flowmis,mis,snc,deq")
    _solver_flags(p)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--summary", help="write per-group aggregates as JSON here")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("generate", help="write random instances")
    p.add_argument("--shape", choices=sorted(R_SHAPES), type=str.upper)
    p.add_argument("--nodes", type=int)
    p.add_argument("--arcs", type=int)
    p.add_argument("--commodities", type=int)
    p.add_argument("--scenarios", type=int, default=16)
    p.add_argument("--capacity-ratio", type=float, default=GeneratorSpec.capacity_ratio)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--single-commodity", action="store_true", help="keep only commodity 0")
    p.add_argument("--out", required=True, help="directory, or a .json file when --count is 1")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="check an instance file")
    p.add_argument("instance")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("oracle", help="solve by the extensive form or by enumeration")
    p.add_argument("instance")
    p.add_argument("--method", choices=("deq", "brute"), default="deq")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--time-limit", type=float, default=60.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("CCND_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
