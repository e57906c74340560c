"""Command line: generate, solve, validate, oracle, suite."""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from pathlib import Path

from ..instance import GeneratorConfig, InstanceError, generate_suite, load_instance, save_instance
from ..lns import LnsConfig, run_lns
from ..lns.proposal import SCORES
from ..seed import SeedError, build_seed
from ..solution import read_solution, validate_solution, write_solution
from ..world import builtin_map_path, load_map
from .oracle import OracleRefused, brute_force_optimum
from .suite import METHODS, MODES, SuiteConfig, SuiteFailure, run_suite


def _cmd_generate(args) -> int:
    map_path = Path(args.map)
    if not map_path.is_file():
        builtin = builtin_map_path(args.map)
        if builtin is None:
            print(f"error: map {args.map!r} not found", file=sys.stderr)
            return 2
        map_path = builtin
    grid = load_map(map_path)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if builtin_map_path(map_path.name) is None or map_path.resolve() != builtin_map_path(map_path.name).resolve():
        shutil.copyfile(map_path, out / map_path.name)
    cfg = GeneratorConfig(map_path.name, args.agents, args.tasks, args.prec, args.count, args.seed)
    for i, inst in enumerate(generate_suite(cfg, grid)):
        save_instance(inst, out / f"instance_{i:03d}.json")
    print(f"wrote {args.count} instances to {out}")
    return 0


def _cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    cfg = LnsConfig.for_method(
        args.method,
        mode=args.mode,
        budget_secs=None if args.budget_iters is not None else args.budget_secs,
        budget_iters=args.budget_iters,
        rng_seed=args.seed,
        local_radius=args.local_agent_radius,
        proposal_score=args.proposal_score,
    )
    try:
        result = run_lns(instance, cfg)
    except SeedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = validate_solution(instance, result.best)
    if args.trace:
        Path(args.trace).write_text(result.trace.to_csv())
    if args.out:
        Path(args.out).write_text(write_solution(instance, result.best))
    summary = {"metrics": result.metrics(), "trace": result.trace.summary(), "valid": report.ok}
    print(json.dumps(summary, indent=1, sort_keys=True))
    return 0 if report.ok else 1


def _cmd_validate(args) -> int:
    instance = load_instance(args.instance)
    sol = read_solution(instance, Path(args.solution).read_text())
    report = validate_solution(instance, sol)
    doc = report.to_dict()
    doc["soc"] = sol.soc
    print(json.dumps(doc, indent=1))
    return 0 if report.ok else 1


def _cmd_oracle(args) -> int:
    instance = load_instance(args.instance)
    try:
        print(brute_force_optimum(instance))
    except OracleRefused as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def _cmd_suite(args) -> int:
    doc = json.loads(Path(args.config).read_text())
    if args.jobs is not None:
        doc["jobs"] = args.jobs
    cfg = SuiteConfig.from_dict(doc)
    try:
        report = run_suite(cfg, args.out)
    except SuiteFailure as exc:
        print(f"suite failure: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(report.aggregates(), indent=1, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tapfpc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write random instances")
    g.add_argument("--map", required=True, help="map file or bundled map name")
    g.add_argument("--agents", type=int, required=True)
    g.add_argument("--tasks", type=int, required=True)
    g.add_argument("--prec", type=int, required=True)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_generate)

    s = sub.add_parser("solve", help="seed and improve one instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--method", choices=METHODS, default="global-pbs")
    s.add_argument("--mode", choices=MODES, default="hard")
    budget = s.add_mutually_exclusive_group()
    budget.add_argument("--budget-secs", type=float, default=5.0)
    budget.add_argument("--budget-iters", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--local-agent-radius", type=int, default=2, help="extra agents in local scope")
    s.add_argument("--proposal-score", choices=SCORES, default="time", help="insertion ranking")
    s.add_argument("--trace", help="write the per-iteration trace CSV here")
    s.add_argument("--out", help="write the solution JSON here")
    s.set_defaults(func=_cmd_solve)

    v = sub.add_parser("validate", help="check a solution file")
    v.add_argument("--instance", required=True)
    v.add_argument("--solution", required=True)
    v.set_defaults(func=_cmd_validate)

    o = sub.add_parser("oracle", help="exact optimum of a tiny instance")
    o.add_argument("--instance", required=True)
    o.set_defaults(func=_cmd_oracle)

    u = sub.add_parser("suite", help="run a benchmark suite")
    u.add_argument("--config", required=True)
    u.add_argument("--out", required=True)
    u.add_argument("--jobs", type=int)
    u.set_defaults(func=_cmd_suite)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InstanceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
