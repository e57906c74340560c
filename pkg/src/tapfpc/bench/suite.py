"""Desk-scale benchmark suites: shared seeds, several methods, aggregate reports."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from ..instance import GeneratorConfig, Instance, generate_instance, save_instance
from ..lns import LnsConfig, run_lns
from ..seed import SeedError, build_seed
from ..solution import improvement_metrics, total_precedence_wait, validate_solution
from ..world import DistanceTable, load_builtin_map

REPORT_COLUMNS = (
    "tier",
    "instance",
    "method",
    "mode",
    "seed_soc",
    "final_soc",
    "delta_soc",
    "relative_pct",
    "improved",
    "seed_wait",
    "final_wait",
    "wait_reduction",
    "wait_reduction_pct",
    "iterations",
    "seed_s",
    "destroy_s",
    "proposal_s",
    "solve_s",
    "validate_s",
    "post_refine_s",
)
METHODS = ("regret", "local-pbs", "global-pbs")
MODES = ("hard", "relaxed")


class SuiteFailure(RuntimeError):
    """A final solution failed validation: a solver bug, not a data point."""


@dataclass(frozen=True)
class TierConfig:
    name: str
    map: str
    agents: int
    tasks: int
    prec: int
    count: int
    seed: int = 0

    def generator(self) -> GeneratorConfig:
        return GeneratorConfig(self.map, self.agents, self.tasks, self.prec, self.count, self.seed)


PRESETS = {
    "small": TierConfig("small", "empty-16-16.map", 5, 15, 8, 100, 0),
    "medium": TierConfig("medium", "random-32-32-20.map", 10, 40, 20, 100, 0),
}
PRESET_BUDGETS = {"small": 5.0, "medium": 20.0}


@dataclass(frozen=True)
class SuiteConfig:
    tiers: tuple[TierConfig, ...]
    methods: tuple[str, ...] = ("regret", "global-pbs")
    modes: tuple[str, ...] = ("hard",)
    budget_secs: float | None = 5.0
    budget_iters: int | None = None
    seed: int = 0
    jobs: int = 1
    write_instances: bool = True

    def __post_init__(self) -> None:
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")
        for m in self.modes:
            if m not in MODES:
                raise ValueError(f"unknown mode {m!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "SuiteConfig":
        tiers = []
        for t in doc.get("tiers", []):
            if isinstance(t, str):
                tiers.append(PRESETS[t])
            else:
                base = asdict(PRESETS[t["preset"]]) if "preset" in t else {}
                base.update({k: v for k, v in t.items() if k != "preset"})
                tiers.append(TierConfig(**base))
        return cls(
            tiers=tuple(tiers),
            methods=tuple(doc.get("methods", ("regret", "global-pbs"))),
            modes=tuple(doc.get("modes", ("hard",))),
            budget_secs=doc.get("budget_secs", 5.0),
            budget_iters=doc.get("budget_iters"),
            seed=doc.get("seed", 0),
            jobs=doc.get("jobs", 1),
            write_instances=doc.get("write_instances", True),
        )


def run_stream(suite_seed: int, instance_id: str, method: str, mode: str) -> int:
    digest = hashlib.sha256(f"{suite_seed}|{instance_id}|{method}|{mode}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class SuiteReport:
    rows: list[dict] = field(default_factory=list)
    unseeded: list[str] = field(default_factory=list)
    traces: dict[str, str] = field(default_factory=dict)
    summaries: dict[str, dict] = field(default_factory=dict)

    def aggregates(self) -> dict:
        return aggregate_rows(self.rows, self.summaries)

    def to_csv(self) -> str:
        return rows_to_csv(self.rows)


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r[k] for k in REPORT_COLUMNS})
    return buf.getvalue()


def aggregate_rows(rows: Sequence[dict], summaries: dict | None = None) -> dict:
    """Per (tier, method, mode): improvement frequency, median relative reduction, timing shares."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["tier"], r["method"], r["mode"]), []).append(r)
    out = {}
    for (tier, method, mode), rs in sorted(groups.items()):
        phases = {p: sum(float(r[f"{p}_s"]) for r in rs) for p in ("seed", "destroy", "proposal", "solve", "validate", "post_refine")}
        total = sum(phases.values())
        entry = {
            "runs": len(rs),
            "improvement_frequency": sum(1 for r in rs if int(r["delta_soc"]) > 0) / len(rs),
            "median_relative_pct": statistics.median(float(r["relative_pct"]) for r in rs),
            "mean_delta_soc": statistics.mean(int(r["delta_soc"]) for r in rs),
            "runtime_percent": {p: (100.0 * s / total if total else 0.0) for p, s in phases.items()},
        }
        if summaries:
            counts: dict[str, dict[str, int]] = {}
            for r in rs:
                key = f"{r['tier']}/{r['instance']}/{r['method']}/{r['mode']}"
                for op, c in summaries.get(key, {}).get("operator_counts", {}).items():
                    acc = counts.setdefault(op, {})
                    for name, v in c.items():
                        acc[name] = acc.get(name, 0) + v
            entry["operator_improvement_rate"] = {
                op: ((c["new_best"] + c["improved"]) / c["selected"] if c["selected"] else 0.0)
                for op, c in sorted(counts.items())
            }
        out[f"{tier}/{method}/{mode}"] = entry
    return out


def solve_instance(
    tier: str,
    index: int,
    instance: Instance,
    cfg: SuiteConfig,
    force_assignment: Sequence[Sequence[int]] | None = None,
) -> tuple[list[dict], dict[str, str], dict[str, dict], bool]:
    """One shared seed, then every (method, mode) run of the suite on ``instance``.

    Returns (rows, traces, summaries, seeded); raises SuiteFailure on an
    invalid final solution or a best-so-far trace that goes up.
    """
    distances = DistanceTable(instance.map)
    iid = f"{index:03d}"
    try:
        seed = build_seed(instance, distances, force_assignment=force_assignment)
    except SeedError:
        return [], {}, {}, False
    rows, traces, summaries = [], {}, {}
    for method in cfg.methods:
        for mode in cfg.modes:
            lns_cfg = LnsConfig.for_method(
                method,
                mode=mode,
                budget_secs=cfg.budget_secs if cfg.budget_iters is None else None,
                budget_iters=cfg.budget_iters,
                rng_seed=run_stream(cfg.seed, f"{tier}/{iid}", method, mode),
            )
            result = run_lns(instance, lns_cfg, seed=seed, distances=distances)
            report = validate_solution(instance, result.best)
            if not report.ok:
                raise SuiteFailure(f"{tier}/{iid} {method}/{mode}: invalid final solution {report.to_dict()}")
            series = result.trace.best_series()
            if any(b > a for a, b in zip(series, series[1:])):
                raise SuiteFailure(f"{tier}/{iid} {method}/{mode}: best-so-far trace increased")
            seed_sol, best = result.seed, result.best
            sw, fw = total_precedence_wait(seed_sol), total_precedence_wait(best)
            met = improvement_metrics(seed_sol.soc, best.soc, sw, fw)
            ph = result.trace.phases
            rows.append(
                {
                    "tier": tier,
                    "instance": iid,
                    "method": method,
                    "mode": mode,
                    "seed_soc": seed_sol.soc,
                    "final_soc": best.soc,
                    "delta_soc": met.delta,
                    "relative_pct": round(met.relative, 6),
                    "improved": int(met.improved),
                    "seed_wait": sw,
                    "final_wait": fw,
                    "wait_reduction": met.wait_reduction,
                    "wait_reduction_pct": round(met.wait_reduction_pct, 6),
                    "iterations": len(result.trace.records),
                    **{f"{p}_s": round(ph[p], 6) for p in ph},
                }
            )
            key = f"{tier}/{iid}/{method}/{mode}"
            traces[key] = result.trace.to_csv()
            summaries[key] = result.trace.summary()
    return rows, traces, summaries, True


def _solve_job(job):
    return solve_instance(*job)


def suite_instances(cfg: SuiteConfig) -> list[tuple[str, int, Instance]]:
    out = []
    for tier in cfg.tiers:
        grid = load_builtin_map(tier.map)
        gen = tier.generator()
        for i in range(tier.count):
            out.append((tier.name, i, generate_instance(gen, grid, seed=tier.seed + i)))
    return out


def run_suite(cfg: SuiteConfig, out_dir: str | Path | None = None) -> SuiteReport:
    """Seed every instance once, run each (method, mode), validate, and report.

    Writes ``report.csv``, ``summary.json`` and ``traces/*.csv`` under
    ``out_dir`` when given.
    """
    jobs = [(tier, i, inst, cfg) for tier, i, inst in suite_instances(cfg)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_solve_job, jobs))
    else:
        results = [_solve_job(j) for j in jobs]
    report = SuiteReport()
    for job, (rows, traces, summaries, seeded) in zip(jobs, results):
        if not seeded:
            report.unseeded.append(f"{job[0]}/{job[1]:03d}")
        report.rows.extend(rows)
        report.traces.update(traces)
        report.summaries.update(summaries)
    if out_dir is not None:
        out = Path(out_dir)
        (out / "traces").mkdir(parents=True, exist_ok=True)
        (out / "report.csv").write_text(report.to_csv())
        for key, text in report.traces.items():
            (out / "traces" / (key.replace("/", "_") + ".csv")).write_text(text)
        summary = {
            "aggregates": report.aggregates(),
            "unseeded": report.unseeded,
            "runs": report.summaries,
        }
        (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
        if cfg.write_instances:
            (out / "instances").mkdir(exist_ok=True)
            for tier, i, inst in (j[:3] for j in jobs):
                save_instance(inst, out / "instances" / f"{tier}_{i:03d}.json")
    return report
