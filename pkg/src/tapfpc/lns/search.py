"""The improvement loop: destroy, repair, validate, accept, adapt."""

from __future__ import annotations

import csv
import io
import json
import random
import time
from dataclasses import dataclass, field, replace

from ..instance import Instance
from ..planner.pbs import PbsConfig, SolverFailure
from ..seed import SeedResult, build_seed, solve_assignment
from ..solution import Solution, improvement_metrics, total_precedence_wait, validate_solution
from ..world import DistanceTable
from .acceptance import AcceptanceState, accept_candidate
from .neighborhood import close_and_excise
from .operators import OPERATORS, Diagnostics, Portfolio, seed_tasks
from .proposal import SCORES, ProposalFailure, build_proposal, mutable_agents
from .repair import RepairFailure, repair_neighborhood, repair_regret

TRACE_COLUMNS = (
    "iter",
    "wall_ms",
    "operator",
    "outcome",
    "candidate_soc",
    "incumbent_soc",
    "best_soc",
    "temperature",
)
PHASES = ("seed", "destroy", "proposal", "solve", "validate", "post_refine")
OUTCOMES = ("new_best", "improved", "accepted", "rejected", "failed")


@dataclass(frozen=True)
class LnsConfig:
    seed_size: int = 2
    repair: str = "neighborhood"  # or "regret"
    scope: str = "global"  # or "local"
    mode: str = "hard"  # or "relaxed"
    budget_secs: float | None = 5.0
    budget_iters: int | None = None
    rng_seed: int = 0
    local_radius: int = 2
    proposal_score: str = "time"  # or "distance"
    pbs: PbsConfig = PbsConfig()
    operators: tuple[str, ...] = OPERATORS
    post_refine: bool = True

    def __post_init__(self) -> None:
        if self.seed_size < 1:
            raise ValueError("destroy seed size must be at least 1")
        if self.repair not in ("neighborhood", "regret"):
            raise ValueError(f"unknown repair {self.repair!r}")
        if self.scope not in ("global", "local"):
            raise ValueError(f"unknown scope {self.scope!r}")
        if self.mode not in ("hard", "relaxed"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.proposal_score not in SCORES:
            raise ValueError(f"unknown proposal score {self.proposal_score!r}")
        if self.budget_secs is None and self.budget_iters is None:
            raise ValueError("need a wall-clock or an iteration budget")

    @property
    def deterministic(self) -> bool:
        return self.budget_iters is not None

    @classmethod
    def for_method(cls, method: str, **kw) -> "LnsConfig":
        presets = {
            "regret": dict(repair="regret", scope="global"),
            "local-pbs": dict(repair="neighborhood", scope="local"),
            "global-pbs": dict(repair="neighborhood", scope="global"),
        }
        if method not in presets:
            raise ValueError(f"unknown method {method!r}")
        return cls(**presets[method], **kw)


@dataclass
class IterationRecord:
    iteration: int
    wall_ms: float | None
    operator: str
    outcome: str
    candidate_soc: int | None
    incumbent_soc: int
    best_soc: int
    temperature: float


@dataclass
class RunTrace:
    records: list[IterationRecord] = field(default_factory=list)
    phases: dict[str, float] = field(default_factory=lambda: {p: 0.0 for p in PHASES})
    operator_counts: dict[str, dict[str, int]] = field(
        default_factory=lambda: {op: {"selected": 0, **{o: 0 for o in OUTCOMES}} for op in OPERATORS}
    )

    def best_series(self) -> list[int]:
        return [r.best_soc for r in self.records]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.records:
            w.writerow(
                [
                    r.iteration,
                    "" if r.wall_ms is None else f"{r.wall_ms:.3f}",
                    r.operator,
                    r.outcome,
                    "" if r.candidate_soc is None else r.candidate_soc,
                    r.incumbent_soc,
                    r.best_soc,
                    repr(r.temperature),
                ]
            )
        return buf.getvalue()

    def summary(self) -> dict:
        total = sum(self.phases.values())
        improving = {}
        for op, c in self.operator_counts.items():
            n = c["selected"]
            improving[op] = (c["new_best"] + c["improved"]) / n if n else 0.0
        return {
            "iterations": len(self.records),
            "phase_seconds": dict(self.phases),
            "phase_percent": {p: (100.0 * s / total if total else 0.0) for p, s in self.phases.items()},
            "operator_counts": {op: dict(c) for op, c in self.operator_counts.items()},
            "operator_improvement_rate": improving,
        }


@dataclass
class LnsResult:
    best: Solution
    seed: Solution
    trace: RunTrace
    refined: bool

    def metrics(self) -> dict:
        m = improvement_metrics(
            self.seed.soc,
            self.best.soc,
            total_precedence_wait(self.seed),
            total_precedence_wait(self.best),
        )
        return {"seed_soc": self.seed.soc, "final_soc": self.best.soc, **m.to_dict()}


def post_refine(
    instance: Instance, best: Solution, distances: DistanceTable, config: PbsConfig | None = None
) -> Solution:
    """Whole-instance re-solve with the assignment fixed; kept only if strictly better and valid."""
    try:
        refined, _ = solve_assignment(instance, best.sequences, distances, config or PbsConfig(time_limit=None))
    except SolverFailure:
        return best
    if refined.soc < best.soc and validate_solution(instance, refined).ok:
        return refined
    return best


def run_lns(
    instance: Instance,
    config: LnsConfig,
    seed: SeedResult | None = None,
    distances: DistanceTable | None = None,
) -> LnsResult:
    distances = distances or DistanceTable(instance.map)
    trace = RunTrace()
    clock = time.perf_counter
    start = clock()
    if seed is None:
        seed = build_seed(instance, distances)
    trace.phases["seed"] += seed.seconds
    rng = random.Random(config.rng_seed)
    portfolio = Portfolio(tuple(config.operators))
    pbs_config = config.pbs
    if config.deterministic:
        pbs_config = replace(pbs_config, time_limit=None)
    relaxed = config.mode == "relaxed"
    state = AcceptanceState.from_seed(seed.solution.soc, relaxed=relaxed)
    diagnostics = Diagnostics()
    incumbent = best = seed.solution
    inc_soft = 0
    loop_start = clock()
    it = 0
    while True:
        if config.budget_iters is not None and it >= config.budget_iters:
            break
        if config.budget_secs is not None and clock() - loop_start >= config.budget_secs:
            break
        diagnostics.prune(it)
        temperature = state.temperature
        op = portfolio.select(rng)
        trace.operator_counts[op]["selected"] += 1
        cand = None
        cand_soft = 0

        t = clock()
        seeds = seed_tasks(op, instance, incumbent, distances, diagnostics, config.seed_size, rng)
        nbhd = close_and_excise(instance, incumbent, seeds, distances)
        trace.phases["destroy"] += clock() - t
        if nbhd.failed:
            diagnostics.failed_agents = nbhd.failed_agents
        else:
            try:
                if config.repair == "regret":
                    t = clock()
                    cand = repair_regret(instance, nbhd, distances).solution
                    trace.phases["solve"] += clock() - t
                else:
                    t = clock()
                    nbhd.mutable = mutable_agents(instance, nbhd, config.scope, distances, config.local_radius)
                    proposal = build_proposal(
                        instance, nbhd, config.scope, distances, config.local_radius, config.proposal_score
                    )
                    trace.phases["proposal"] += clock() - t
                    t = clock()
                    result = repair_neighborhood(instance, nbhd, proposal, config.mode, distances, pbs_config)
                    trace.phases["solve"] += clock() - t
                    diagnostics.record(it, result.conflicts)
                    cand = result.solution
            except ProposalFailure:
                trace.phases["proposal"] += clock() - t
                diagnostics.failed_agents = nbhd.affected_agents
            except RepairFailure as exc:
                trace.phases["solve"] += clock() - t
                diagnostics.record(it, exc.conflicts)
                diagnostics.failed_agents = exc.agents or nbhd.affected_agents

        valid = False
        if cand is not None:
            t = clock()
            report = validate_solution(instance, cand)
            trace.phases["validate"] += clock() - t
            valid = report.ok
            if not valid:
                if relaxed and report.only_conflicts():
                    cand_soft = report.conflict_count
                    diagnostics.record(it, report.vertex_conflicts + report.edge_conflicts)
                else:
                    cand = None  # hard mode keeps only conflict-free realisations

        if cand is None:
            outcome = "failed"
            state.decay()
        else:
            accepted = accept_candidate(cand.soc, incumbent.soc, state, cand_soft, inc_soft)
            if not accepted:
                outcome = "rejected"
            else:
                if valid and cand.soc < best.soc:
                    outcome = "new_best"
                    best = cand
                elif cand.soc < incumbent.soc:
                    outcome = "improved"
                else:
                    outcome = "accepted"
                incumbent, inc_soft = cand, cand_soft
        portfolio.update(op, outcome)
        trace.operator_counts[op][outcome] += 1
        trace.records.append(
            IterationRecord(
                iteration=it,
                wall_ms=None if config.deterministic else 1000.0 * (clock() - start),
                operator=op,
                outcome=outcome,
                candidate_soc=None if cand is None else cand.soc,
                incumbent_soc=incumbent.soc,
                best_soc=best.soc,
                temperature=temperature,
            )
        )
        it += 1

    refined = False
    if config.post_refine:
        t = clock()
        out = post_refine(instance, best, distances, replace(pbs_config, time_limit=None if config.deterministic else 10.0))
        trace.phases["post_refine"] += clock() - t
        refined = out is not best
        best = out
    return LnsResult(best=best, seed=seed.solution, trace=trace, refined=refined)
