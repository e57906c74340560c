"""Repair step: regret insertion, or proposal + neighborhood priority search."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from ..instance import Instance
from ..planner.pbs import Exterior, PbsConfig, SolverFailure, solve_pbs_pc
from ..solution import Conflict, Solution, build_solution
from ..world import DistanceTable
from .legs import WorkingPlan, commit, replan_agent
from .neighborhood import Neighborhood
from .proposal import RepairProposal


class RepairFailure(Exception):
    def __init__(self, reason: str, agents=(), conflicts=()):
        super().__init__(reason)
        self.reason = reason
        self.agents = tuple(agents)
        self.conflicts = tuple(conflicts)


@dataclass
class Candidate:
    solution: Solution
    conflicts: list[Conflict] = field(default_factory=list)  # branch conflicts met on the way
    insertions: list[tuple[int, int, int]] = field(default_factory=list)  # (task, agent, position)


def _to_solution(instance: Instance, plan: WorkingPlan, soft: int = 0) -> Solution:
    return build_solution(instance, plan.sequences, plan.paths, plan.completions, soft)


def repair_neighborhood(
    instance: Instance,
    nbhd: Neighborhood,
    proposal: RepairProposal,
    mode: str,
    distances: DistanceTable,
    config: PbsConfig | None = None,
) -> Candidate:
    """Replan every mutable agent on its proposed sequence, SIPPS low level, exterior frozen."""
    plan = nbhd.plan
    if not nbhd.destroyed:
        return Candidate(nbhd.incumbent)
    mutable = sorted(proposal.sequences)
    exterior_agents = [a for a in range(instance.k) if a not in proposal.sequences]
    exterior = Exterior(
        paths={a: plan.paths[a] for a in exterior_agents},
        completions={t: plan.completions[t] for a in exterior_agents for t in plan.sequences[a]},
    )
    try:
        result = solve_pbs_pc(
            instance,
            proposal.sequences,
            exterior=exterior,
            low_level="sipps",
            mode=mode,
            config=config,
            distances=distances,
            release=nbhd.release,
        )
    except SolverFailure as exc:
        raise RepairFailure(exc.reason, exc.agents, exc.conflicts) from None
    out = plan.copy()
    for a in mutable:
        seq = proposal.sequences[a]
        commit(out, a, seq, result.paths[a], {t: result.completions[t] for t in seq})
    return Candidate(_to_solution(instance, out, result.soft_conflicts), list(result.conflicts))


@dataclass(frozen=True)
class _Spot:
    delta: int
    agent: int
    pos: int


def regret_value(deltas: Sequence[int]) -> float:
    """Second-best minus best insertion cost; infinite with a single option."""
    ordered = sorted(deltas)
    return math.inf if len(ordered) == 1 else ordered[1] - ordered[0]


def repair_regret(instance: Instance, nbhd: Neighborhood, distances: DistanceTable) -> Candidate:
    """Regret-2 reinsertion with MLA* replanning of the receiving agent.

    Only tasks whose destroyed predecessors are already back are candidates.
    A spot's cost is the increase in its agent's final completion; the task
    with the largest best-vs-second-best gap goes first (a single spot counts
    as an infinite gap), ties to the smaller best cost and then the task id.
    """
    if not nbhd.destroyed:
        return Candidate(nbhd.incumbent)
    dag = instance.precedence
    plan = nbhd.plan.copy()
    pending = set(nbhd.destroyed)
    placed: set[int] = set()
    spots: dict[int, list[_Spot]] = {}
    insertions: list[tuple[int, int, int]] = []

    def is_ready(t: int) -> bool:
        return all(p not in pending or p in placed for p in dag.preds[t])

    def spots_for(task: int, agents) -> list[_Spot]:
        out = []
        for a in agents:
            seq = plan.sequences[a]
            lo = 0
            for i, t in enumerate(seq):
                if t in dag.preds[task]:
                    lo = i + 1
            base = plan.cost(a)
            table = plan.others_table(a)
            for pos in range(lo, len(seq) + 1):
                trial = seq[:pos] + (task,) + seq[pos:]
                res = replan_agent(instance, plan, a, trial, pos, distances, nbhd.release, table)
                if res is not None:
                    out.append(_Spot(res[1][trial[-1]] - base, a, pos))
        return out

    all_agents = range(instance.k)
    while pending - placed:
        ready = sorted(t for t in pending - placed if is_ready(t))
        for t in ready:
            if t not in spots:
                spots[t] = spots_for(t, all_agents)
        best = None
        for t in ready:
            options = sorted(spots[t], key=lambda s: (s.delta, s.agent, s.pos))
            if not options:
                raise RepairFailure(f"no feasible insertion for task {t}", tuple(nbhd.owners.values()))
            regret = regret_value([s.delta for s in options])
            key = (-regret, options[0].delta, t)
            if best is None or key < best[0]:
                best = (key, t, options[0])
        _, task, spot = best
        seq = plan.sequences[spot.agent]
        trial = seq[: spot.pos] + (task,) + seq[spot.pos :]
        res = replan_agent(instance, plan, spot.agent, trial, spot.pos, distances, nbhd.release)
        if res is None:
            # the cached spot went stale; recompute this task everywhere and retry
            spots[task] = spots_for(task, all_agents)
            if not spots[task]:
                raise RepairFailure(f"no feasible insertion for task {task}", tuple(nbhd.owners.values()))
            continue
        commit(plan, spot.agent, trial, *res)
        insertions.append((task, spot.agent, spot.pos))
        placed.add(task)
        del spots[task]
        for t in list(spots):
            spots[t] = [s for s in spots[t] if s.agent != spot.agent] + spots_for(t, [spot.agent])
    return Candidate(_to_solution(instance, plan), insertions=insertions)
