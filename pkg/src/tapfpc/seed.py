"""Greedy precedence-aware assignment and the fixed-assignment seed solve."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

from .instance import Instance
from .schedule import estimate_completions
from .planner.pbs import PbsConfig, SolverFailure, solve_pbs_pc
from .solution import Solution, build_solution, validate_solution
from .world import UNREACHABLE, DistanceTable

Assignment = tuple[tuple[int, ...], ...]


class SeedError(RuntimeError):
    """No feasible fixed-assignment solution was found for the instance."""


def greedy_assign(instance: Instance, distances: DistanceTable) -> Assignment:
    """Repeatedly append the (ready task, agent) pair with the smallest estimated completion.

    A task is ready once all its predecessors are assigned. The estimate is
    the agent's estimated finish plus the leg distance (at least one step
    after a previous task), floored by one step after the latest predecessor
    estimate. Ties go to the smaller agent id, then the smaller task id.
    """
    dag = instance.precedence
    seqs: list[list[int]] = [[] for _ in range(instance.k)]
    finish = [0] * instance.k
    pos = [a.start for a in instance.agents]
    est: dict[int, int] = {}
    missing = [len(dag.preds[t]) for t in range(instance.m)]
    ready = {t for t in range(instance.m) if missing[t] == 0}
    while ready:
        best = None
        for t in sorted(ready):
            g = instance.goal(t)
            release = max((est[p] + 1 for p in dag.preds[t]), default=0)
            for a in range(instance.k):
                d = distances.distance(pos[a], g)
                if d == UNREACHABLE:
                    continue
                if seqs[a]:
                    d = max(d, 1)
                key = (max(finish[a] + d, release), a, t)
                if best is None or key < best:
                    best = key
        if best is None:
            raise SeedError("some ready task is unreachable for every agent")
        e, a, t = best
        seqs[a].append(t)
        finish[a] = est[t] = int(e)
        pos[a] = instance.goal(t)
        ready.discard(t)
        for s in dag.succs[t]:
            missing[s] -= 1
            if missing[s] == 0:
                ready.add(s)
    _separate_final_goals(instance, seqs, distances)
    return tuple(tuple(s) for s in seqs)


def _separate_final_goals(instance: Instance, seqs: list[list[int]], distances: DistanceTable) -> None:
    """Two agents cannot both park on one vertex forever: merge such endings.

    The last task of one agent is appended to the other (which then finishes
    with two visits to that vertex), provided the result stays consistent
    with the precedence relation.
    """
    for _ in range(instance.m):
        ends: dict[int, int] = {}
        clash = None
        for a, seq in enumerate(seqs):
            if not seq:
                continue
            g = instance.goal(seq[-1])
            if g in ends:
                clash = (ends[g], a)
                break
            ends[g] = a
        if clash is None:
            return
        est = estimate_completions(instance, dict(enumerate(seqs)), distances)
        a, b = clash
        if est is not None and est[seqs[a][-1]] > est[seqs[b][-1]]:
            a, b = b, a
        for donor, taker in ((a, b), (b, a)):
            trial = [list(s) for s in seqs]
            trial[taker].append(trial[donor].pop())
            if estimate_completions(instance, dict(enumerate(trial)), distances) is not None:
                seqs[:] = trial
                break
        else:
            return


@dataclass(frozen=True)
class SeedResult:
    solution: Solution
    assignment: Assignment
    seconds: float
    nodes: int


SEED_PBS = PbsConfig(max_nodes=20000, time_limit=60.0)


def solve_assignment(
    instance: Instance,
    assignment: Sequence[Sequence[int]],
    distances: DistanceTable,
    config: PbsConfig = SEED_PBS,
) -> tuple[Solution, int]:
    """Whole-instance MLA*-based priority search for a fixed assignment."""
    result = solve_pbs_pc(
        instance,
        {a: tuple(seq) for a, seq in enumerate(assignment)},
        low_level="mla",
        mode="hard",
        config=config,
        distances=distances,
    )
    sol = build_solution(
        instance, assignment, [result.paths[a] for a in range(instance.k)], result.completions
    )
    return sol, result.nodes


def build_seed(
    instance: Instance,
    distances: DistanceTable | None = None,
    force_assignment: Sequence[Sequence[int]] | None = None,
    config: PbsConfig = SEED_PBS,
) -> SeedResult:
    """Greedy assignment (or ``force_assignment``) solved to a validated solution."""
    t0 = time.perf_counter()
    distances = distances or DistanceTable(instance.map)
    if force_assignment is not None:
        assignment = tuple(tuple(s) for s in force_assignment)
        if len(assignment) != instance.k:
            raise SeedError("forced assignment must list one sequence per agent")
    else:
        assignment = greedy_assign(instance, distances)
    try:
        sol, nodes = solve_assignment(instance, assignment, distances, config)
    except SolverFailure as exc:
        raise SeedError(f"seed solve failed: {exc.reason}") from None
    report = validate_solution(instance, sol)
    if not report.ok:
        raise SeedError(f"seed failed validation: {report.to_dict()}")
    return SeedResult(sol, assignment, time.perf_counter() - t0, nodes)
