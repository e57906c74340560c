"""Proposal construction: reinsert destroyed tasks by cheapest static detour."""

from __future__ import annotations

from dataclasses import dataclass

from ..instance import Instance, topological_order
from ..schedule import estimate_completions
from ..world import UNREACHABLE, DistanceTable
from .neighborhood import Neighborhood


SCORES = ("time", "distance")


class ProposalFailure(Exception):
    def __init__(self, task: int):
        super().__init__(f"no admissible insertion for task {task}")
        self.task = task


@dataclass(frozen=True)
class RepairProposal:
    sequences: dict[int, tuple[int, ...]]  # every mutable agent
    touched: frozenset[int]  # agents that received at least one task
    estimates: dict[int, int]
    order: tuple[int, ...]
    release: dict[int, int]  # release bounds after tightening along the insertion order


def mutable_agents(
    instance: Instance, nbhd: Neighborhood, scope: str, distances: DistanceTable, radius: int = 2
) -> frozenset[int]:
    """All agents (global) or the destroyed tasks' owners plus the ``radius`` nearest others (local)."""
    if scope == "global":
        return frozenset(range(instance.k))
    if scope != "local":
        raise ValueError(f"unknown scope {scope!r}")
    owners = set(nbhd.owners.values())
    if not nbhd.destroyed:
        return frozenset(owners)
    grid = instance.map
    coords = [grid.coord(instance.goal(t)) for t in sorted(nbhd.destroyed)]
    cx = sum(c for c, _ in coords) / len(coords)
    cy = sum(r for _, r in coords) / len(coords)
    centre = min(grid.passable_cells(), key=lambda v: ((grid.coord(v)[0] - cx) ** 2 + (grid.coord(v)[1] - cy) ** 2, v))
    def reach(a: int) -> float:
        seq = nbhd.plan.sequences[a]
        spots = [instance.start(a)] + ([instance.goal(seq[-1])] if seq else [])
        return min(distances.distance(centre, s) for s in spots)
    others = sorted((reach(a), a) for a in range(instance.k) if a not in owners)
    return frozenset(owners | {a for _, a in others[:radius]})


def build_proposal(
    instance: Instance,
    nbhd: Neighborhood,
    scope: str,
    distances: DistanceTable,
    radius: int = 2,
    score: str = "time",
) -> RepairProposal:
    """Insert each destroyed task, in a fixed topological order, at its cheapest admissible spot.

    Spots are ranked by their insertion detour. With ``score="distance"`` the
    detour is the pure path-length one, d(prev, g) + d(g, next) - d(prev, next);
    with ``score="time"`` (default) it is the increase of the touched agents'
    collision-free completion estimates, i.e. the same shortest-path detour plus
    any precedence waiting it induces. The other measure breaks ties, then the
    smaller agent id and position.

    Admissible means: after the agent's own predecessors of the task, the
    touched agents' collision-free completion estimates are precedence
    consistent, finish before any frozen successor, and do not need a goal
    cell after an untouched agent has parked there. Touched agents must also
    end on distinct cells nobody else parks on.
    """
    if score not in SCORES:
        raise ValueError(f"unknown proposal score {score!r}")
    by_distance = score == "distance"
    dag = instance.precedence
    plan = nbhd.plan
    mutable = nbhd.mutable or mutable_agents(instance, nbhd, scope, distances, radius)
    seqs = {a: list(plan.sequences[a]) for a in mutable}
    touched: set[int] = set()
    release = dict(nbhd.release)
    order = topological_order(dag, instance.m, release=release, tasks=nbhd.destroyed)
    estimates: dict[int, int] = {}

    def frozen_completions() -> dict[int, int]:
        return {
            t: plan.completions[t]
            for a, s in enumerate(plan.sequences)
            if a not in touched
            for t in s
        }

    parks = [(a, path[-1], len(path) - 1) for a, path in enumerate(plan.paths)]
    for task in order:
        g = instance.goal(task)
        fixed = frozen_completions()
        best = None
        for a in sorted(mutable):
            seq = seqs[a]
            view = touched | {a}
            base = estimate_completions(instance, {b: seqs[b] for b in view}, distances, fixed, release)
            base_soc = _view_soc(base, seqs, view) if base is not None else 0
            lo = 0
            for i, t in enumerate(seq):
                if t in dag.preds[task]:
                    lo = i + 1
            for pos in range(lo, len(seq) + 1):
                prev = instance.start(a) if pos == 0 else instance.goal(seq[pos - 1])
                d_in = distances.distance(prev, g)
                if d_in == UNREACHABLE:
                    continue
                if pos < len(seq):
                    nxt = instance.goal(seq[pos])
                    detour = d_in + distances.distance(g, nxt) - distances.distance(prev, nxt)
                else:
                    detour = d_in
                if by_distance and best is not None and detour > best[0][0]:
                    continue
                trial = seq[:pos] + [task] + seq[pos:]
                est = _admissible(instance, seqs, touched | {a}, a, trial, fixed, release, parks, distances)
                if est is None:
                    continue
                delay = _view_soc(est, {**seqs, a: trial}, view) - base_soc
                key = (detour, delay, a, pos) if by_distance else (delay, detour, a, pos)
                if best is None or key < best[0]:
                    best = (key, trial, est)
        if best is None:
            raise ProposalFailure(task)
        (_, _, a, _), trial, est = best
        seqs[a] = trial
        touched.add(a)
        estimates = est
        for s in dag.succs[task]:
            if s in release:
                release[s] = max(release[s], est[task] + 1)
    return RepairProposal(
        sequences={a: tuple(s) for a, s in seqs.items()},
        touched=frozenset(touched),
        estimates=estimates,
        order=tuple(order),
        release=release,
    )


def _view_soc(est, seqs, view) -> int:
    return sum(est[seqs[b][-1]] for b in view if seqs[b])


def _admissible(instance, seqs, touched, agent, trial, fixed, release, parks, distances):
    dag = instance.precedence
    view = {b: (trial if b == agent else seqs[b]) for b in touched}
    est = estimate_completions(instance, view, distances, fixed, release)
    if est is None:
        return None
    parked_at: dict[int, int] = {}
    for b, v, t in parks:
        if b not in touched:
            parked_at[v] = min(parked_at.get(v, t), t)
    for s in view.values():
        for t in s:
            for succ in dag.succs[t]:
                if succ not in est and succ in fixed and est[t] >= fixed[succ]:
                    return None
            p = parked_at.get(instance.goal(t))
            if p is not None and est[t] >= p:
                return None
    finals = [instance.goal(s[-1]) for s in view.values() if s]
    if len(set(finals)) != len(finals) or any(f in parked_at for f in finals):
        return None
    return est
