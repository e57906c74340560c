"""Priority-based search for fixed task sequences under precedence constraints.

A depth-first search over partial priority orders. Each node holds one path
per planned agent; an agent is planned against the frozen exterior plus the
paths of every agent ranked above it. On the first inter-agent conflict the
node branches on the two orderings of the pair.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from ..instance import Instance
from ..schedule import estimate_completions
from ..solution import Conflict, find_conflicts
from ..world import DistanceTable
from .bounds import derive_stage_bounds
from .mla import plan_mla_star
from .reservations import ReservationTable
from .sipps import plan_sipps

LOW_LEVEL: dict[str, Callable] = {"mla": plan_mla_star, "sipps": plan_sipps}


class SolverFailure(Exception):
    """The priority search found no solution within its limits."""

    def __init__(self, reason: str, agents: Sequence[int] = (), conflicts: Sequence[Conflict] = ()):
        super().__init__(reason)
        self.reason = reason
        self.agents = tuple(agents)
        self.conflicts = tuple(conflicts)


@dataclass(frozen=True)
class PbsConfig:
    max_nodes: int = 5000
    time_limit: float | None = 2.0
    max_replans_factor: int = 20  # replans per node update, times the agent count
    max_expansions: int | None = 200_000  # per low-level call


@dataclass
class Exterior:
    """Agents that are not replanned: their paths and their task completions."""

    paths: Mapping[int, Sequence[int]] = field(default_factory=dict)
    completions: Mapping[int, int] = field(default_factory=dict)

    def reservations(self, soft_transit: bool = False) -> ReservationTable:
        table = ReservationTable()
        for a in sorted(self.paths):
            table.add_path(self.paths[a], soft_transit=soft_transit)
        return table


@dataclass
class PbsResult:
    paths: dict[int, tuple[int, ...]]
    completions: dict[int, int]
    soft_conflicts: int
    nodes: int
    conflicts: list[Conflict]
    soc: int


@dataclass
class _Node:
    higher: dict[int, set[int]]  # agent -> agents ranked directly above it
    paths: dict[int, tuple[int, ...]]
    completions: dict[int, int]
    soft: dict[int, int]
    soc: int = 0


def _soc(completions: Mapping[int, int], sequences: Mapping[int, Sequence[int]]) -> int:
    return sum(completions[seq[-1]] for seq in sequences.values() if seq)


def solve_pbs_pc(
    instance: Instance,
    sequences: Mapping[int, Sequence[int]],
    exterior: Exterior | None = None,
    low_level: str = "mla",
    mode: str = "hard",
    config: PbsConfig | None = None,
    distances: DistanceTable | None = None,
    release: Mapping[int, int] | None = None,
) -> PbsResult:
    """Plan every agent in ``sequences`` from t=0; raise SolverFailure if none found.

    In relaxed mode the exterior's in-transit occupancies are soft (parking
    stays hard) and the result reports how many soft hits remain.
    """
    if mode not in ("hard", "relaxed"):
        raise ValueError(f"unknown conflict mode {mode!r}")
    plan = LOW_LEVEL[low_level]
    config = config or PbsConfig()
    exterior = exterior or Exterior()
    distances = distances or DistanceTable(instance.map)
    release = dict(release or {})
    agents = sorted(sequences)
    seqs = {a: tuple(sequences[a]) for a in agents}
    goals = [t.goal for t in instance.tasks]
    dag = instance.precedence
    base_table = exterior.reservations(soft_transit=(mode == "relaxed"))
    fixed_ext = dict(exterior.completions)
    deadline = None if config.time_limit is None else time.monotonic() + config.time_limit
    seen_conflicts: list[Conflict] = []

    estimates = estimate_completions(instance, seqs, distances, fixed_ext, release)
    if estimates is None:
        raise SolverFailure("sequences are inconsistent with the precedence relation", agents)
    base_order = sorted(agents, key=lambda a: (min((estimates[t] for t in seqs[a]), default=1 << 30), a))
    rank = {a: i for i, a in enumerate(base_order)}
    owner = {t: a for a in agents for t in seqs[a]}

    def ancestors(node: _Node, a: int) -> set[int]:
        out: set[int] = set()
        stack = list(node.higher.get(a, ()))
        while stack:
            b = stack.pop()
            if b not in out:
                out.add(b)
                stack.extend(node.higher.get(b, ()))
        return out

    def replan(node: _Node, a: int, above: set[int]) -> bool:
        table = base_table.copy()
        fixed = dict(fixed_ext)
        for b in sorted(above):
            if b in node.paths:
                table.add_path(node.paths[b])
                for t in seqs[b]:
                    fixed[t] = node.completions[t]
        interior = dict(estimates)
        interior.update(node.completions)
        bounds = derive_stage_bounds({a: seqs[a]}, dag, goals, distances, fixed, interior, release)
        if bounds is None:
            return False
        result = plan(
            instance.map,
            instance.start(a),
            [goals[t] for t in seqs[a]],
            bounds[a],
            table,
            distances,
            max_expansions=config.max_expansions,
        )
        if result is None:
            return False
        node.paths[a] = result.path
        for t, c in zip(seqs[a], result.completions):
            node.completions[t] = c
        node.soft[a] = result.soft_conflicts
        return True

    def update(node: _Node, queue: set[int]) -> bool:
        budget = config.max_replans_factor * max(len(agents), 1)
        while queue:
            budget -= 1
            if budget < 0:
                return False
            anc = {a: ancestors(node, a) for a in queue}
            ready = [a for a in queue if not (anc[a] & queue)]
            a = min(ready or queue, key=rank.__getitem__)
            queue.discard(a)
            if not replan(node, a, anc[a]):
                return False
            for b in agents:
                if b == a or b not in node.paths:
                    continue
                if a in ancestors(node, b) and find_conflicts(
                    {a: node.paths[a], b: node.paths[b]}, first_only=True
                ):
                    queue.add(b)
            for t in seqs[a]:
                for s in dag.succs[t]:
                    b = owner.get(s)
                    if b is not None and b != a and s in node.completions and node.completions[s] <= node.completions[t]:
                        queue.add(b)
        node.soc = _soc(node.completions, seqs)
        return True

    root = _Node({}, {}, {}, {})
    if not update(root, set(agents)):
        raise SolverFailure("root planning failed", agents)
    stack = [root]
    nodes = 1
    while stack:
        if deadline is not None and time.monotonic() > deadline:
            raise SolverFailure("time limit", agents, seen_conflicts)
        node = stack.pop()
        conflicts = find_conflicts(node.paths, first_only=True)
        if not conflicts:
            return PbsResult(
                paths=dict(node.paths),
                completions=dict(node.completions),
                soft_conflicts=sum(node.soft.values()),
                nodes=nodes,
                conflicts=seen_conflicts,
                soc=node.soc,
            )
        c = conflicts[0]
        seen_conflicts.append(c)
        children = []
        for hi, lo in ((c.a, c.b), (c.b, c.a)):
            if lo in ancestors(node, hi):
                continue  # would close a priority cycle
            nodes += 1
            if nodes > config.max_nodes:
                raise SolverFailure("node limit", agents, seen_conflicts)
            child = _Node(
                {x: set(ys) for x, ys in node.higher.items()},
                dict(node.paths),
                dict(node.completions),
                dict(node.soft),
            )
            child.higher.setdefault(lo, set()).add(hi)
            if update(child, {lo}):
                children.append(child)
        children.sort(key=lambda n: n.soc, reverse=True)
        stack.extend(children)
    raise SolverFailure("priority tree exhausted", agents, seen_conflicts)
