"""Agents, tasks, precedence DAG, instance files and the random generator."""

from __future__ import annotations

import bisect
import hashlib
import heapq
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .world import GridMap, builtin_map_path, load_builtin_map, load_map


class InstanceError(ValueError):
    """Raised when an instance is malformed or cannot be loaded."""


class CycleError(InstanceError):
    def __init__(self, member: int):
        super().__init__(f"precedence relation has a cycle through task {member}")
        self.member = member


@dataclass(frozen=True)
class Task:
    id: int
    goal: int


@dataclass(frozen=True)
class AgentSpec:
    id: int
    start: int


@dataclass(frozen=True)
class PrecedenceDag:
    """Ordered task pairs (u, v): v may only complete strictly after u."""

    m: int
    edges: tuple[tuple[int, int], ...]
    preds: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    succs: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        edges = tuple(sorted((int(u), int(v)) for u, v in self.edges))
        if len(set(edges)) != len(edges):
            raise InstanceError("duplicate precedence edge")
        preds: list[list[int]] = [[] for _ in range(self.m)]
        succs: list[list[int]] = [[] for _ in range(self.m)]
        for u, v in edges:
            if u == v:
                raise InstanceError(f"precedence self-loop on task {u}")
            if not (0 <= u < self.m and 0 <= v < self.m):
                raise InstanceError(f"precedence edge ({u},{v}) references an unknown task")
            preds[v].append(u)
            succs[u].append(v)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "preds", tuple(tuple(p) for p in preds))
        object.__setattr__(self, "succs", tuple(tuple(s) for s in succs))
        topological_order(self, self.m)

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class Instance:
    map: GridMap
    agents: tuple[AgentSpec, ...]
    tasks: tuple[Task, ...]
    precedence: PrecedenceDag
    seed: int = 0
    map_file: str = ""

    def __post_init__(self) -> None:
        if not self.agents:
            raise InstanceError("instance needs at least one agent")
        if not self.tasks:
            raise InstanceError("instance needs at least one task")
        if [a.id for a in self.agents] != list(range(len(self.agents))):
            raise InstanceError("agent ids must be 0..k-1 in order")
        if [t.id for t in self.tasks] != list(range(len(self.tasks))):
            raise InstanceError("task ids must be 0..m-1 in order")
        starts = [a.start for a in self.agents]
        if len(set(starts)) != len(starts):
            raise InstanceError("agent starts must be pairwise distinct")
        for a in self.agents:
            if not self.map.passable(a.start):
                raise InstanceError(f"agent {a.id} starts on a blocked cell")
        for t in self.tasks:
            if not self.map.passable(t.goal):
                raise InstanceError(f"task {t.id} goal is a blocked cell")
        if self.precedence.m != len(self.tasks):
            raise InstanceError("precedence relation sized for a different task count")

    @property
    def k(self) -> int:
        return len(self.agents)

    @property
    def m(self) -> int:
        return len(self.tasks)

    def goal(self, task: int) -> int:
        return self.tasks[task].goal

    def start(self, agent: int) -> int:
        return self.agents[agent].start


@dataclass(frozen=True)
class GeneratorConfig:
    map_name: str
    k: int
    m: int
    p: int
    count: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1 or self.m < 1:
            raise InstanceError("k and m must be positive")
        if not 0 <= self.p <= self.m * (self.m - 1) // 2:
            raise InstanceError(f"|P|={self.p} exceeds the acyclic maximum for m={self.m}")


def topological_order(
    dag: PrecedenceDag,
    m: int,
    release: Mapping[int, float] | None = None,
    tasks: Iterable[int] | None = None,
) -> list[int]:
    """Kahn order; ready ties broken by (release bound, task id).

    With ``tasks`` given, only edges inside that subset are considered.
    """
    subset = set(range(m)) if tasks is None else set(tasks)
    indeg = {t: 0 for t in subset}
    for u, v in dag.edges:
        if u in subset and v in subset:
            indeg[v] += 1
    rel = release or {}
    heap = [(rel.get(t, 0), t) for t, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        _, t = heapq.heappop(heap)
        order.append(t)
        for s in dag.succs[t]:
            if s in subset:
                indeg[s] -= 1
                if indeg[s] == 0:
                    heapq.heappush(heap, (rel.get(s, 0), s))
    if len(order) != len(subset):
        raise CycleError(min(t for t, d in indeg.items() if d > 0))
    return order


def transitive_successors(dag: PrecedenceDag, seed: Iterable[int]) -> set[int]:
    closed = set(seed)
    stack = list(closed)
    while stack:
        t = stack.pop()
        for s in dag.succs[t]:
            if s not in closed:
                closed.add(s)
                stack.append(s)
    return closed


def transitive_predecessors(dag: PrecedenceDag, seed: Iterable[int]) -> set[int]:
    closed = set(seed)
    stack = list(closed)
    while stack:
        t = stack.pop()
        for p in dag.preds[t]:
            if p not in closed:
                closed.add(p)
                stack.append(p)
    return closed


def _sample_acyclic_edges(rng: random.Random, m: int, p: int) -> list[tuple[int, int]]:
    perm = list(range(m))
    rng.shuffle(perm)
    # offsets[a] = index of the first pair (a, a+1) in row-major order over a < b
    offsets = [a * (2 * m - a - 1) // 2 for a in range(m)]
    total = m * (m - 1) // 2
    edges = []
    for idx in rng.sample(range(total), p):
        a = bisect.bisect_right(offsets, idx) - 1
        b = a + 1 + (idx - offsets[a])
        edges.append((perm[a], perm[b]))
    return edges


def generate_instance(cfg: GeneratorConfig, grid: GridMap, seed: int | None = None) -> Instance:
    seed = cfg.seed if seed is None else seed
    rng = random.Random(seed)
    component = grid.components()[0]
    if len(component) < cfg.k:
        raise InstanceError(f"map {grid.name!r} cannot host {cfg.k} distinct starts")
    starts = rng.sample(component, cfg.k)
    goals = [rng.choice(component) for _ in range(cfg.m)]
    edges = _sample_acyclic_edges(rng, cfg.m, cfg.p)
    return Instance(
        map=grid,
        agents=tuple(AgentSpec(i, s) for i, s in enumerate(starts)),
        tasks=tuple(Task(i, g) for i, g in enumerate(goals)),
        precedence=PrecedenceDag(cfg.m, tuple(edges)),
        seed=seed,
        map_file=cfg.map_name,
    )


def generate_suite(cfg: GeneratorConfig, grid: GridMap) -> list[Instance]:
    return [generate_instance(cfg, grid, seed=cfg.seed + i) for i in range(cfg.count)]


def map_hash(grid: GridMap) -> str:
    return "sha256:" + hashlib.sha256(grid.to_text().encode()).hexdigest()


def write_instance(instance: Instance) -> str:
    grid = instance.map

    def cell(v: int) -> list[int]:
        return list(grid.coord(v))

    def block(items: list) -> str:
        if not items:
            return "[]"
        body = ",\n".join("    " + json.dumps(x, separators=(", ", ": ")) for x in items)
        return "[\n" + body + "\n  ]"

    agents = [{"id": a.id, "start": cell(a.start)} for a in instance.agents]
    tasks = [{"id": t.id, "goal": cell(t.goal)} for t in instance.tasks]
    prec = [list(e) for e in instance.precedence.edges]
    return (
        "{\n"
        f'  "map_file": {json.dumps(instance.map_file)},\n'
        f'  "map_hash": {json.dumps(map_hash(grid))},\n'
        f'  "seed": {instance.seed},\n'
        f'  "agents": {block(agents)},\n'
        f'  "tasks": {block(tasks)},\n'
        f'  "precedence": {block(prec)}\n'
        "}\n"
    )


def resolve_map(map_file: str, base_dir: str | Path | None = None) -> GridMap:
    if base_dir is not None:
        local = Path(base_dir) / map_file
        if local.is_file():
            return load_map(local)
    if builtin_map_path(map_file) is not None:
        return load_builtin_map(map_file)
    raise InstanceError(f"unknown map reference {map_file!r}")


def read_instance(text: str, base_dir: str | Path | None = None, grid: GridMap | None = None) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"instance is not valid JSON: {exc}") from None
    try:
        map_file = doc["map_file"]
        if grid is None:
            grid = resolve_map(map_file, base_dir)
        if doc.get("map_hash") and doc["map_hash"] != map_hash(grid):
            raise InstanceError(f"map hash mismatch for {map_file!r}")
        agents = tuple(AgentSpec(int(a["id"]), grid.index(*a["start"])) for a in doc["agents"])
        tasks = tuple(Task(int(t["id"]), grid.index(*t["goal"])) for t in doc["tasks"])
        dag = PrecedenceDag(len(tasks), tuple(tuple(e) for e in doc["precedence"]))
        return Instance(grid, agents, tasks, dag, int(doc.get("seed", 0)), map_file)
    except InstanceError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError(f"malformed instance: {exc}") from None


def load_instance(path: str | Path) -> Instance:
    path = Path(path)
    return read_instance(path.read_text(), base_dir=path.parent)


def save_instance(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(write_instance(instance))


def crossing_instance() -> Instance:
    """Two agents, two precedence chains; the fixed swap costs 15, the split costs 9.

    Tasks 0..3 are the goals g1..g4 with g1 < g2 and g3 < g4.
    """
    grid = load_builtin_map("crossing-7-4.map")
    at = grid.index
    return Instance(
        map=grid,
        agents=(AgentSpec(0, at(0, 0)), AgentSpec(1, at(6, 0))),
        tasks=(Task(0, at(1, 3)), Task(1, at(1, 2)), Task(2, at(5, 2)), Task(3, at(5, 3))),
        precedence=PrecedenceDag(4, ((0, 1), (2, 3))),
        seed=0,
        map_file="crossing-7-4.map",
    )
