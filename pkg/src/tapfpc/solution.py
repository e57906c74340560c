"""Solution model, feasibility validation, objective and diagnostic metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .instance import Instance

Path = tuple[int, ...]


@dataclass(frozen=True)
class TaskTiming:
    arrival: int
    completion: int


@dataclass(frozen=True)
class Solution:
    """Per-agent task sequences, one timed path per agent, per-task timings.

    ``paths[i][t]`` is agent i's vertex at timestep t; after the last entry the
    agent stays parked on its final vertex.
    """

    sequences: tuple[tuple[int, ...], ...]
    paths: tuple[Path, ...]
    timings: Mapping[int, TaskTiming]
    soft_conflicts: int = 0

    @property
    def soc(self) -> int:
        return sum_of_costs(self)

    def completion(self, task: int) -> int:
        return self.timings[task].completion

    def owner_map(self) -> dict[int, int]:
        return {t: a for a, seq in enumerate(self.sequences) for t in seq}

    def completions(self) -> dict[int, int]:
        return {t: tm.completion for t, tm in self.timings.items()}


def position_at(path: Sequence[int], t: int) -> int:
    return path[t] if t < len(path) else path[-1]


def derive_arrival(path: Sequence[int], goal: int, completion: int, floor: int) -> int:
    """Start of the final in-place stay at ``goal`` that ends at ``completion``."""
    t = completion
    while t - 1 >= floor and position_at(path, t - 1) == goal:
        t -= 1
    return t


def build_solution(
    instance: Instance,
    sequences: Sequence[Sequence[int]],
    paths: Sequence[Sequence[int]],
    completions: Mapping[int, int],
    soft_conflicts: int = 0,
) -> Solution:
    timings = {}
    for agent, seq in enumerate(sequences):
        path = paths[agent]
        floor = 0
        for task in seq:
            c = completions[task]
            # a visit starts no earlier than the step after the previous completion
            timings[task] = TaskTiming(derive_arrival(path, instance.goal(task), c, floor), c)
            floor = c + 1
    return Solution(
        sequences=tuple(tuple(s) for s in sequences),
        paths=tuple(tuple(p) for p in paths),
        timings=timings,
        soft_conflicts=soft_conflicts,
    )


@dataclass(frozen=True)
class Conflict:
    kind: str  # "vertex" | "edge"
    a: int
    b: int
    t: int
    vertex: int
    other: int = -1  # second endpoint for edge conflicts

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "agents": [self.a, self.b], "t": self.t, "vertex": self.vertex}
        if self.kind == "edge":
            d["edge"] = [self.vertex, self.other]
        return d


def find_conflicts(
    paths: Mapping[int, Sequence[int]],
    involving: Iterable[int] | None = None,
    first_only: bool = False,
) -> list[Conflict]:
    """Vertex and edge conflicts among padded paths, ordered by time.

    With ``involving`` given, only conflicts touching at least one of those
    agents are reported.
    """
    focus = None if involving is None else set(involving)
    agents = sorted(paths)
    horizon = max((len(paths[a]) for a in agents), default=0)
    found: list[Conflict] = []
    prev: dict[int, int] = {a: paths[a][0] for a in agents}
    for t in range(horizon):
        occupied: dict[int, int] = {}
        moves: dict[tuple[int, int], int] = {}
        for a in agents:
            p = paths[a]
            v = p[t] if t < len(p) else p[-1]
            other = occupied.get(v)
            if other is not None and (focus is None or a in focus or other in focus):
                found.append(Conflict("vertex", other, a, t, v))
                if first_only:
                    return found
            else:
                occupied[v] = a
            u = prev[a]
            if u != v:
                back = moves.get((v, u))
                if back is not None and (focus is None or a in focus or back in focus):
                    found.append(Conflict("edge", back, a, t, v, u))
                    if first_only:
                        return found
                moves[(u, v)] = a
            prev[a] = v
    return found


@dataclass
class ValidationReport:
    assignment_errors: list[str] = field(default_factory=list)
    path_errors: list[str] = field(default_factory=list)
    vertex_conflicts: list[Conflict] = field(default_factory=list)
    edge_conflicts: list[Conflict] = field(default_factory=list)
    precedence_violations: list[tuple[int, int, int, int]] = field(default_factory=list)
    order_violations: list[tuple[int, int, int]] = field(default_factory=list)
    goal_errors: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (
            self.assignment_errors
            or self.path_errors
            or self.vertex_conflicts
            or self.edge_conflicts
            or self.precedence_violations
            or self.order_violations
            or self.goal_errors
        )

    @property
    def conflict_count(self) -> int:
        return len(self.vertex_conflicts) + len(self.edge_conflicts)

    def only_conflicts(self) -> bool:
        """True when every problem found is a vertex or edge conflict."""
        return not (
            self.assignment_errors
            or self.path_errors
            or self.precedence_violations
            or self.order_violations
            or self.goal_errors
        )

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "assignment_errors": list(self.assignment_errors),
            "path_errors": list(self.path_errors),
            "vertex_conflicts": [c.to_dict() for c in self.vertex_conflicts],
            "edge_conflicts": [c.to_dict() for c in self.edge_conflicts],
            "precedence_violations": [
                {"edge": [u, v], "completions": [cu, cv]} for u, v, cu, cv in self.precedence_violations
            ],
            "order_violations": [
                {"agent": a, "tasks": [x, y]} for a, x, y in self.order_violations
            ],
            "goal_errors": list(self.goal_errors),
        }


def validate_solution(instance: Instance, sol: Solution) -> ValidationReport:
    report = ValidationReport()
    grid = instance.map
    if len(sol.sequences) != instance.k or len(sol.paths) != instance.k:
        report.assignment_errors.append(
            f"expected {instance.k} sequences and paths, got {len(sol.sequences)}/{len(sol.paths)}"
        )
        return report

    seen: dict[int, int] = {}
    for a, seq in enumerate(sol.sequences):
        for task in seq:
            if not 0 <= task < instance.m:
                report.assignment_errors.append(f"agent {a} holds unknown task {task}")
            elif task in seen:
                report.assignment_errors.append(f"task {task} assigned to agents {seen[task]} and {a}")
            else:
                seen[task] = a
    for task in range(instance.m):
        if task not in seen:
            report.assignment_errors.append(f"task {task} is unassigned")

    for a, path in enumerate(sol.paths):
        if not path:
            report.path_errors.append(f"agent {a} has an empty path")
            continue
        if path[0] != instance.start(a):
            report.path_errors.append(f"agent {a} path does not begin at its start")
        for t, v in enumerate(path):
            if not grid.passable(v):
                report.path_errors.append(f"agent {a} on blocked vertex {v} at t={t}")
            elif t > 0 and v != path[t - 1] and not grid.adjacent(path[t - 1], v):
                report.path_errors.append(f"agent {a} jumps {path[t - 1]}->{v} at t={t}")

    for a, seq in enumerate(sol.sequences):
        path = sol.paths[a]
        if not path:
            continue
        prev_completion = None
        prev_task = None
        for task in seq:
            timing = sol.timings.get(task)
            if timing is None:
                report.goal_errors.append(f"task {task} has no timing")
                continue
            goal = instance.goal(task)
            c, arr = timing.completion, timing.arrival
            if c < 0 or c >= len(path):
                report.goal_errors.append(f"task {task} completes at t={c} outside agent {a}'s path")
            elif arr > c or arr < 0:
                report.goal_errors.append(f"task {task} arrival {arr} after completion {c}")
            elif any(path[t] != goal for t in range(arr, c + 1)):
                report.goal_errors.append(f"agent {a} not on goal of task {task} during [{arr},{c}]")
            if prev_completion is not None:
                if c <= prev_completion:
                    report.order_violations.append((a, prev_task, task))
                if arr <= prev_completion:
                    report.goal_errors.append(f"task {task} arrival precedes previous completion")
            prev_completion, prev_task = c, task
        if seq and prev_completion is not None and len(path) - 1 != prev_completion:
            report.path_errors.append(
                f"agent {a} path continues past its final completion t={prev_completion}"
            )

    for u, v in instance.precedence.edges:
        tu, tv = sol.timings.get(u), sol.timings.get(v)
        if tu is None or tv is None:
            continue
        if tu.completion >= tv.completion:
            report.precedence_violations.append((u, v, tu.completion, tv.completion))

    for c in find_conflicts(dict(enumerate(sol.paths))):
        (report.vertex_conflicts if c.kind == "vertex" else report.edge_conflicts).append(c)
    return report


def sum_of_costs(sol: Solution) -> int:
    return sum(sol.timings[seq[-1]].completion for seq in sol.sequences if seq)


def precedence_wait(sol: Solution, task: int) -> int:
    timing = sol.timings.get(task)
    if timing is None:
        raise KeyError(f"task {task} is not timed in this solution")
    return timing.completion - timing.arrival


def total_precedence_wait(sol: Solution) -> int:
    return sum(t.completion - t.arrival for t in sol.timings.values())


def edge_slack(sol: Solution, edge: tuple[int, int]) -> int:
    """Successor arrival minus predecessor completion; negative when the successor waited."""
    u, v = edge
    return sol.timings[v].arrival - sol.timings[u].completion


@dataclass(frozen=True)
class ImprovementMetrics:
    delta: int
    relative: float
    improved: bool
    wait_reduction: int
    wait_reduction_pct: float

    def to_dict(self) -> dict:
        return {
            "delta_soc": self.delta,
            "relative_pct": self.relative,
            "improved": self.improved,
            "wait_reduction": self.wait_reduction,
            "wait_reduction_pct": self.wait_reduction_pct,
        }


def improvement_metrics(seed_soc: int, final_soc: int, seed_wait: int = 0, final_wait: int = 0) -> ImprovementMetrics:
    if seed_soc <= 0:
        raise ValueError("seed SoC must be positive")
    delta = seed_soc - final_soc
    wait_delta = seed_wait - final_wait
    return ImprovementMetrics(
        delta=delta,
        relative=100.0 * delta / seed_soc,
        improved=delta > 0,
        wait_reduction=wait_delta,
        wait_reduction_pct=100.0 * wait_delta / seed_wait if seed_wait > 0 else 0.0,
    )


def solution_to_dict(instance: Instance, sol: Solution) -> dict:
    coord = instance.map.coord
    return {
        "assignment": [list(s) for s in sol.sequences],
        "agents": [
            {"id": a, "path": [list(coord(v)) for v in path]} for a, path in enumerate(sol.paths)
        ],
        "tasks": [
            {"id": t, "arrival": sol.timings[t].arrival, "completion": sol.timings[t].completion}
            for t in sorted(sol.timings)
        ],
        "soc": sol.soc,
        "soft_conflicts": sol.soft_conflicts,
    }


def solution_from_dict(instance: Instance, doc: Mapping) -> Solution:
    index = instance.map.index
    paths = [()] * instance.k
    for entry in doc["agents"]:
        paths[int(entry["id"])] = tuple(index(*cell) for cell in entry["path"])
    timings = {
        int(e["id"]): TaskTiming(int(e["arrival"]), int(e["completion"])) for e in doc["tasks"]
    }
    return Solution(
        sequences=tuple(tuple(int(t) for t in s) for s in doc["assignment"]),
        paths=tuple(paths),
        timings=timings,
        soft_conflicts=int(doc.get("soft_conflicts", 0)),
    )


def write_solution(instance: Instance, sol: Solution) -> str:
    return json.dumps(solution_to_dict(instance, sol), indent=1) + "\n"


def read_solution(instance: Instance, text: str) -> Solution:
    return solution_from_dict(instance, json.loads(text))
