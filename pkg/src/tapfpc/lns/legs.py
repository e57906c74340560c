"""Replanning one agent's tail against everybody else's current paths."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from ..instance import Instance
from ..planner.bounds import derive_stage_bounds
from ..planner.mla import plan_mla_star
from ..planner.reservations import ReservationTable
from ..world import DistanceTable


@dataclass
class WorkingPlan:
    """Mutable per-agent sequences, paths and completions of placed tasks."""

    sequences: list[tuple[int, ...]]
    paths: list[tuple[int, ...]]
    completions: dict[int, int]

    def copy(self) -> "WorkingPlan":
        return WorkingPlan(list(self.sequences), list(self.paths), dict(self.completions))

    def others_table(self, agent: int) -> ReservationTable:
        table = ReservationTable()
        for b, path in enumerate(self.paths):
            if b != agent:
                table.add_path(path)
        return table

    def cost(self, agent: int) -> int:
        seq = self.sequences[agent]
        return self.completions[seq[-1]] if seq else 0

    @property
    def soc(self) -> int:
        return sum(self.cost(a) for a in range(len(self.sequences)))


def replan_agent(
    instance: Instance,
    plan: WorkingPlan,
    agent: int,
    seq: Sequence[int],
    keep: int,
    distances: DistanceTable,
    release: Mapping[int, int] | None = None,
    table: ReservationTable | None = None,
) -> tuple[tuple[int, ...], dict[int, int]] | None:
    """New path and completions for ``agent`` executing ``seq``.

    The first ``keep`` tasks keep their current completions and the path up
    to the last of them; the rest is planned with MLA* against the other
    agents' paths, inside the windows their task completions impose. The
    prefix of ``seq`` must coincide with the agent's current sequence.
    """
    seq = tuple(seq)
    if seq and keep >= len(seq):
        keep = len(seq) - 1  # the final task must be re-planned to a parkable finish
    keep = max(keep, 0)
    t0 = plan.completions[seq[keep - 1]] if keep else 0
    old_path = plan.paths[agent]
    v0 = old_path[t0] if t0 < len(old_path) else old_path[-1]
    suffix = seq[keep:]
    if table is None:
        table = plan.others_table(agent)
    goals = [t.goal for t in instance.tasks]
    fixed = {t: plan.completions[t] for b, s in enumerate(plan.sequences) if b != agent for t in s}
    bounds = derive_stage_bounds({agent: suffix}, instance.precedence, goals, distances, fixed, None, release)
    if bounds is None:
        return None
    result = plan_mla_star(
        instance.map,
        v0,
        [goals[t] for t in suffix],
        bounds[agent],
        table,
        distances,
        start_time=t0,
        ready_at_start=keep == 0,
    )
    if result is None:
        return None
    path = tuple(old_path[:t0]) + result.path
    completions = {t: plan.completions[t] for t in seq[:keep]}
    completions.update(zip(suffix, result.completions))
    return path, completions


def commit(plan: WorkingPlan, agent: int, seq: Sequence[int], path, completions: Mapping[int, int]) -> None:
    for t in plan.sequences[agent]:
        plan.completions.pop(t, None)
    plan.sequences[agent] = tuple(seq)
    plan.paths[agent] = tuple(path)
    plan.completions.update(completions)
