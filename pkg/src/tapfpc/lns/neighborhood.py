"""Destroy step: successor closure, excision and boundary patching."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from ..instance import Instance, transitive_successors
from ..solution import Solution
from ..world import DistanceTable
from .legs import WorkingPlan, commit, replan_agent


@dataclass
class Neighborhood:
    seed_tasks: frozenset[int]
    destroyed: frozenset[int]
    boundary: tuple[int, ...]
    release: dict[int, int]  # destroyed task -> 1 + max completion of its frozen predecessors
    plan: WorkingPlan  # surviving tasks only, paths patched around the holes
    owners: dict[int, int]  # destroyed task -> owner in the incumbent
    positions: dict[int, int]  # destroyed task -> index in its owner's incumbent sequence
    incumbent: Solution
    failed: bool = False
    failed_agents: tuple[int, ...] = ()
    mutable: frozenset[int] = field(default_factory=frozenset)

    @property
    def affected_agents(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.owners.values())))


def release_bounds(instance: Instance, destroyed: Iterable[int], completions) -> dict[int, int]:
    destroyed = set(destroyed)
    out = {}
    for t in sorted(destroyed):
        frozen = [completions[p] for p in instance.precedence.preds[t] if p not in destroyed]
        out[t] = 1 + max(frozen) if frozen else 0
    return out


def close_and_excise(
    instance: Instance,
    incumbent: Solution,
    seed_tasks: Iterable[int],
    distances: DistanceTable,
) -> Neighborhood:
    """Remove the successor closure of ``seed_tasks`` and patch the affected paths.

    Each affected agent keeps its path up to the last surviving completion
    before its first destroyed task; the rest of its surviving sequence is
    replanned (agents in id order, each against everybody's current paths).
    """
    seed = frozenset(seed_tasks)
    destroyed = frozenset(transitive_successors(instance.precedence, seed))
    owners, positions, boundary = {}, {}, []
    for a, seq in enumerate(incumbent.sequences):
        for i, t in enumerate(seq):
            if t in destroyed:
                owners[t] = a
                positions[t] = i
                if i + 1 < len(seq) and seq[i + 1] not in destroyed:
                    boundary.append(seq[i + 1])
    inc_completions = incumbent.completions()
    release = release_bounds(instance, destroyed, inc_completions)
    plan = WorkingPlan(
        list(incumbent.sequences),
        list(incumbent.paths),
        {t: c for t, c in inc_completions.items()},
    )
    nbhd = Neighborhood(
        seed_tasks=seed,
        destroyed=destroyed,
        boundary=tuple(boundary),
        release=release,
        plan=plan,
        owners=owners,
        positions=positions,
        incumbent=incumbent,
    )
    affected = sorted(set(owners.values()))
    # strip every destroyed task first so no survivor is bounded by one
    for a in affected:
        plan.sequences[a] = tuple(t for t in incumbent.sequences[a] if t not in destroyed)
    for t in destroyed:
        plan.completions.pop(t, None)
    stripped = (list(plan.sequences), list(plan.paths), dict(plan.completions))
    if not affected:
        return nbhd
    order = list(affected)
    failed = None
    # an agent patched early can route through where a later one must park;
    # a failing agent is moved to the front and the patch restarted
    for _ in range(len(order)):
        failed = _patch_agents(instance, plan, incumbent, destroyed, order, distances)
        if failed is None:
            return nbhd
        plan.sequences, plan.paths, plan.completions = list(stripped[0]), list(stripped[1]), dict(stripped[2])
        if order[0] == failed:
            break
        order.remove(failed)
        order.insert(0, failed)
    nbhd.failed = True
    nbhd.failed_agents = (failed,)
    return nbhd


def _patch_agents(instance, plan, incumbent, destroyed, order, distances) -> int | None:
    """Replan each agent in ``order`` around the others; the first failure is returned."""
    for a in order:
        seq = incumbent.sequences[a]
        first = min(i for i, t in enumerate(seq) if t in destroyed)
        survivors = plan.sequences[a]
        out = replan_agent(instance, plan, a, survivors, first, distances)
        if out is None:
            return a
        commit(plan, a, survivors, *out)
    return None
