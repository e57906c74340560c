"""Collision-free completion estimates for task sequences under precedence."""

from __future__ import annotations

from collections import deque
from typing import Mapping, Sequence

from .instance import Instance
from .world import UNREACHABLE, DistanceTable


def estimate_completions(
    instance: Instance,
    sequences: Mapping[int, Sequence[int]],
    distances: DistanceTable,
    fixed: Mapping[int, int] | None = None,
    release: Mapping[int, int] | None = None,
) -> dict[int, int] | None:
    """Earliest completions ignoring other agents' bodies, or None.

    Each agent walks its sequence along shortest paths from its start;
    a task completes no earlier than one step after every predecessor
    (taken from ``fixed`` when it lies outside ``sequences``) and no earlier
    than its ``release``. Returns None when the per-agent orders together with
    the precedence relation form a cycle or a goal is unreachable.
    """
    fixed = fixed or {}
    release = release or {}
    dag = instance.precedence
    where: dict[int, tuple[int, int]] = {}
    for a, seq in sequences.items():
        for j, task in enumerate(seq):
            where[task] = (a, j)
    indeg = {t: 0 for t in where}
    succ: dict[int, list[int]] = {t: [] for t in where}
    for a, seq in sequences.items():
        for x, y in zip(seq, seq[1:]):
            succ[x].append(y)
            indeg[y] += 1
    for t in where:
        for p in dag.preds[t]:
            if p in where:
                succ[p].append(t)
                indeg[t] += 1
    queue = deque(sorted(t for t, d in indeg.items() if d == 0))
    est: dict[int, int] = {}
    while queue:
        t = queue.popleft()
        a, j = where[t]
        goal = instance.goal(t)
        if j == 0:
            d = distances.distance(instance.start(a), goal)
            base = 0
        else:
            prev = sequences[a][j - 1]
            d = distances.distance(instance.goal(prev), goal)
            base = est[prev]
            d = max(d, 1) if d != UNREACHABLE else d
        if d == UNREACHABLE:
            return None
        e = max(base + d, release.get(t, 0))
        for p in dag.preds[t]:
            if p in est:
                e = max(e, est[p] + 1)
            elif p in fixed:
                e = max(e, fixed[p] + 1)
        est[t] = int(e)
        for s in succ[t]:
            indeg[s] -= 1
            if indeg[s] == 0:
                queue.append(s)
    if len(est) != len(where):
        return None
    return est
