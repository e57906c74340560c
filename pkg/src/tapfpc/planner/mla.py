"""Multi-label A* over (vertex, stage, time) for ordered goal sequences."""

from __future__ import annotations

import heapq
from typing import Sequence

from ..world import DistanceTable, GridMap
from .common import OptimisticCompletion, StageBounds, TimedPlanResult
from .reservations import ReservationTable


def plan_mla_star(
    grid: GridMap,
    start: int,
    goals: Sequence[int],
    bounds: StageBounds | None = None,
    res: ReservationTable | None = None,
    distances: DistanceTable | None = None,
    start_time: int = 0,
    ready_at_start: bool | None = None,
    max_expansions: int | None = None,
) -> TimedPlanResult | None:
    """Earliest-completion path visiting ``goals`` in order; None when infeasible.

    Each stage j completes at the first timestep the agent stands on
    ``goals[j]`` inside ``[lower[j], upper[j]]``; the last stage additionally
    needs the goal to be free forever afterwards. An empty ``goals`` plans a
    retreat to the earliest vertex the agent can park on. ``ready_at_start``
    says whether stage 0 may complete at ``start_time`` itself (default: only
    when ``start_time`` is 0).
    """
    n = len(goals)
    bounds = bounds or StageBounds.unbounded(n)
    if len(bounds) != n:
        raise ValueError("bounds and goals differ in length")
    res = res or ReservationTable()
    distances = distances or DistanceTable(grid)
    if ready_at_start is None:
        ready_at_start = start_time == 0
    h = OptimisticCompletion(goals, bounds, distances)
    lower = bounds.lower
    upper = [bounds.hi(j) for j in range(n)]
    cap = max(res.horizon, max(lower, default=0), start_time) + 1
    adjacency = grid._adjacency
    parkable = res.parkable
    move_free = res.move_free

    def settle(v: int, j: int, t: int) -> int:
        if j < n and v == goals[j] and lower[j] <= t <= upper[j]:
            if j < n - 1 or parkable(v, t):
                return j + 1
        return j

    j0 = settle(start, 0, start_time) if ready_at_start else 0
    s0 = start_time if j0 else 0
    root = (start, j0, start_time)
    if n == 0:
        done = parkable(start, start_time)
    else:
        done = j0 == n
    parents: dict[tuple[int, int, int], tuple[int, int, int] | None] = {root: None}
    if done:
        return _build(parents, root, start_time, n, 0, res)
    est = h.both(start, j0, start_time)
    if est is None:
        return None
    # labels are compared lexicographically by (time, sum of completions so
    # far) so that among earliest-final plans the intermediate stages finish
    # as early as possible
    best: dict[tuple[int, int, int], tuple[int, int]] = {(start, j0, min(start_time, cap)): (start_time, s0)}
    counter = 0
    heap = [(est[0], s0 + est[1], -j0, -start_time, counter, start, j0, start_time, s0, False)]
    expansions = 0
    while heap:
        _, _, _, _, _, v, j, t, sc, goal = heapq.heappop(heap)
        if goal:
            return _build(parents, (v, j, t), start_time, n, expansions, res)
        key = (v, j, t if t < cap else cap)
        if best.get(key) != (t, sc):
            continue
        best[key] = (t, -1)  # expanded
        expansions += 1
        if max_expansions is not None and expansions > max_expansions:
            return None
        nt = t + 1
        for u in (v, *adjacency[v]):
            if not move_free(v, u, nt):
                continue
            nj = settle(u, j, nt)
            nsc = sc + nt if nj > j else sc
            if n == 0:
                is_goal = parkable(u, nt)
            else:
                is_goal = nj == n
            nkey = (u, nj, nt if nt < cap else cap)
            prev = best.get(nkey)
            if prev is not None and (prev[1] < 0 or prev <= (nt, nsc)):
                continue
            if is_goal:
                nest = (nt, 0)
            else:
                nest = h.both(u, nj, nt)
                if nest is None:
                    continue
            best[nkey] = (nt, nsc)
            parents[(u, nj, nt)] = (v, j, t)
            counter += 1
            heapq.heappush(heap, (nest[0], nsc + nest[1], -nj, -nt, counter, u, nj, nt, nsc, is_goal))
    return None


def _build(parents, node, start_time: int, n: int, expansions: int, res: ReservationTable) -> TimedPlanResult:
    chain = []
    while node is not None:
        chain.append(node)
        node = parents[node]
    chain.reverse()
    path = tuple(v for v, _, _ in chain)
    completions = []
    prev_j = 0
    for v, j, t in chain:
        if j > prev_j:
            completions.append(t)
            prev_j = j
    assert len(completions) == n
    return TimedPlanResult(path, tuple(completions), res.count_soft(path, start_time), start_time, expansions)
