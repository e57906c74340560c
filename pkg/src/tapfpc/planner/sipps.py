"""Safe-interval search over ordered goal sequences with soft obstacles.

States are (vertex, safe interval, stage). Safe intervals come from hard
reservations only; soft reservations are counted along the way and the search
minimises (soft hits, completion time). Each state keeps a small Pareto set of
labels (time, ready, soft) so that a cheaper-but-later arrival is not thrown
away by an earlier-but-dirtier one.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

from ..world import DistanceTable, GridMap
from .common import OptimisticCompletion, StageBounds, TimedPlanResult
from .reservations import INF, ReservationTable


@dataclass
class _Label:
    v: int
    iv: int
    j: int
    t: int  # time the agent is at v
    ready: int  # earliest time stage j may complete here
    soft: int
    sc: int  # sum of stage completions so far
    waits: int
    parent: "_Label | None"
    completed: bool  # this label was produced by completing stage j-1 at t
    closed: bool = False


def plan_sipps(
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
    """Same contract as :func:`plan_mla_star`, plus soft-conflict minimisation.

    With no soft reservations the returned completion times equal MLA*'s.
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
    soft = res.has_soft
    adjacency = grid._adjacency
    scan_limit = res.horizon + 2

    def interval_index(v: int, t: int) -> int | None:
        for i, (lo, hi) in enumerate(res.safe_intervals(v)):
            if lo <= t <= hi:
                return i
        return None

    iv0 = interval_index(start, start_time)
    if iv0 is None:
        return None
    ready0 = start_time if ready_at_start else start_time + 1
    root = _Label(start, iv0, 0, start_time, ready0, res.soft_vertex(start, start_time) if soft else 0, 0, 0, None, False)
    labels: dict[tuple[int, int, int], list[_Label]] = {}
    heap: list = []
    counter = 0

    def dominated(lab: _Label) -> bool:
        bucket = labels.setdefault((lab.v, lab.iv, lab.j), [])
        for o in bucket:
            if o.t <= lab.t and o.ready <= lab.ready and o.soft <= lab.soft and o.sc <= lab.sc:
                return True
        bucket[:] = [
            o
            for o in bucket
            if not (lab.t <= o.t and lab.ready <= o.ready and lab.soft <= o.soft and lab.sc <= o.sc)
        ]
        bucket.append(lab)
        return False

    def push(lab: _Label) -> None:
        nonlocal counter
        if lab.j >= n:
            est = (lab.t, 0)
        else:
            est = h.both(lab.v, lab.j, lab.t)
            if est is None:
                return
        if dominated(lab):
            return
        counter += 1
        heapq.heappush(heap, (lab.soft, est[0], lab.sc + est[1], lab.waits, lab.v, counter, lab))

    def is_goal(lab: _Label) -> bool:
        if n == 0:
            return res.safe_intervals(lab.v)[lab.iv][1] == INF
        return lab.j == n

    push(root)
    expansions = 0
    while heap:
        *_, lab = heapq.heappop(heap)
        if lab.closed:
            continue
        lab.closed = True
        if is_goal(lab):
            return _build(lab, start_time, n, res, expansions)
        expansions += 1
        if max_expansions is not None and expansions > max_expansions:
            return None
        v, t = lab.v, lab.t
        lo_v, hi_v = res.safe_intervals(v)[lab.iv]

        # complete the current stage here, waiting in place if needed
        if lab.j < n and v == goals[lab.j]:
            j = lab.j
            tc = max(lab.ready, lower[j])
            if tc <= hi_v and tc <= upper[j] and (j < n - 1 or hi_v == INF):
                cost = res.soft_between(v, t + 1, tc) if soft else 0
                push(_Label(v, lab.iv, j + 1, tc, tc + 1, lab.soft + cost, lab.sc + tc, lab.waits + tc - t, lab, True))

        # move into each safe interval of each neighbour
        for u in adjacency[v]:
            for i2, (lo_u, hi_u) in enumerate(res.safe_intervals(u)):
                a0 = max(t + 1, lo_u)
                last = min(hi_v + 1, hi_u)
                if a0 > last:
                    continue
                a = a0
                while a <= last and res.edge_blocked(v, u, a):
                    a += 1
                if a > last:
                    continue
                _push_move(push, res, soft, lab, u, i2, a, lab.soft + _move_cost(res, soft, v, u, t, a))
                if soft:
                    best_a, best_c = a, _move_cost(res, soft, v, u, t, a)
                    b = a + 1
                    stop = min(last, max(a, scan_limit) + 1)
                    while b <= stop and best_c > 0:
                        if not res.edge_blocked(v, u, b):
                            c = _move_cost(res, soft, v, u, t, b)
                            if c < best_c:
                                best_a, best_c = b, c
                        b += 1
                    if best_a != a:
                        _push_move(push, res, soft, lab, u, i2, best_a, lab.soft + best_c)
    return None


def _move_cost(res: ReservationTable, soft: bool, v: int, u: int, t: int, a: int) -> int:
    if not soft:
        return 0
    return res.soft_between(v, t + 1, a - 1) + res.soft_move(v, u, a)


def _push_move(push, res, soft, lab: _Label, u: int, iv: int, a: int, cost: int) -> None:
    push(_Label(u, iv, lab.j, a, a, cost, lab.sc, lab.waits + (a - lab.t - 1), lab, False))


def _build(lab: _Label, start_time: int, n: int, res: ReservationTable, expansions: int) -> TimedPlanResult:
    chain = []
    node = lab
    while node is not None:
        chain.append(node)
        node = node.parent
    chain.reverse()
    path = [chain[0].v]
    completions = []
    for prev, cur in zip(chain, chain[1:]):
        if cur.completed:
            path.extend([cur.v] * (cur.t - prev.t))
            completions.append(cur.t)
        else:
            path.extend([prev.v] * (cur.t - prev.t - 1))
            path.append(cur.v)
    assert len(completions) == n
    path_t = tuple(path)
    return TimedPlanResult(path_t, tuple(completions), res.count_soft(path_t, start_time), start_time, expansions)
