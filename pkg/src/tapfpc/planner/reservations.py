"""Space-time reservations other agents impose on a single-agent search."""

from __future__ import annotations

import bisect
from collections import Counter
from typing import Sequence

INF = float("inf")


class ReservationTable:
    """Hard and soft occupancies.

    A path reserves each (vertex, t) it occupies and each directed traversal
    (u, v, t) arriving at t; its final vertex is reserved for every t from its
    last index onward (the agent parks there). Hard entries are forbidden to
    the planning agent, soft entries are only counted.
    """

    def __init__(self) -> None:
        self._vertex: dict[int, set[int]] = {}
        self._park: dict[int, int] = {}
        self._edge: set[tuple[int, int, int]] = set()
        self._svertex: Counter = Counter()
        self._sedge: Counter = Counter()
        self._svertex_times: dict[int, list[int]] = {}
        self._spark: dict[int, int] = {}
        self._intervals: dict[int, list[tuple[int, float]]] = {}
        self._vmax: dict[int, int] = {}
        self.horizon = 0

    @classmethod
    def from_paths(cls, paths, soft_transit: bool = False) -> "ReservationTable":
        table = cls()
        for path in paths:
            table.add_path(path, soft_transit=soft_transit)
        return table

    def copy(self) -> "ReservationTable":
        other = ReservationTable()
        other._vertex = {v: set(ts) for v, ts in self._vertex.items()}
        other._park = dict(self._park)
        other._edge = set(self._edge)
        other._svertex = Counter(self._svertex)
        other._sedge = Counter(self._sedge)
        other._svertex_times = {v: list(ts) for v, ts in self._svertex_times.items()}
        other._spark = dict(self._spark)
        other._vmax = dict(self._vmax)
        other.horizon = self.horizon
        return other

    @property
    def has_soft(self) -> bool:
        return bool(self._svertex or self._sedge or self._spark)

    def add_path(self, path: Sequence[int], soft_transit: bool = False, park: bool = True) -> None:
        """Reserve ``path`` (indexed from t=0). Parking is always hard."""
        self._intervals.clear()
        last = len(path) - 1
        for t in range(last + 1):
            v = path[t]
            if t == last and park:
                break
            if soft_transit:
                self._svertex[(v, t)] += 1
                bisect.insort(self._svertex_times.setdefault(v, []), t)
            else:
                self._vertex.setdefault(v, set()).add(t)
                if t > self._vmax.get(v, -1):
                    self._vmax[v] = t
            if t > 0 and path[t - 1] != v:
                if soft_transit:
                    self._sedge[(path[t - 1], v, t)] += 1
                else:
                    self._edge.add((path[t - 1], v, t))
        if park and last > 0 and path[last - 1] != path[last]:
            if soft_transit:
                self._sedge[(path[last - 1], path[last], last)] += 1
            else:
                self._edge.add((path[last - 1], path[last], last))
        if park:
            v = path[last]
            if last < self._park.get(v, INF):
                self._park[v] = last
        self.horizon = max(self.horizon, last)

    def add_soft_park(self, v: int, t: int) -> None:
        self._spark[v] = min(t, self._spark.get(v, t))
        self.horizon = max(self.horizon, t)

    # hard queries

    def vertex_free(self, v: int, t: int) -> bool:
        park = self._park.get(v)
        if park is not None and t >= park:
            return False
        ts = self._vertex.get(v)
        return ts is None or t not in ts

    def move_free(self, u: int, v: int, t: int) -> bool:
        """Whether moving u->v (or waiting when u == v) arriving at t is allowed."""
        if not self.vertex_free(v, t):
            return False
        return u == v or (v, u, t) not in self._edge

    def edge_blocked(self, u: int, v: int, t: int) -> bool:
        return (v, u, t) in self._edge

    def parkable(self, v: int, t: int) -> bool:
        """Whether an agent may occupy v from t forever."""
        if v in self._park:
            return False
        return self._vmax.get(v, -1) < t

    def park_time(self, v: int) -> float:
        return self._park.get(v, INF)

    def safe_intervals(self, v: int) -> list[tuple[int, float]]:
        cached = self._intervals.get(v)
        if cached is not None:
            return cached
        end = self._park.get(v, INF)
        times = sorted(self._vertex.get(v, ()))
        intervals: list[tuple[int, float]] = []
        lo = 0
        for t in times:
            if t >= end:
                break
            if t > lo:
                intervals.append((lo, t - 1))
            lo = t + 1
        if lo < end:
            intervals.append((lo, end - 1 if end != INF else INF))
        self._intervals[v] = intervals
        return intervals

    # soft queries

    def soft_vertex(self, v: int, t: int) -> int:
        n = self._svertex.get((v, t), 0)
        park = self._spark.get(v)
        if park is not None and t >= park:
            n += 1
        return n

    def soft_move(self, u: int, v: int, t: int) -> int:
        n = self.soft_vertex(v, t)
        if u != v:
            n += self._sedge.get((v, u, t), 0)
        return n

    def soft_between(self, v: int, lo: int, hi: int) -> int:
        """Soft vertex hits at v for lo <= t <= hi (hi may be INF)."""
        if lo > hi:
            return 0
        n = 0
        times = self._svertex_times.get(v)
        if times:
            i = bisect.bisect_left(times, lo)
            j = len(times) if hi == INF else bisect.bisect_right(times, hi)
            n += j - i
        park = self._spark.get(v)
        if park is not None:
            if hi == INF:
                n += 1
            else:
                n += max(0, hi - max(lo, park) + 1)
        return n

    def count_soft(self, path: Sequence[int], start_time: int = 0, parked: bool = True) -> int:
        if not self.has_soft:
            return 0
        n = 0
        for i, v in enumerate(path):
            t = start_time + i
            if i > 0:
                n += self.soft_move(path[i - 1], v, t)
            else:
                n += self.soft_vertex(v, t)
        if parked and path:
            n += self.soft_between(path[-1], start_time + len(path), INF)
        return n
