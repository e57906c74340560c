from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..world import DistanceTable, UNREACHABLE

INF = float("inf")


@dataclass(frozen=True)
class StageBounds:
    """Per-stage completion window ``lower[j] <= tau_j <= upper[j]``; None means unbounded."""

    lower: tuple[int, ...]
    upper: tuple[int | None, ...]

    @classmethod
    def unbounded(cls, n: int) -> "StageBounds":
        return cls((0,) * n, (None,) * n)

    def __post_init__(self) -> None:
        if len(self.lower) != len(self.upper):
            raise ValueError("lower and upper bounds differ in length")

    def __len__(self) -> int:
        return len(self.lower)

    def hi(self, j: int) -> float:
        u = self.upper[j]
        return INF if u is None else u

    @property
    def trivial(self) -> bool:
        return all(x <= 0 for x in self.lower) and all(u is None for u in self.upper)


@dataclass(frozen=True)
class TimedPlanResult:
    """A single-agent plan. ``path[i]`` is the vertex at ``start_time + i``."""

    path: tuple[int, ...]
    completions: tuple[int, ...]
    soft_conflicts: int = 0
    start_time: int = 0
    expansions: int = 0

    @property
    def end_time(self) -> int:
        return self.start_time + len(self.path) - 1


class OptimisticCompletion:
    """Admissible completion estimates over an ordered goal sequence.

    Returns None when some stage's optimistic completion already exceeds its
    upper bound.
    """

    def __init__(self, goals: Sequence[int], bounds: StageBounds, distances: DistanceTable):
        self.goals = list(goals)
        self.n = len(goals)
        self.lower = list(bounds.lower)
        self.upper = [bounds.hi(j) for j in range(self.n)]
        self.trivial = bounds.trivial
        self.rows = [distances.row(g) for g in goals]
        self.steps = [0] * self.n
        for j in range(1, self.n):
            d = self.rows[j][goals[j - 1]]
            self.steps[j] = max(d, 1) if d != UNREACHABLE else INF
        self.rest = [0] * (self.n + 1)
        for j in range(self.n - 1, -1, -1):
            self.rest[j] = self.rest[j + 1] + (self.steps[j + 1] if j + 1 < self.n else 0)
        self.rest_sum = [0] * (self.n + 1)
        for j in range(self.n - 1, -1, -1):
            self.rest_sum[j] = self.rest_sum[j + 1] + self.rest[j]

    def __call__(self, v: int, j: int, t: int) -> float | None:
        c = self.both(v, j, t)
        return None if c is None else c[0]

    def both(self, v: int, j: int, t: int) -> tuple[float, float] | None:
        """(final completion, sum of completions of stages j..n-1), optimistic."""
        if j >= self.n:
            return t, 0
        d = self.rows[j][v]
        if d == UNREACHABLE:
            return None
        if self.trivial:
            c = t + d + self.rest[j]
            if c == INF:
                return None
            k = self.n - j
            return c, k * c - self.rest_sum[j]
        c = max(t + d, self.lower[j])
        if c > self.upper[j]:
            return None
        total = c
        for s in range(j + 1, self.n):
            c = max(c + self.steps[s], self.lower[s])
            if c > self.upper[s]:
                return None
            total += c
        return c, total
