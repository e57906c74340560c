"""Per-stage completion windows implied by cross-agent precedence."""

from __future__ import annotations

from typing import Mapping, Sequence

from ..instance import PrecedenceDag
from ..world import UNREACHABLE, DistanceTable
from .common import StageBounds


def derive_stage_bounds(
    sequences: Mapping[int, Sequence[int]],
    dag: PrecedenceDag,
    goals: Sequence[int],
    distances: DistanceTable,
    fixed: Mapping[int, int],
    estimates: Mapping[int, int] | None = None,
    release: Mapping[int, int] | None = None,
) -> dict[int, StageBounds] | None:
    """StageBounds for every agent in ``sequences``; None when some window is empty.

    ``fixed`` holds completions that will not move (they give lower bounds to
    successors and upper bounds to predecessors); ``estimates`` holds
    approximate completions of tasks that may still move (lower bounds only).
    Same-agent predecessors are left to the sequence order. ``release`` adds
    task-specific lower bounds.
    """
    estimates = estimates or {}
    release = release or {}
    owner = {t: a for a, seq in sequences.items() for t in seq}
    out: dict[int, StageBounds] = {}
    for a, seq in sequences.items():
        lower: list[int] = []
        upper: list[float] = []
        for task in seq:
            lb = release.get(task, 0)
            for p in dag.preds[task]:
                if p in fixed:
                    lb = max(lb, fixed[p] + 1)
                elif owner.get(p) != a and p in estimates:
                    lb = max(lb, estimates[p] + 1)
            ub = float("inf")
            for s in dag.succs[task]:
                if s in fixed and owner.get(s) != a:
                    ub = min(ub, fixed[s] - 1)
            lower.append(lb)
            upper.append(ub)
        steps = [0]
        for j in range(1, len(seq)):
            d = distances.distance(goals[seq[j - 1]], goals[seq[j]])
            if d == UNREACHABLE:
                return None
            steps.append(max(d, 1))
        for j in range(1, len(seq)):
            lower[j] = max(lower[j], lower[j - 1] + steps[j])
        for j in range(len(seq) - 2, -1, -1):
            upper[j] = min(upper[j], upper[j + 1] - steps[j + 1])
        if any(lo > hi for lo, hi in zip(lower, upper)):
            return None
        out[a] = StageBounds(tuple(lower), tuple(None if u == float("inf") else int(u) for u in upper))
    return out
