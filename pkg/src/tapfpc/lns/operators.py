"""Destroy operators and the adaptive roulette-wheel portfolio."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..instance import Instance
from ..solution import Conflict, Solution, edge_slack
from ..world import DistanceTable

OPERATORS = (
    "random",
    "worst",
    "task_conflict",
    "shaw",
    "precedence_wait",
    "low_slack",
    "agent_conflict",
    "failure_recovery",
)
REWARDS = {"new_best": 4.0, "improved": 2.0, "accepted": 1.0, "rejected": 0.2, "failed": 0.1}
REACTION = 0.35
MIN_WEIGHT = 0.01
RANK_EXPONENT = 3  # randomised rank selection bias
CONFLICT_WINDOW = 25


@dataclass
class Portfolio:
    names: tuple[str, ...] = OPERATORS
    weights: list[float] = field(default_factory=list)
    reaction: float = REACTION

    def __post_init__(self) -> None:
        if not self.weights:
            self.weights = [1.0] * len(self.names)
        if len(self.weights) != len(self.names):
            raise ValueError("one weight per operator")

    def probabilities(self) -> list[float]:
        total = sum(self.weights)
        return [w / total for w in self.weights]

    def select(self, rng: random.Random) -> str:
        return select_operator(self, rng)

    def update(self, name: str, outcome: str) -> None:
        update_weights(self, name, outcome)


def select_operator(portfolio: Portfolio, rng: random.Random) -> str:
    """Roulette wheel: operator i with probability w_i / sum(w)."""
    total = sum(portfolio.weights)
    x = rng.random() * total
    acc = 0.0
    for name, w in zip(portfolio.names, portfolio.weights):
        acc += w
        if x < acc:
            return name
    return portfolio.names[-1]


def update_weights(portfolio: Portfolio, name: str, outcome: str) -> Portfolio:
    i = portfolio.names.index(name)
    r = portfolio.reaction
    w = (1 - r) * portfolio.weights[i] + r * REWARDS[outcome]
    portfolio.weights[i] = max(w, MIN_WEIGHT)
    return portfolio


@dataclass
class Diagnostics:
    """What the conflict- and failure-driven operators look at."""

    window: int = CONFLICT_WINDOW
    history: deque = field(default_factory=deque)  # (iteration, Conflict)
    failed_agents: tuple[int, ...] = ()

    def record(self, iteration: int, conflicts: Iterable[Conflict]) -> None:
        for c in conflicts:
            self.history.append((iteration, c))

    def prune(self, iteration: int) -> None:
        while self.history and self.history[0][0] <= iteration - self.window:
            self.history.popleft()

    def recent_agents(self) -> set[int]:
        return {x for _, c in self.history for x in (c.a, c.b)}

    def recent_vertices(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for _, c in self.history:
            counts[c.vertex] = counts.get(c.vertex, 0) + 1
            if c.kind == "edge":
                counts[c.other] = counts.get(c.other, 0) + 1
        return counts


def _rank_pick(ranked: Sequence[int], size: int, rng: random.Random, chosen: set[int] | None = None) -> set[int]:
    """Randomised rank selection: index floor(y^p * n) among the not-yet-chosen."""
    chosen = set() if chosen is None else chosen
    pool = [t for t in ranked if t not in chosen]
    while pool and len(chosen) < size:
        i = int(rng.random() ** RANK_EXPONENT * len(pool))
        chosen.add(pool.pop(i))
    return chosen


def _random_tasks(m: int, size: int, rng: random.Random) -> set[int]:
    return set(rng.sample(range(m), min(size, m)))


def _legs(instance: Instance, sol: Solution):
    """(task, agent, previous vertex, previous completion, next task or None)."""
    for a, seq in enumerate(sol.sequences):
        prev_v, prev_t = instance.start(a), 0
        for i, t in enumerate(seq):
            nxt = seq[i + 1] if i + 1 < len(seq) else None
            yield t, a, prev_v, prev_t, nxt
            prev_v, prev_t = instance.goal(t), sol.completion(t)


def seed_tasks(
    op: str,
    instance: Instance,
    incumbent: Solution,
    distances: DistanceTable,
    diagnostics: Diagnostics,
    size: int,
    rng: random.Random,
) -> set[int]:
    m = instance.m
    size = max(1, min(size, m))
    dag = instance.precedence
    if op == "random":
        return _random_tasks(m, size, rng)

    if op == "worst":
        score = {}
        for t, a, prev_v, prev_t, nxt in _legs(instance, incumbent):
            c = incumbent.completion(t)
            if nxt is None:
                score[t] = c - prev_t
            else:
                direct = distances.distance(prev_v, instance.goal(nxt))
                score[t] = incumbent.completion(nxt) - prev_t - direct
        ranked = sorted(score, key=lambda t: (-score[t], t))
        return _rank_pick(ranked, size, rng)

    if op == "task_conflict":
        hot = diagnostics.recent_vertices()
        if not hot:
            return _random_tasks(m, size, rng)
        score = {}
        for t, a, _, prev_t, _ in _legs(instance, incumbent):
            path = incumbent.paths[a]
            leg = path[prev_t : incumbent.completion(t) + 1]
            score[t] = sum(hot.get(v, 0) for v in set(leg))
        if not any(score.values()):
            return _random_tasks(m, size, rng)
        ranked = sorted(score, key=lambda t: (-score[t], t))
        return _rank_pick(ranked, size, rng)

    if op == "shaw":
        anchor = rng.randrange(m)
        ga, ca = instance.goal(anchor), incumbent.completion(anchor)
        rel = {
            t: distances.distance(ga, instance.goal(t)) + abs(ca - incumbent.completion(t))
            for t in range(m)
            if t != anchor
        }
        ranked = sorted(rel, key=lambda t: (rel[t], t))
        return _rank_pick(ranked, size, rng, {anchor})

    if op == "precedence_wait":
        waits = {t: tm.completion - tm.arrival for t, tm in incumbent.timings.items()}
        ranked = [t for t in sorted(waits, key=lambda t: (-waits[t], t)) if waits[t] > 0]
        if not ranked:
            return _random_tasks(m, size, rng)
        chosen: set[int] = set()
        for t in ranked:
            chosen.add(t)
            chosen.update(dag.preds[t])
            chosen.update(dag.succs[t])
            if len(chosen) >= size:
                break
        return chosen

    if op == "low_slack":
        if not dag.edges:
            return _random_tasks(m, size, rng)
        ranked = sorted(dag.edges, key=lambda e: (edge_slack(incumbent, e), e))
        chosen = set()
        for u, v in ranked:
            chosen.update((u, v))
            if len(chosen) >= size:
                break
        return chosen

    if op in ("agent_conflict", "failure_recovery"):
        agents = diagnostics.recent_agents() if op == "agent_conflict" else set(diagnostics.failed_agents)
        owned = sorted(t for a in agents if 0 <= a < instance.k for t in incumbent.sequences[a])
        if not owned:
            return _random_tasks(m, size, rng)
        return set(rng.sample(owned, min(size, len(owned))))

    raise ValueError(f"unknown destroy operator {op!r}")

