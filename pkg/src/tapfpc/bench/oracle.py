"""Exact optimum for tiny instances by joint-state shortest paths."""

from __future__ import annotations

import heapq
import itertools

from ..instance import Instance

ACTIVE, PARKED, IDLE = 0, 1, 2
MAX_AGENTS, MAX_TASKS, MAX_SIDE = 2, 4, 8


class OracleRefused(ValueError):
    """The instance is too large for exhaustive search."""


def brute_force_optimum(instance: Instance) -> int:
    """Minimum sum of costs over every assignment, ordering and path set.

    Dijkstra over (positions, completed-task mask, per-agent status). An
    active agent pays one per timestep until it parks right after a
    completion; idle agents never complete anything and move for free. Each
    agent completes at most one task per step, only on that task's goal and
    only once all its predecessors finished at an earlier step. Since the
    rules do not depend on absolute time, the state needs no clock.
    """
    grid = instance.map
    if instance.k > MAX_AGENTS or instance.m > MAX_TASKS or grid.width > MAX_SIDE or grid.height > MAX_SIDE:
        raise OracleRefused(
            f"oracle handles k<={MAX_AGENTS}, m<={MAX_TASKS}, maps up to {MAX_SIDE}x{MAX_SIDE}"
        )
    k, m = instance.k, instance.m
    full = (1 << m) - 1
    goals = [instance.goal(t) for t in range(m)]
    pred_mask = [sum(1 << p for p in instance.precedence.preds[t]) for t in range(m)]
    moves = {v: (v, *grid.neighbors(v)) for v in grid.passable_cells()}

    def completions(pos, mask, status):
        """All ways the active agents may complete (and possibly park) at this instant."""
        per_agent = []
        for a in range(k):
            opts = [(None, status[a])]
            if status[a] == ACTIVE:
                for t in range(m):
                    if not mask >> t & 1 and goals[t] == pos[a] and pred_mask[t] & mask == pred_mask[t]:
                        opts.append((t, ACTIVE))
                        opts.append((t, PARKED))
            per_agent.append(opts)
        for combo in itertools.product(*per_agent):
            done = [t for t, _ in combo if t is not None]
            if len(done) != len(set(done)):
                continue
            new_mask = mask
            for t in done:
                new_mask |= 1 << t
            yield new_mask, tuple(s for _, s in combo)

    starts = tuple(instance.start(a) for a in range(k))
    heap = []
    best: dict = {}
    counter = 0
    for init in itertools.product((ACTIVE, IDLE), repeat=k):
        for mask, status in completions(starts, 0, init):
            state = (starts, mask, status)
            if best.get(state, 1 << 60) > 0:
                best[state] = 0
                heap.append((0, counter, state))
                counter += 1
    heapq.heapify(heap)
    while heap:
        cost, _, state = heapq.heappop(heap)
        if best.get(state) != cost:
            continue
        pos, mask, status = state
        if mask == full and ACTIVE not in status:
            return cost
        step = sum(1 for s in status if s == ACTIVE)
        if step == 0:
            continue  # nobody left to finish the remaining tasks
        options = [(pos[a],) if status[a] == PARKED else moves[pos[a]] for a in range(k)]
        for nxt in itertools.product(*options):
            if len(set(nxt)) != k:
                continue
            if any(
                nxt[a] == pos[b] and nxt[b] == pos[a] and pos[a] != pos[b]
                for a in range(k)
                for b in range(a + 1, k)
            ):
                continue
            for new_mask, new_status in completions(nxt, mask, status):
                ns = (nxt, new_mask, new_status)
                nc = cost + step
                if nc < best.get(ns, 1 << 60):
                    best[ns] = nc
                    counter += 1
                    heapq.heappush(heap, (nc, counter, ns))
    raise OracleRefused("instance has no feasible solution")
