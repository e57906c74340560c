"""End-to-end acceptance criteria, one test each, with a PASS/FAIL line per criterion."""

import random
import statistics
import time

import pytest

from conftest import ACCEPTANCE_LINES
from test_planner import random_query
from tapfpc.bench.oracle import brute_force_optimum
from tapfpc.bench.suite import run_stream
from tapfpc.instance import GeneratorConfig, crossing_instance, generate_instance, transitive_successors
from tapfpc.lns import (
    OPERATORS,
    AcceptanceState,
    Diagnostics,
    LnsConfig,
    Portfolio,
    ProposalFailure,
    RepairFailure,
    accept_candidate,
    build_proposal,
    close_and_excise,
    mutable_agents,
    repair_neighborhood,
    repair_regret,
    run_lns,
    seed_tasks,
    update_weights,
)
from tapfpc.lns.operators import MIN_WEIGHT, REACTION, REWARDS
from tapfpc.planner import ReservationTable, plan_mla_star, plan_sipps
from tapfpc.seed import SeedError, build_seed
from tapfpc.solution import validate_solution
from tapfpc.world import DistanceTable, load_builtin_map

METHODS = ("regret", "local-pbs", "global-pbs")
SMALL = GeneratorConfig("empty-16-16.map", 5, 15, 8)
SMALL_COUNT = 100
SMALL_BUDGET_SECS = 5.0  # the small' preset budget; both methods get the same wall clock
TINY_COUNT = 50


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def solution_clean(instance, sol):
    r = validate_solution(instance, sol)
    return r.ok and not r.vertex_conflicts and not r.edge_conflicts and not r.precedence_violations


def nonincreasing(series):
    return all(b <= a for a, b in zip(series, series[1:]))


@pytest.fixture(scope="module")
def tiny_runs():
    """The oracle suite: optimum, time and every method's final on 50 tiny instances."""
    grid = load_builtin_map("empty-6-6.map")
    out = []
    for i in range(TINY_COUNT):
        m = 1 + i % 3
        p = min(i % 3, m * (m - 1) // 2)
        inst = generate_instance(GeneratorConfig("empty-6-6.map", 2, m, p), grid, seed=500 + i)
        t0 = time.perf_counter()
        opt = brute_force_optimum(inst)
        oracle_s = time.perf_counter() - t0
        d = DistanceTable(grid)
        seed = build_seed(inst, d)
        finals = {}
        for method in METHODS:
            cfg = LnsConfig.for_method(
                method, budget_secs=5.0, budget_iters=100, rng_seed=run_stream(0, f"tiny/{i:03d}", method, "hard")
            )
            finals[method] = run_lns(inst, cfg, seed=seed, distances=d)
        out.append((inst, opt, oracle_s, seed, finals))
    return out


@pytest.fixture(scope="module")
def small_runs():
    """Global-PBS and Regret from one shared seed on each small' instance."""
    grid = load_builtin_map(SMALL.map_name)
    out = []
    for i in range(SMALL_COUNT):
        inst = generate_instance(SMALL, grid, seed=i)
        d = DistanceTable(grid)
        try:
            seed = build_seed(inst, d)
        except SeedError:
            out.append((inst, None, {}))
            continue
        runs = {}
        for method in ("regret", "global-pbs"):
            cfg = LnsConfig.for_method(
                method, budget_secs=SMALL_BUDGET_SECS, rng_seed=run_stream(0, f"small/{i:03d}", method, "hard")
            )
            runs[method] = run_lns(inst, cfg, seed=seed, distances=d)
        out.append((inst, seed, runs))
    return out


def test_criterion_1_crossing():
    inst = crossing_instance()
    d = DistanceTable(inst.map)
    t0 = time.perf_counter()
    seed = build_seed(inst, d, force_assignment=((0, 3), (2, 1)))
    cfg = LnsConfig.for_method("global-pbs", mode="hard", budget_secs=1.0, rng_seed=0)
    result = run_lns(inst, cfg, seed=seed, distances=d)
    elapsed = time.perf_counter() - t0
    ok = seed.solution.soc == 15 and result.best.soc == 9 and solution_clean(inst, result.best)
    assert report(1, ok, f"seed SoC {seed.solution.soc} (want 15), LNS SoC {result.best.soc} (want 9), {elapsed:.2f}s")


def test_criterion_2_oracle_suite(tiny_runs):
    slow = [i for i, r in enumerate(tiny_runs) if r[2] >= 10.0]
    below, dirty, optimal = [], [], 0
    for i, (inst, opt, _, seed, finals) in enumerate(tiny_runs):
        for method, res in finals.items():
            if res.best.soc < opt:
                below.append((i, method))
            if not solution_clean(inst, res.best):
                dirty.append((i, method))
        optimal += finals["global-pbs"].best.soc == opt
    share = optimal / len(tiny_runs)
    ok = not slow and not below and not dirty and share >= 0.70
    detail = (
        f"max oracle time {max(r[2] for r in tiny_runs):.2f}s, below-optimum {len(below)}, "
        f"invalid {len(dirty)}, Global-PBS optimal on {optimal}/{len(tiny_runs)} ({100 * share:.0f}%, want >=70%)"
    )
    assert report(2, ok, detail)


def test_criterion_3_improvement(small_runs):
    seeded = [(inst, seed, runs) for inst, seed, runs in small_runs if seed is not None]
    rel = {m: [] for m in ("regret", "global-pbs")}
    for _, seed, runs in seeded:
        for m, res in runs.items():
            rel[m].append(100.0 * (seed.solution.soc - res.best.soc) / seed.solution.soc)
    freq = sum(1 for r in rel["global-pbs"] if r > 0) / len(seeded)
    med_g, med_r = statistics.median(rel["global-pbs"]), statistics.median(rel["regret"])
    ok = len(seeded) == SMALL_COUNT and freq > 0.60 and med_g > med_r
    detail = (
        f"{len(seeded)}/{SMALL_COUNT} seeded, Global-PBS improved {100 * freq:.0f}% (want >60%), "
        f"median reduction Global-PBS {med_g:.2f}% vs Regret {med_r:.2f}%"
    )
    assert report(3, ok, detail)


def test_criterion_4_feasibility(tiny_runs, small_runs):
    seeds = finals = bad_seeds = bad_finals = bad_traces = 0
    runs = [(inst, seed, finals_) for inst, _, _, seed, finals_ in tiny_runs]
    runs += [(inst, seed, r) for inst, seed, r in small_runs if seed is not None]
    for inst, seed, results in runs:
        seeds += 1
        bad_seeds += not solution_clean(inst, seed.solution)
        for res in results.values():
            finals += 1
            bad_finals += not solution_clean(inst, res.best)
            bad_traces += not nonincreasing(res.trace.best_series())
    ok = bad_seeds == bad_finals == bad_traces == 0
    detail = f"{seeds - bad_seeds}/{seeds} seeds valid, {finals - bad_finals}/{finals} finals valid, {bad_traces} increasing traces"
    assert report(4, ok, detail)


def test_criterion_5_planner_equivalence():
    mismatches = 0
    for q in range(100):
        g, _, start, goals, others, bounds = random_query(10_000 + q, with_bounds=q % 2 == 1)
        res = ReservationTable.from_paths(others)
        a = plan_mla_star(g, start, goals, bounds, res)
        b = plan_sipps(g, start, goals, bounds, ReservationTable.from_paths(others))
        same = (a is None and b is None) or (
            a is not None and b is not None and a.completions[-1] == b.completions[-1] and b.soft_conflicts == 0
        )
        mismatches += not same
    assert report(5, mismatches == 0, f"{100 - mismatches}/100 queries agree")


def test_criterion_6_schedule_and_weights():
    worst = 0.0
    for j_seed in (9, 137, 4021):
        state = AcceptanceState.from_seed(j_seed)
        for n in range(1, 10_001):
            accept_candidate(j_seed, j_seed, state)
            expect = 0.05 * j_seed * 0.99975**n
            worst = max(worst, abs(state.temperature - expect) / expect)
    # the same schedule seen through a real run's trace
    inst = crossing_instance()
    res = run_lns(inst, LnsConfig(budget_secs=None, budget_iters=200), seed=build_seed(inst, force_assignment=((0, 3), (2, 1))))
    for i, rec in enumerate(res.trace.records):
        expect = 0.05 * 15 * 0.99975**i
        worst = max(worst, abs(rec.temperature - expect) / expect)

    rng = random.Random(2024)
    script = [(rng.randrange(len(OPERATORS)), rng.choice(sorted(REWARDS))) for _ in range(500)]
    p = Portfolio()
    history = {op: [] for op in OPERATORS}
    exact = True
    for i, outcome in script:
        update_weights(p, OPERATORS[i], outcome)
        history[OPERATORS[i]].append(REWARDS[outcome])
        # closed form of w <- max((1 - r) w + r psi, floor), unrolled from w0 = 1
        w = 1.0
        for psi in history[OPERATORS[i]]:
            w = max((1 - REACTION) * w + REACTION * psi, MIN_WEIGHT)
        exact &= p.weights[i] == w
    ok = worst <= 1e-9 and exact
    assert report(6, ok, f"max relative temperature error {worst:.2e} (tol 1e-9), weights exact: {exact}")


def test_criterion_7_determinism():
    grid = load_builtin_map(SMALL.map_name)
    identical = 0
    cases = 0
    for i in range(3):
        inst = generate_instance(SMALL, grid, seed=i)
        seed = build_seed(inst)
        for method in METHODS:
            for mode in ("hard", "relaxed"):
                cfg = LnsConfig.for_method(method, mode=mode, budget_secs=None, budget_iters=20, rng_seed=77 + i)
                a = run_lns(inst, cfg, seed=seed, distances=DistanceTable(grid)).trace.to_csv()
                b = run_lns(inst, cfg, seed=seed, distances=DistanceTable(grid)).trace.to_csv()
                cases += 1
                identical += a.encode() == b.encode()
    assert report(7, identical == cases, f"{identical}/{cases} run pairs byte-identical")


def test_criterion_8_release_bounds():
    grid = load_builtin_map(SMALL.map_name)
    d = DistanceTable(grid)
    rng = random.Random(8)
    repaired = failed = violations = not_closed = 0
    attempts = 0
    incumbents = []
    for i in range(20):
        inst = generate_instance(SMALL, grid, seed=200 + i)
        incumbents.append((inst, build_seed(inst, d).solution))
    while repaired < 500:
        attempts += 1
        inst, inc = incumbents[attempts % len(incumbents)]
        op = rng.choice(OPERATORS)
        seeds = seed_tasks(op, inst, inc, d, Diagnostics(), rng.randint(1, 4), rng)
        nbhd = close_and_excise(inst, inc, seeds, d)
        dag = inst.precedence
        if nbhd.destroyed != transitive_successors(dag, seeds) or any(
            v not in nbhd.destroyed for u, v in dag.edges if u in nbhd.destroyed
        ):
            not_closed += 1
        if nbhd.failed:
            failed += 1
            continue
        method = rng.choice(METHODS)
        try:
            if method == "regret":
                cand = repair_regret(inst, nbhd, d).solution
            else:
                scope = "local" if method == "local-pbs" else "global"
                nbhd.mutable = mutable_agents(inst, nbhd, scope, d)
                prop = build_proposal(inst, nbhd, scope, d)
                cand = repair_neighborhood(inst, nbhd, prop, "hard", d).solution
        except (RepairFailure, ProposalFailure):
            failed += 1
            continue
        repaired += 1
        inc_c = inc.completions()
        for t in nbhd.destroyed:
            frozen = [inc_c[p] for p in dag.preds[t] if p not in nbhd.destroyed]
            bound = 1 + max(frozen) if frozen else 0
            violations += cand.completion(t) < bound
    ok = violations == 0 and not_closed == 0
    detail = f"{repaired} repaired ({failed} repair failures skipped), {violations} bound violations, {not_closed} non-closed destroyed sets"
    assert report(8, ok, detail)
