import pytest
from hypothesis import given, settings, strategies as st

from oracles import simulate_completions
from tapfpc.instance import AgentSpec, GeneratorConfig, Instance, PrecedenceDag, Task, crossing_instance, generate_instance
from tapfpc.seed import build_seed
from tapfpc.solution import (
    Solution,
    TaskTiming,
    build_solution,
    edge_slack,
    find_conflicts,
    improvement_metrics,
    precedence_wait,
    read_solution,
    sum_of_costs,
    total_precedence_wait,
    validate_solution,
    write_solution,
)
from tapfpc.world import DistanceTable, load_builtin_map, parse_map


def crossing_paths(instance, cells_a, cells_b):
    at = instance.map.index
    return [tuple(at(*c) for c in cells_a), tuple(at(*c) for c in cells_b)]


def crossing_flexible():
    inst = crossing_instance()
    paths = crossing_paths(
        inst,
        [(0, 0), (0, 1), (0, 2), (0, 3), (1, 3), (1, 2)],
        [(6, 0), (6, 1), (6, 2), (5, 2), (5, 3)],
    )
    return inst, build_solution(inst, [(0, 1), (2, 3)], paths, {0: 4, 1: 5, 2: 3, 3: 4})


def crossing_fixed():
    inst = crossing_instance()
    paths = crossing_paths(
        inst,
        [(0, 0), (0, 1), (0, 2), (0, 3), (1, 3), (2, 3), (3, 3), (4, 3), (5, 3)],
        [(6, 0), (6, 1), (6, 2), (5, 2), (4, 2), (3, 2), (2, 2), (1, 2)],
    )
    return inst, build_solution(inst, [(0, 3), (2, 1)], paths, {0: 4, 3: 8, 2: 3, 1: 7})


def test_crossing_flexible_is_valid_with_soc_9():
    inst, sol = crossing_flexible()
    report = validate_solution(inst, sol)
    assert report.ok, report.to_dict()
    assert sum_of_costs(sol) == 9


def test_crossing_fixed_is_valid_with_soc_15():
    inst, sol = crossing_fixed()
    assert validate_solution(inst, sol).ok
    assert sol.soc == 15


def test_unassigned_agents_cost_nothing():
    sol = Solution(((), ()), ((0,), (1,)), {})
    assert sum_of_costs(sol) == 0


def line_instance(width, agents, tasks, edges=()):
    g = parse_map(f"type octile\nheight 2\nwidth {width}\nmap\n" + ("." * width + "\n") * 2)
    return Instance(
        g,
        tuple(AgentSpec(i, g.index(*s)) for i, s in enumerate(agents)),
        tuple(Task(i, g.index(*c)) for i, c in enumerate(tasks)),
        PrecedenceDag(len(tasks), tuple(edges)),
    )


def test_edge_conflict_detected():
    inst = line_instance(2, [(0, 0), (1, 0)], [(1, 0), (0, 0)])
    sol = build_solution(inst, [(0,), (1,)], [(0, 1), (1, 0)], {0: 1, 1: 1})
    report = validate_solution(inst, sol)
    assert len(report.edge_conflicts) == 1 and not report.vertex_conflicts
    assert report.edge_conflicts[0].t == 1


def test_vertex_conflict_detected():
    inst = line_instance(3, [(0, 0), (2, 0)], [(1, 0), (2, 0)])
    sol = build_solution(inst, [(0,), (1,)], [(0, 1), (2, 1, 2)], {0: 1, 1: 2})
    report = validate_solution(inst, sol)
    assert len(report.vertex_conflicts) >= 1
    assert report.only_conflicts()


def test_parked_agent_blocks_later_arrivals():
    # agent 0 parks on (1,0) at t=1; agent 1 passes through at t=3
    paths = {0: (0, 1), 1: (4, 3, 2, 1, 0)}
    conflicts = find_conflicts(paths)
    assert [(c.kind, c.t, c.vertex) for c in conflicts] == [("vertex", 3, 1)]


def test_simultaneous_completion_violates_precedence():
    inst = line_instance(6, [(0, 0), (0, 1)], [(5, 0), (5, 1)], [(0, 1)])
    paths = [tuple(range(6)), tuple(range(6, 12))]
    sol = build_solution(inst, [(0,), (1,)], paths, {0: 5, 1: 5})
    report = validate_solution(inst, sol)
    assert report.precedence_violations == [(0, 1, 5, 5)]


def test_path_must_end_at_final_completion():
    inst, sol = crossing_flexible()
    padded = Solution(sol.sequences, (sol.paths[0] + (sol.paths[0][-1],), sol.paths[1]), sol.timings)
    assert validate_solution(inst, padded).path_errors


def test_jump_and_start_errors():
    inst, sol = crossing_flexible()
    broken = Solution(sol.sequences, ((sol.paths[0][1],) + sol.paths[0][1:], sol.paths[1]), sol.timings)
    assert any("start" in e for e in validate_solution(inst, broken).path_errors)
    jump = list(sol.paths[0])
    jump[2] = jump[4]
    broken = Solution(sol.sequences, (tuple(jump), sol.paths[1]), sol.timings)
    assert any("jumps" in e for e in validate_solution(inst, broken).path_errors)


def test_assignment_errors():
    inst, sol = crossing_flexible()
    dup = Solution(((0, 1, 2), (2, 3)), sol.paths, sol.timings)
    assert validate_solution(inst, dup).assignment_errors
    missing = Solution(((0, 1), (2,)), sol.paths, sol.timings)
    assert any("unassigned" in e for e in validate_solution(inst, missing).assignment_errors)


def test_wait_from_late_predecessor():
    # predecessor completes at 9; the successor's agent arrives at 6 and waits
    inst = line_instance(10, [(0, 0), (0, 1)], [(9, 0), (6, 1)], [(0, 1)])
    at = inst.map.index
    p0 = tuple(at(c, 0) for c in range(10))
    p1 = tuple(at(c, 1) for c in range(7)) + (at(6, 1),) * 4
    sol = build_solution(inst, [(0,), (1,)], [p0, p1], {0: 9, 1: 10})
    assert validate_solution(inst, sol).ok
    assert sol.timings[1] == TaskTiming(6, 10)
    assert precedence_wait(sol, 1) == 4
    assert precedence_wait(sol, 0) == 0


def test_wait_of_untimed_task_raises():
    _, sol = crossing_flexible()
    with pytest.raises(KeyError):
        precedence_wait(sol, 99)


def test_slack_examples():
    timings = {0: TaskTiming(3, 3), 1: TaskTiming(3, 4), 2: TaskTiming(8, 8)}
    sol = Solution(((0, 1, 2),), ((0,),), timings)
    assert edge_slack(sol, (0, 1)) == 0
    assert edge_slack(sol, (0, 2)) == 5


def test_chain_wait_matches_simulation():
    inst = line_instance(8, [(0, 0), (7, 1)], [(7, 0), (6, 1), (0, 1)], [(0, 1), (1, 2)])
    seed = build_seed(inst)
    sol = seed.solution
    assert validate_solution(inst, sol).ok
    goals = [t.goal for t in inst.tasks]
    preds = [inst.precedence.preds[t] for t in range(inst.m)]
    arrival, done = simulate_completions(goals, preds, sol.sequences, sol.paths)
    assert done == sol.completions()
    assert total_precedence_wait(sol) == sum(done[t] - arrival[t] for t in done)


def test_improvement_examples():
    m = improvement_metrics(15, 9)
    assert (m.delta, m.relative, m.improved) == (6, 40.0, True)
    m = improvement_metrics(200, 200)
    assert (m.delta, m.relative, m.improved) == (0, 0.0, False)
    assert improvement_metrics(200, 150).relative == 25.0
    assert improvement_metrics(10, 8, seed_wait=4, final_wait=1).wait_reduction_pct == 75.0
    with pytest.raises(ValueError):
        improvement_metrics(0, 0)


def test_solution_json_round_trip():
    inst, sol = crossing_fixed()
    again = read_solution(inst, write_solution(inst, sol))
    assert again == sol
    assert validate_solution(inst, again).ok


def seeded(seed):
    g = load_builtin_map("empty-6-6.map")
    inst = generate_instance(GeneratorConfig("empty-6-6.map", 3, 5, 3), g, seed=seed)
    return inst, build_seed(inst).solution


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 5000), pad=st.integers(1, 6))
def test_padding_changes_nothing(seed, pad):
    inst, sol = seeded(seed)
    padded = [p + (p[-1],) * pad for p in sol.paths]
    again = build_solution(inst, sol.sequences, padded, sol.completions())
    assert sum_of_costs(again) == sum_of_costs(sol)
    assert find_conflicts(dict(enumerate(padded))) == find_conflicts(dict(enumerate(sol.paths)))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 5000))
def test_valid_solution_properties(seed):
    inst, sol = seeded(seed)
    first = validate_solution(inst, sol)
    assert first.ok and first.to_dict() == validate_solution(inst, sol).to_dict()
    d = DistanceTable(inst.map)
    for a, seq in enumerate(sol.sequences):
        v, lower = inst.start(a), 0
        for task in seq:
            tm = sol.timings[task]
            lower += d.distance(v, inst.goal(task))
            assert tm.completion >= tm.arrival >= lower
            preds = inst.precedence.preds[task]
            if all(sol.completion(p) < tm.arrival for p in preds):
                assert precedence_wait(sol, task) == 0
            v, lower = inst.goal(task), max(lower, tm.completion)
