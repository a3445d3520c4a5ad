from dataclasses import replace

import numpy as np
import pytest

from sagplan.baselines import LawnmowerCursor, LawnmowerPlanner, ilm_next, nlm_next, plan_route, sgpr_plan, sweep_rows
from sagplan.graph import Heading, VertexId, build_graph
from sagplan.nbap import ActionKind, RobotState
from sagplan.sim import Mission, compute_metrics, execute
from sagplan.stopping import PriorityClass
from sagplan.world import Task, World

from helpers import random_mission_case


def robot(pose, heading=Heading.HR, p=10.0, energy=100.0, rid=0):
    return RobotState(rid, pose, heading, p, 0.0, energy, p, energy)


def tasks_at(cells, level=1, cost=1.0):
    return [Task(VertexId(r, c), level, cost) for r, c in cells]


def test_sweep_rows_start_near_base():
    assert sweep_rows(5, 1) == (1, 2, 3, 4, 5)
    assert sweep_rows(5, 5) == (5, 4, 3, 2, 1)
    assert sweep_rows(5, 1, robot_id=1, team_size=2) == (2, 4)


def test_cursor_order_wraps():
    cur = LawnmowerCursor((1, 2, 3), index=1, resume=False)
    assert cur.order_from_here() == [2, 0, 1]
    cur.resume = True
    assert cur.order_from_here() == [1, 2, 0]


def test_nlm_enters_first_row_and_attempts_first_task():
    g = build_graph(3, 4, 1.0, bases=[(1, 0), (3, 5)])
    w = World(g, [PriorityClass(1, 1, 1.0)], tasks_at([(1, 3), (2, 1)]))
    act = nlm_next(w, robot(VertexId(1, 0)), LawnmowerCursor(sweep_rows(3, 1)))
    assert act.kind is ActionKind.PERFORM and act.target == VertexId(1, 3)


def test_nlm_skips_rows_without_tasks():
    g = build_graph(3, 4, 1.0, bases=[(1, 0), (3, 5)])
    w = World(g, [PriorityClass(1, 1, 1.0)], tasks_at([(3, 2)]))
    act = nlm_next(w, robot(VertexId(1, 0)), LawnmowerCursor(sweep_rows(3, 1)))
    assert act.target == VertexId(3, 2)
    assert act.path[0] == VertexId(2, 0)


def test_nlm_returns_with_empty_resource():
    g = build_graph(3, 4, 1.0, bases=[(1, 0), (3, 5)])
    w = World(g, [PriorityClass(1, 1, 1.0)], tasks_at([(1, 3)]))
    r = robot(VertexId(1, 2), p=0.0)
    act = nlm_next(w, r, LawnmowerCursor((1, 2, 3)))
    assert act.kind is ActionKind.RETURN and act.path[-1] in g.base_stations


def test_ilm_skips_tasks_above_remaining_resource():
    g = build_graph(2, 4, 1.0, bases=[(1, 0), (2, 5)])
    classes = [PriorityClass(1, 1, 1.0), PriorityClass(2, 2, 4.0)]
    w = World(g, classes, tasks_at([(1, 2)], 2) + tasks_at([(1, 3)], 1))
    act = ilm_next(w, robot(VertexId(1, 0), p=2.0), LawnmowerCursor((1, 2)))
    assert act.target == VertexId(1, 3)
    act = nlm_next(w, robot(VertexId(1, 0), p=2.0), LawnmowerCursor((1, 2)))
    assert act.target == VertexId(1, 2)


def test_ilm_returns_when_nothing_attemptable():
    g = build_graph(2, 4, 1.0, bases=[(1, 0), (2, 5)])
    w = World(g, [PriorityClass(1, 1, 3.0)], tasks_at([(2, 2)]))
    act = ilm_next(w, robot(VertexId(1, 0), p=3.0), LawnmowerCursor((1, 2)))
    assert act.kind is ActionKind.RETURN


def test_lawnmower_waits_for_held_row():
    g = build_graph(2, 4, 1.0, bases=[(1, 0), (2, 5)])
    w = World(g, [PriorityClass(1, 1, 1.0)], tasks_at([(1, 2)]))
    act = nlm_next(w, robot(VertexId(1, 0)), LawnmowerCursor((1, 2)), others_held={1})
    assert act.kind is ActionKind.WAIT


def test_ilm_never_attempts_below_mean():
    for seed in range(40):
        mission = random_mission_case(seed)
        trace = execute(mission, "I-LM", 1 + seed % 3)
        state = {}
        means = {c.level: c.mean_cost for c in mission.classes}
        for ev in trace.events:
            if ev[0] == "decide":
                state[ev[1]] = ev[6]
            elif ev[0] == "attempt":
                # p at the last decision equals p at the attempt: nothing is spent while moving
                assert state[ev[1]] > means[ev[3]]


def test_ilm_no_aborts_with_deterministic_costs():
    g = build_graph(6, 8, 1.0, bases=[(1, 0), (6, 9)])
    classes = [PriorityClass(1, 1, 1.0), PriorityClass(2, 2, 2.0)]
    rng = np.random.default_rng(0)
    cells = rng.choice(48, size=30, replace=False)
    tasks = tuple(Task(VertexId(int(c) // 8 + 1, int(c) % 8 + 1), 1 + k % 2, 1.0 + k % 2) for k, c in enumerate(cells))
    mission = Mission(g, tasks, classes, 7.0, 60.0)
    for team in (1, 2):
        m = compute_metrics(execute(mission, "I-LM", team))
        assert m.aborts == 0 and m.completed == 30


def test_plan_route_respects_budgets():
    g = build_graph(4, 5, 1.0, bases=[(1, 0), (1, 6)])
    classes = [PriorityClass(1, 1, 1.0)]
    w = World(g, classes, tasks_at([(1, 1), (1, 2), (2, 3), (4, 1), (4, 2), (4, 3), (4, 4)]))
    route = plan_route(w, VertexId(1, 0), 100.0, 3.5)
    assert sum(s.expected_cost for s in route.segments) < 3.5
    assert len({s.row for s in route.segments}) == len(route.segments)
    # the first segment is the cheapest gain per unit: row 1 is right at the base
    assert route.segments[0].row == 1


def test_plan_route_alternates_entry_side():
    g = build_graph(3, 4, 1.0, bases=[(1, 0), (1, 5)])
    w = World(g, [PriorityClass(1, 1, 1.0)], tasks_at([(1, 1), (1, 2), (1, 4), (2, 1), (2, 4)]))
    route = plan_route(w, VertexId(1, 0), 100.0, 100.0)
    # row 1: gain 3 over 3 + 3; row 2: gain 2 over 2 + 1 + 3
    assert route.segments[0].row == 1 and route.segments[0].cols == [1, 2, 4]
    # second segment enters row 2 from the right, so column 4 comes first
    assert route.segments[1].cols == [4, 1]


def test_plan_route_empty_without_energy():
    g = build_graph(2, 4, 1.0, bases=[(1, 0), (1, 5)])
    w = World(g, [PriorityClass(1, 1, 1.0)], tasks_at([(2, 2)]))
    assert plan_route(w, VertexId(1, 0), 1.0, 10.0).segments == []


def test_sgpr_plan_assigns_disjoint_rows():
    g = build_graph(4, 4, 1.0, bases=[(1, 0), (1, 5)])
    w = World(g, [PriorityClass(1, 1, 1.0)], tasks_at([(r, c) for r in range(1, 5) for c in (1, 2)]))
    routes = sgpr_plan(w, [robot(VertexId(1, 0), rid=0, p=4.5), robot(VertexId(1, 0), rid=1, p=4.5)])
    assert routes[0].rows and routes[1].rows
    assert not routes[0].rows & routes[1].rows


@pytest.mark.parametrize("planner", ["N-LM", "I-LM", "S-GPR"])
def test_baselines_complete_random_missions(planner):
    for seed in range(30):
        mission = random_mission_case(seed)
        m = compute_metrics(execute(mission, planner, 1 + seed % 3))
        assert m.completed == len(mission.tasks)


def test_nlm_abort_keeps_task_pending():
    g = build_graph(1, 3, 1.0, bases=[(1, 0), (1, 4)])
    tasks = (Task(VertexId(1, 1), 1, 2.0), Task(VertexId(1, 2), 1, 3.0))
    trace = execute(Mission(g, tasks, (PriorityClass(1, 1, 2.0),), 4.0, 20.0), "N-LM")
    ab = [e for e in trace.events if e[0] == "abort"]
    assert ab == [("abort", 0, VertexId(1, 2), 2.0)]
    done = [e[2] for e in trace.events if e[0] == "complete"]
    assert done == [VertexId(1, 1), VertexId(1, 2)]


def test_nlm_starts_new_sweep_when_tasks_remain():
    g = build_graph(2, 2, 1.0, bases=[(1, 0), (2, 3)])
    w = World(g, [PriorityClass(1, 1, 1.0)], tasks_at([(1, 1)]))
    cur = LawnmowerCursor((1, 2), index=1, resume=False)
    act = nlm_next(w, robot(VertexId(1, 0)), cur)
    assert act.target == VertexId(1, 1) and cur.sweeps == 1


@pytest.mark.parametrize("p, attempts", [(5.0, True), (1.5, False)])
def test_ilm_attempt_rule(p, attempts):
    g = build_graph(1, 4, 1.0, bases=[(1, 0), (1, 5)])
    w = World(g, [PriorityClass(1, 1, 2.0)], tasks_at([(1, 3)], cost=6.0))
    act = ilm_next(w, robot(VertexId(1, 1), p=p), LawnmowerCursor((1,)))
    assert (act.kind is ActionKind.PERFORM and act.target == VertexId(1, 3)) == attempts


def test_ilm_attempts_then_aborts_when_actual_cost_is_high():
    g = build_graph(1, 2, 1.0, bases=[(1, 0), (1, 3)])
    tasks = (Task(VertexId(1, 1), 1, 6.0),)
    trace = execute(Mission(g, tasks, (PriorityClass(1, 1, 2.0),), 6.0 - 1.0 + 1.0, 10.0), "I-LM")
    assert [e[0] for e in trace.events if e[0] in ("attempt", "complete")] == ["attempt", "complete"]
    g2 = build_graph(1, 2, 1.0, bases=[(1, 0), (1, 3)])
    mission = Mission(g2, (Task(VertexId(1, 1), 1, 5.0), Task(VertexId(1, 2), 1, 5.0)), (PriorityClass(1, 1, 2.0),), 8.0, 10.0)
    trace = execute(mission, "I-LM")
    assert any(e[0] == "abort" for e in trace.events)


def test_sgpr_single_row_one_segment():
    g = build_graph(3, 5, 1.0, bases=[(2, 0), (2, 6)])
    w = World(g, [PriorityClass(1, 1, 1.0)], tasks_at([(3, c) for c in range(1, 6)]))
    route = plan_route(w, VertexId(2, 0), 100.0, 100.0)
    assert len(route.segments) == 1 and route.segments[0].cols == [1, 2, 3, 4, 5]


def test_sgpr_denser_row_first():
    g = build_graph(3, 4, 1.0, bases=[(2, 0), (2, 5)])
    w = World(g, [PriorityClass(1, 1, 1.0)], tasks_at([(1, 1), (1, 2), (1, 3), (1, 4), (3, 1), (3, 2)]))
    route = plan_route(w, VertexId(2, 0), 100.0, 100.0)
    assert route.segments[0].row == 1


def test_sgpr_budget_exhaustion_ends_route_and_returns():
    g = build_graph(3, 4, 1.0, bases=[(2, 0), (2, 5)])
    w = World(g, [PriorityClass(1, 1, 1.0)], tasks_at([(r, c) for r in (1, 3) for c in (1, 2, 3, 4)]))
    route = plan_route(w, VertexId(2, 0), 100.0, 2.5)
    assert sum(len(s.cols) for s in route.segments) == 2
    mission = Mission(g, tuple(tasks_at([(r, c) for r in (1, 3) for c in (1, 2, 3, 4)])), (PriorityClass(1, 1, 1.0),), 2.5, 100.0)
    trace = execute(mission, "S-GPR")
    first_reset = next(k for k, e in enumerate(trace.events) if e[0] == "reset")
    assert sum(e[0] == "complete" for e in trace.events[:first_reset]) == 2
