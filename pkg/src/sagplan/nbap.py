"""NBA-P: stopping-rule level choice, energy-feasible rows, row selection.

The planner is a pure function of the mission view, one robot's state and the
rows other robots hold.  A decision yields one :class:`Action`: go and attempt
the first pending task of the chosen level in a row, or head back to base.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from . import graph as g
from .graph import AisleGraph, Heading, VertexId
from .stopping import PriorityClass, TripState, select_level


@dataclass
class RobotState:
    id: int
    pose: VertexId
    heading: Heading
    p: float
    q: float
    energy: float
    p0: float = 0.0
    t0: float = 0.0
    # rows this robot has claimed for its current action (set by the engine)
    held: frozenset = field(default_factory=frozenset)

    @classmethod
    def at_base(cls, rid: int, graph: AisleGraph, base: VertexId, p0: float, t0: float) -> RobotState:
        heading = Heading.HR if base.col == 0 else Heading.HL
        return cls(rid, base, heading, p0, 0.0, t0, p0, t0)

    @property
    def trip(self) -> TripState:
        return TripState(self.p, self.q)

    def occupied_row(self, graph: AisleGraph) -> int | None:
        return None if graph.is_boundary(self.pose) else self.pose.row

    def fresh(self) -> bool:
        return self.p == self.p0 and self.q == 0.0 and self.energy == self.t0


class ActionKind(enum.Enum):
    PERFORM = "perform"  # walk the path, then attempt the task at its end
    RETURN = "return"  # walk the path to a base, then reset budgets
    MOVE = "move"  # walk the path, then decide again
    WAIT = "wait"  # stay put for one step


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    path: tuple[VertexId, ...] = ()
    row: int | None = None
    level: int = 0

    @property
    def target(self) -> VertexId | None:
        return self.path[-1] if self.path else None


def perform_in_row(row: int, path, level: int) -> Action:
    return Action(ActionKind.PERFORM, tuple(path), row, level)


def return_to_base(path) -> Action:
    return Action(ActionKind.RETURN, tuple(path))


WAIT = Action(ActionKind.WAIT)


def rows_touched(graph: AisleGraph, pose: VertexId, path: Iterable[VertexId]) -> frozenset:
    """Rows whose interior the robot occupies now or while following ``path``."""
    rows = {v.row for v in path if not graph.is_boundary(v)}
    if not graph.is_boundary(pose):
        rows.add(pose.row)
    return frozenset(rows)


# -- energy feasibility ----------------------------------------------------


def energy_feasible(graph: AisleGraph, robot: RobotState, row: int) -> bool:
    """Whether the robot can cross ``row`` end to end and still reach a base."""
    return robot.energy >= g.through_row_cost(graph, robot, row)


def _own_row_ahead_cost(graph: AisleGraph, robot: RobotState) -> float:
    # finish the current row ahead, then straight down the exit column
    side = g.exit_side(graph, robot.pose, robot.heading)
    return g.forward_cost(graph, robot.pose, robot.heading) + float(graph.gamma[side, robot.pose.row - 1])


def _is_ahead(graph: AisleGraph, robot: RobotState, v: VertexId) -> bool:
    if graph.is_boundary(robot.pose) or v.row != robot.pose.row:
        return False
    return (v.col - robot.pose.col) * robot.heading.step > 0


def filter_q2(graph: AisleGraph, robot: RobotState, q1, occupied_rows=frozenset()) -> set:
    """Tasks of ``q1`` whose rows pass the energy check and are not held by
    another robot.  Tasks ahead in the robot's own row are checked against the
    cheaper finish-this-row cost."""
    own = robot.occupied_row(graph)
    occupied = set(occupied_rows) - {own}
    cache: dict[int, bool] = {}
    out = set()
    for t in q1:
        r = t.vertex.row
        if r in occupied:
            continue
        if _is_ahead(graph, robot, t.vertex):
            key = -r
            if key not in cache:
                cache[key] = robot.energy >= _own_row_ahead_cost(graph, robot)
        else:
            key = r
            if key not in cache:
                cache[key] = energy_feasible(graph, robot, r)
        if cache[key]:
            out.add(t)
    return out


# -- row selection ---------------------------------------------------------


def _best_row(rows, counts, alphas, p: float, mean_cost: float) -> int:
    cap = math.floor(p / mean_cost)
    best = None
    for r, c, a in zip(rows, counts, alphas):
        key = (-min(int(c), cap), float(a), int(r))
        if best is None or key < best[0]:
            best = (key, int(r))
    return best[1]


def _row_tally(graph: AisleGraph, robot: RobotState, tasks) -> dict[int, int]:
    # own row counts only the tasks still ahead when there are any
    tally: dict[int, int] = {}
    ahead = 0
    own = robot.occupied_row(graph)
    for t in tasks:
        if _is_ahead(graph, robot, t.vertex):
            ahead += 1
        tally[t.vertex.row] = tally.get(t.vertex.row, 0) + 1
    if own is not None and ahead:
        tally[own] = ahead
    return tally


def select_row(q2, robot: RobotState, cls: PriorityClass, graph: AisleGraph) -> int:
    """Row expected to yield the most completions within the remaining
    resource; closer rows (smaller ``t_alpha``) and then lower indices win ties."""
    tally = _row_tally(graph, robot, q2)
    if not tally:
        raise ValueError("select_row needs a nonempty candidate set")
    own = robot.occupied_row(graph)
    fwd = g.forward_cost(graph, robot.pose, robot.heading)
    rows = sorted(tally)
    alphas = [fwd if r == own else g.t_alpha(graph, robot, r) for r in rows]
    return _best_row(rows, [tally[r] for r in rows], alphas, robot.p, cls.mean_cost)


# -- paths -----------------------------------------------------------------


def path_into_row(graph: AisleGraph, robot: RobotState, row: int, target_col: int) -> list[VertexId]:
    """Legal walk from the robot to ``(row, target_col)``.

    If the target lies ahead in the robot's own row the robot just keeps
    going; otherwise it exits ahead, travels the boundary column and enters
    ``row`` from that side.
    """
    pose = robot.pose
    target = VertexId(row, target_col)
    if _is_ahead(graph, robot, target):
        return g.row_walk(graph, row, pose.col, target_col)
    path = g.walk_to_row_end(graph, pose, robot.heading)
    here = path[-1] if path else pose
    side = graph.column_side(here.col)
    path += g.column_walk(graph, side, here.row, row)
    path += g.row_walk(graph, row, graph.side_column(side), target_col)
    return path


def plan_return(graph: AisleGraph, robot: RobotState, blocked_rows=()) -> list[VertexId]:
    """Cheapest legal walk to a base station (empty if already on one)."""
    if graph.is_base(robot.pose):
        return []
    return g.return_path(graph, robot.pose, robot.heading, blocked_rows)


# -- the decision loop -----------------------------------------------------


def _candidate_rows(world, robot: RobotState, level: int, occupied):
    """Per-row counts, alpha and mask of rows passing the energy and
    occupancy filters for one level.  Array version of ``filter_q2``."""
    graph = world.graph
    counts = world.row_counts(level).copy()
    alpha, beta, gamma = g.row_costs(graph, robot.pose, robot.heading)
    alpha = alpha.copy()
    ok = robot.energy >= alpha + beta + gamma
    ok &= counts > 0
    for r in occupied:
        ok[r - 1] = False
    own = robot.occupied_row(graph)
    if own is not None:
        k = own - 1
        ahead = world.count_ahead(own, robot.pose.col, robot.heading.step, level)
        generic = robot.energy >= alpha[k] + beta[k] + gamma[k]
        if ahead and robot.energy >= _own_row_ahead_cost(graph, robot):
            counts[k] = ahead
            ok[k] = True
        else:
            ok[k] = generic and counts[k] > 0
        alpha[k] = g.forward_cost(graph, robot.pose, robot.heading)
    return counts, alpha, ok


def decide(world, robot: RobotState, occupied_rows=frozenset()):
    """Algorithm loop returning ``(action, level)``; level 0 means return."""
    graph = world.graph
    own = robot.occupied_row(graph)
    occupied = frozenset(occupied_rows) - {own}
    state = robot.trip
    start = None
    while True:
        level = select_level(state, world.classes, world.has_level, start)
        if level == 0:
            return return_to_base(plan_return(graph, robot, occupied)), 0
        counts, alpha, ok = _candidate_rows(world, robot, level, occupied)
        rows = np.flatnonzero(ok) + 1
        if rows.size:
            break
        start = level - 1
        if start < world.classes[0].level:
            return return_to_base(plan_return(graph, robot, occupied)), 0
    cls = world.cls(level)
    row = _best_row(rows, counts[rows - 1], alpha[rows - 1], robot.p, cls.mean_cost)
    if row == own and world.count_ahead(own, robot.pose.col, robot.heading.step, level) and (
        robot.energy >= _own_row_ahead_cost(graph, robot)
    ):
        col = world.first_task(row, robot.pose.col, robot.heading.step, level)
    else:
        side = g.exit_side(graph, robot.pose, robot.heading)
        if side == 0:
            col = world.first_task(row, 0, 1, level)
        else:
            col = world.first_task(row, graph.n + 1, -1, level)
    return perform_in_row(row, path_into_row(graph, robot, row, col), level), level


def next_action(world, robot: RobotState, occupied_rows=frozenset()) -> Action:
    """One NBA-P decision for ``robot`` given rows held by other robots."""
    return decide(world, robot, occupied_rows)[0]


def coordinate_step(world, robots) -> list[Action]:
    """Decide for every robot in id order; each robot sees the rows currently
    occupied by the others plus the rows claimed by earlier decisions."""
    graph = world.graph
    robots = sorted(robots, key=lambda r: r.id)
    claims = {r.id: rows_touched(graph, r.pose, ()) for r in robots}
    actions = []
    for r in robots:
        others = frozenset().union(*(c for k, c in claims.items() if k != r.id))
        act = next_action(world, r, others)
        claims[r.id] = rows_touched(graph, r.pose, act.path)
        actions.append(act)
    return actions


class NbaPlanner:
    """Engine adapter for NBA-P."""

    name = "NBA-P"

    def __init__(self, world, team_size: int = 1):
        self.world = world

    def decide(self, robot: RobotState, others_held: frozenset):
        act, level = decide(self.world, robot, others_held)
        return act, {"level": level}
