"""Reference planners: naive and informed lawnmower, series greedy partial row.

All planners expose ``decide(robot, others_held) -> (Action, info)`` like
:class:`sagplan.nbap.NbaPlanner` and keep their per-robot memory inside the
planner object.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import graph as g
from .graph import VertexId
from .nbap import WAIT, Action, ActionKind, RobotState, path_into_row, perform_in_row, plan_return, return_to_base


@dataclass
class LawnmowerCursor:
    rows: tuple[int, ...]
    index: int = 0
    # True once the row at ``index`` was left unfinished and must be resumed
    resume: bool = True
    sweeps: int = 0

    @property
    def current_row(self) -> int:
        return self.rows[self.index]

    def order_from_here(self):
        """Candidate positions in sweep order, wrapping to a new sweep."""
        k = len(self.rows)
        first = self.index if self.resume else self.index + 1
        return [(first + d) % k for d in range(k)]


def sweep_rows(m: int, base_row: int, robot_id: int = 0, team_size: int = 1) -> tuple[int, ...]:
    """Rows assigned to one robot, in visiting order.

    The sweep starts at the extremal row nearer the base and runs toward the
    other end; teams interleave rows by robot id.
    """
    rows = [r for r in range(1, m + 1) if (r - 1) % team_size == robot_id]
    if base_row - 1 > m - base_row:
        rows.reverse()
    return tuple(rows)


class LawnmowerPlanner:
    """Meandering row sweep.  ``informed=False`` is N-LM, ``True`` is I-LM."""

    def __init__(self, world, team_size: int = 1, informed: bool = False, base_row: int | None = None):
        self.world = world
        self.team_size = team_size
        self.informed = informed
        self.name = "I-LM" if informed else "N-LM"
        g0 = world.graph
        self.base_row = base_row if base_row is not None else g0.base_stations[0].row
        self.cursors: dict[int, LawnmowerCursor] = {}
        # level value -> mean cost, for the informed rule
        top = max(c.level for c in world.classes)
        self._mean = np.full(top + 1, np.inf)
        for c in world.classes:
            self._mean[c.level] = c.mean_cost

    def cursor(self, robot: RobotState) -> LawnmowerCursor:
        cur = self.cursors.get(robot.id)
        if cur is None:
            rows = sweep_rows(self.world.graph.m, self.base_row, robot.id % self.team_size, self.team_size)
            cur = self.cursors[robot.id] = LawnmowerCursor(rows)
        return cur

    def _attemptable(self, levels: np.ndarray, p: float) -> np.ndarray:
        if self.informed:
            return (levels > 0) & (p > self._mean[levels])
        return (levels > 0) & (p > 0)

    def decide(self, robot: RobotState, others_held: frozenset):
        world, graph = self.world, self.world.graph
        cur = self.cursor(robot)
        pose = robot.pose
        ret = return_to_base(plan_return(graph, robot, others_held))
        if not graph.is_boundary(pose):
            if robot.p <= 0:
                cur.resume = True
                return ret, {}
            step = robot.heading.step
            col = world.first_task(pose.row, pose.col, step, accept=lambda seg: self._attemptable(seg, robot.p))
            if col is not None:
                return perform_in_row(pose.row, g.row_walk(graph, pose.row, pose.col, col), 0), {}
            if self.informed and not self._anything_attemptable(cur, robot.p):
                cur.resume = True
                return ret, {}
            cur.resume = False
            return Action(ActionKind.MOVE, tuple(g.walk_to_row_end(graph, pose, robot.heading))), {}

        if robot.p <= 0 or not cur.rows:
            return ret, {}
        rows = np.array(cur.rows, dtype=int)
        attempt = self._attemptable(world.levels[rows - 1], robot.p).any(axis=1)
        pick = next((k for k in cur.order_from_here() if attempt[k]), None)
        if pick is None:
            return ret, {}
        row = cur.rows[pick]
        if robot.energy < g.through_row_cost(graph, robot, row):
            return ret, {}
        if row in others_held:
            return WAIT, {}
        if pick <= cur.index and not cur.resume:
            cur.sweeps += 1
        cur.index, cur.resume = pick, False
        side = graph.column_side(pose.col)
        start = 0 if side == 0 else graph.n + 1
        col = world.first_task(row, start, 1 if side == 0 else -1, accept=lambda seg: self._attemptable(seg, robot.p))
        return perform_in_row(row, path_into_row(graph, robot, row, col), 0), {}

    def _anything_attemptable(self, cur: LawnmowerCursor, p: float) -> bool:
        rows = np.array(cur.rows, dtype=int)
        return bool(self._attemptable(self.world.levels[rows - 1], p).any())


def nlm_next(world, robot: RobotState, cursor: LawnmowerCursor, others_held=frozenset()) -> Action:
    planner = LawnmowerPlanner(world, informed=False)
    planner.cursors[robot.id] = cursor
    return planner.decide(robot, frozenset(others_held))[0]


def ilm_next(world, robot: RobotState, cursor: LawnmowerCursor, others_held=frozenset()) -> Action:
    planner = LawnmowerPlanner(world, informed=True)
    planner.cursors[robot.id] = cursor
    return planner.decide(robot, frozenset(others_held))[0]


# -- series greedy partial row ---------------------------------------------


@dataclass
class Segment:
    row: int
    cols: list[int]
    expected_cost: float
    expected_gain: float


@dataclass
class Route:
    segments: list[Segment] = field(default_factory=list)

    @property
    def rows(self) -> frozenset:
        return frozenset(s.row for s in self.segments)


def plan_route(world, pose: VertexId, energy: float, p: float, excluded=frozenset()) -> Route:
    """Greedy chain of partial-row segments from a boundary vertex.

    Each step adds the (row, first k tasks from the entry end) pair with the
    best expected gain per unit of expected task cost plus travel, keeping
    the far-end return affordable and the expected task cost below ``p``.
    """
    graph = world.graph
    top = max(c.level for c in world.classes)
    mean = np.zeros(top + 1)
    gain = np.zeros(top + 1)
    for c in world.classes:
        mean[c.level] = c.mean_cost
        gain[c.level] = c.mean_cost * c.gain_ratio
    side, row = graph.column_side(pose.col), pose.row
    route = Route()
    excluded = set(excluded)
    while True:
        lv = world.levels if side == 0 else world.levels[:, ::-1]
        mask = lv > 0
        cw = np.cumsum(mean[lv], axis=1)
        cg = np.cumsum(gain[lv], axis=1)
        cp = graph.col_prefix[side]
        alpha = np.abs(cp - cp[row - 1])
        travel = alpha + graph.beta
        row_ok = energy >= travel + graph.gamma[1 - side]
        for r in excluded:
            row_ok[r - 1] = False
        valid = mask & row_ok[:, None] & (cw < p)
        if not valid.any():
            return route
        denom = cw + travel[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(denom > 0, cg / denom, np.inf)
        ratio = np.where(valid, ratio, -np.inf)
        best = ratio.max()
        ii, jj = np.nonzero(ratio == best)
        # smallest row first, then the longest segment in it
        r0 = ii.min()
        j0 = jj[ii == r0].max()
        cols_idx = np.flatnonzero(mask[r0, : j0 + 1]) + 1
        cols = [int(c) if side == 0 else graph.n + 1 - int(c) for c in cols_idx]
        r = int(r0) + 1
        route.segments.append(Segment(r, cols, float(cw[r0, j0]), float(cg[r0, j0])))
        excluded.add(r)
        energy -= float(travel[r0])
        p -= float(cw[r0, j0])
        side, row = 1 - side, r


def sgpr_plan(world, robots, held=None) -> dict[int, Route]:
    """Plan routes robot by robot; each robot avoids rows already claimed."""
    held = dict(held or {})
    routes = {}
    for r in sorted(robots, key=lambda x: x.id):
        others = frozenset().union(*(v for k, v in held.items() if k != r.id))
        route = plan_route(world, r.pose, r.energy, r.p, others)
        routes[r.id] = route
        held[r.id] = route.rows
    return routes


class SgprPlanner:
    name = "S-GPR"

    def __init__(self, world, team_size: int = 1):
        self.world = world
        self.routes: dict[int, Route] = {}

    def decide(self, robot: RobotState, others_held: frozenset):
        graph = self.world.graph
        route = self.routes.get(robot.id)
        if route is None or not route.segments:
            if not graph.is_base(robot.pose):
                return return_to_base(plan_return(graph, robot, others_held)), {}
            route = plan_route(self.world, robot.pose, robot.energy, robot.p, others_held)
            self.routes[robot.id] = route
            if not route.segments:
                return return_to_base([]), {}
        if robot.p <= 0:
            route.segments.clear()
            return return_to_base(plan_return(graph, robot, others_held)), {}
        seg = route.segments[0]
        col = seg.cols.pop(0)
        if not seg.cols:
            route.segments.pop(0)
        hold = route.rows | {seg.row}
        if not route.segments:
            # last task; release the plan so the next decision heads home
            self.routes.pop(robot.id)
        path = path_into_row(graph, robot, seg.row, col)
        return perform_in_row(seg.row, path, 0), {"hold": hold}
