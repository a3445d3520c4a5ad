"""Mission generation, the lock-step execution engine, traces and metrics.

Every tick each robot, in id order, performs one primitive: move along one
edge, attempt the task under it, or stay put.  Decisions are taken whenever
a robot has nothing left to do and are free.  A robot arriving at a base
station ends its trip there: resource and energy are restored.
"""

from __future__ import annotations

import json
import math
from collections import deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .graph import AisleGraph, GraphError, Heading, VertexId, snap
from .nbap import ActionKind, NbaPlanner, RobotState, rows_touched
from .baselines import LawnmowerPlanner, SgprPlanner
from .stopping import PriorityClass, sorted_classes
from .world import Task, World

TRACE_SCHEMA = 1

PLANNERS = ("NBA-P", "N-LM", "I-LM", "S-GPR")
_ALIASES = {"nbap": "NBA-P", "nba-p": "NBA-P", "nlm": "N-LM", "n-lm": "N-LM", "ilm": "I-LM", "i-lm": "I-LM", "sgpr": "S-GPR", "s-gpr": "S-GPR"}

_PURPOSES = {"mission": 0, "study": 1, "field": 2}


def planner_name(name: str) -> str:
    key = name.strip().lower()
    if key not in _ALIASES:
        raise ValueError(f"unknown planner {name!r}; choose from {', '.join(PLANNERS)}")
    return _ALIASES[key]


class MissionError(RuntimeError):
    """An execution invariant broke.  ``trace`` holds the events so far."""

    def __init__(self, message: str, trace: MissionTrace | None = None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class RandomSource:
    """Seeded family of independent generators, one per (trial, robot, purpose)."""

    seed: int

    def stream(self, trial: int = 0, robot: int = 0, purpose: str = "mission") -> np.random.Generator:
        key = [int(self.seed), int(trial), int(robot), _PURPOSES[purpose]]
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


@dataclass(frozen=True)
class Mission:
    graph: AisleGraph
    tasks: tuple[Task, ...]
    classes: tuple[PriorityClass, ...]
    p0: float
    t0: float
    start: VertexId | None = None

    def __post_init__(self):
        object.__setattr__(self, "classes", sorted_classes(self.classes))
        if self.p0 < 0 or self.t0 < 0:
            raise ValueError("budgets must be nonnegative")

    @property
    def start_base(self) -> VertexId:
        return self.start if self.start is not None else self.graph.base_stations[0]

    @property
    def ground_truth_gain(self) -> float:
        mu = {c.level: c.gain_ratio for c in self.classes}
        return float(sum(mu[t.level] * t.actual_cost for t in self.tasks))


def split_counts(count: int, mix: Mapping[int, float]) -> dict[int, int]:
    """Largest-remainder split of ``count`` tasks over levels by proportion."""
    levels = sorted(mix)
    w = np.array([float(mix[s]) for s in levels])
    if (w < 0).any() or w.sum() <= 0:
        raise ValueError(f"invalid level mix {dict(mix)}")
    exact = count * w / w.sum()
    base = np.floor(exact).astype(int)
    short = count - int(base.sum())
    order = sorted(range(len(levels)), key=lambda k: (-(exact[k] - base[k]), k))
    for k in order[:short]:
        base[k] += 1
    return {s: int(c) for s, c in zip(levels, base)}


def random_mission(graph, classes, count, mix, p0, t0, rng: np.random.Generator, start=None) -> Mission:
    """Uniformly placed tasks with exponential costs of each level's mean."""
    classes = sorted_classes(classes)
    slots = graph.m * graph.n
    if count > slots:
        raise ValueError(f"{count} tasks do not fit on {slots} interior vertices")
    counts = split_counts(count, mix) if count else {}
    means = {c.level: c.mean_cost for c in classes}
    for s in counts:
        if s not in means:
            raise ValueError(f"level {s} in the task mix has no priority class")
    cells = rng.choice(slots, size=count, replace=False)
    levels = np.array([s for s in sorted(counts) for _ in range(counts[s])], dtype=int)
    levels = rng.permutation(levels)
    raw = rng.standard_exponential(count) * np.array([means[s] for s in levels]) if count else np.zeros(0)
    costs = snap(raw)
    tasks = tuple(
        Task(VertexId(int(c) // graph.n + 1, int(c) % graph.n + 1), int(s), float(w))
        for c, s, w in zip(cells, levels, costs)
    )
    return Mission(graph, tasks, classes, float(snap(p0)), float(snap(t0)), start)


def generate_mission(spec, rng) -> Mission:
    """Mission for a scenario: explicit tasks if given, otherwise random ones.

    ``rng`` is a numpy Generator or a :class:`RandomSource` (trial 0 stream).
    """
    if isinstance(rng, RandomSource):
        rng = rng.stream()
    graph = spec.graph
    classes = spec.priority_classes
    if spec.explicit_tasks is not None:
        means = {c.level: c.mean_cost for c in classes}
        tasks = []
        for row, col, level, cost in spec.explicit_tasks:
            if cost is None:
                cost = rng.standard_exponential() * means[level]
            tasks.append(Task(VertexId(row, col), level, float(snap(cost))))
        return Mission(graph, tuple(tasks), classes, float(snap(spec.p0)), float(snap(spec.t0)), spec.start_vertex)
    return random_mission(graph, classes, spec.task_count, spec.level_mix, spec.p0, spec.t0, rng, spec.start_vertex)


# -- traces ---------------------------------------------------------------


@dataclass
class MissionTrace:
    """Ordered event log.  Events are tuples whose first two items are the
    kind and the robot id:

    ``("move", rid, from, to, cost)``, ``("attempt", rid, v, level)``,
    ``("complete", rid, v, cost, gain)``, ``("abort", rid, v, wasted)``,
    ``("reset", rid, base, unspent_p, energy_left)`` and
    ``("decide", rid, tick, kind, row, level, p, q, energy, pose, heading, others)``.
    """

    planner: str
    team_size: int
    ground_truth_gain: float
    task_count: int
    p0: float
    t0: float
    events: list = field(default_factory=list)
    ticks: int = 0

    def header(self) -> dict:
        return {
            "schema": TRACE_SCHEMA,
            "planner": self.planner,
            "team_size": self.team_size,
            "ground_truth_gain": self.ground_truth_gain,
            "task_count": self.task_count,
            "p0": self.p0,
            "t0": self.t0,
            "ticks": self.ticks,
        }

    def iter_lines(self, decisions: bool = True):
        yield json.dumps(self.header(), sort_keys=True)
        for ev in self.events:
            if ev[0] == "decide" and not decisions:
                continue
            yield json.dumps([_jsonable(x) for x in ev])

    def write(self, path, decisions: bool = True) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.iter_lines(decisions):
                fh.write(line + "\n")

    @classmethod
    def read(cls, path) -> MissionTrace:
        with open(path, encoding="utf-8") as fh:
            lines = [ln for ln in fh if ln.strip()]
        if not lines:
            raise ValueError(f"{path}: empty trace")
        head = json.loads(lines[0])
        if head.get("schema") != TRACE_SCHEMA:
            raise ValueError(f"{path}: unsupported trace schema {head.get('schema')}")
        trace = cls(
            head["planner"], head["team_size"], head["ground_truth_gain"],
            head["task_count"], head["p0"], head["t0"], ticks=head.get("ticks", 0),
        )
        for ln in lines[1:]:
            trace.events.append(_from_json(json.loads(ln)))
        return trace


def _jsonable(x):
    if isinstance(x, VertexId):
        return [x.row, x.col]
    if isinstance(x, Heading):
        return x.value
    if isinstance(x, (frozenset, set)):
        return sorted(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


_VERTEX_SLOTS = {"move": (2, 3), "attempt": (2,), "complete": (2,), "abort": (2,), "reset": (2,), "decide": (9,)}


def _from_json(rec):
    kind = rec[0]
    for k in _VERTEX_SLOTS.get(kind, ()):
        rec[k] = VertexId(*rec[k])
    if kind == "decide":
        rec[10] = Heading(rec[10])
        rec[11] = frozenset(rec[11])
    return tuple(rec)


# -- metrics --------------------------------------------------------------


@dataclass(frozen=True)
class Metrics:
    rv_ratio: float
    wv_ratio: float
    visited: int
    total_waste: float
    path_length: float
    gain: float
    completed: int
    aborts: int
    trips: int


def compute_metrics(trace: MissionTrace, mission: Mission | None = None) -> Metrics:
    """Team totals: gain share per visited vertex, waste per visited vertex."""
    visited = completed = aborts = trips = 0
    gain = waste = length = 0.0
    for ev in trace.events:
        kind = ev[0]
        if kind == "move":
            length += ev[4]
        elif kind == "attempt":
            visited += 1
        elif kind == "complete":
            completed += 1
            gain += ev[4]
        elif kind == "abort":
            aborts += 1
            waste += ev[3]
        elif kind == "reset":
            trips += 1
    truth = mission.ground_truth_gain if mission is not None else trace.ground_truth_gain
    rv = (gain / truth) / visited if visited and truth > 0 else 0.0
    wv = waste / visited if visited else 0.0
    return Metrics(rv, wv, visited, waste, length, gain, completed, aborts, trips)


def curves(trace: MissionTrace):
    """Cumulative gain share and waste after each visited vertex."""
    truth = trace.ground_truth_gain
    gain = waste = 0.0
    out_g, out_w = [], []
    for ev in trace.events:
        kind = ev[0]
        if kind == "complete":
            gain += ev[4]
            out_g.append(gain / truth if truth > 0 else 0.0)
            out_w.append(waste)
        elif kind == "abort":
            waste += ev[3]
            out_g.append(gain / truth if truth > 0 else 0.0)
            out_w.append(waste)
    return np.arange(1, len(out_g) + 1), np.array(out_g), np.array(out_w)


# -- execution ------------------------------------------------------------


def make_planner(name: str, world: World, team_size: int, base_row: int | None = None):
    name = planner_name(name)
    if name == "NBA-P":
        return NbaPlanner(world, team_size)
    if name == "N-LM":
        return LawnmowerPlanner(world, team_size, informed=False, base_row=base_row)
    if name == "I-LM":
        return LawnmowerPlanner(world, team_size, informed=True, base_row=base_row)
    return SgprPlanner(world, team_size)


def _default_tick_limit(mission: Mission) -> int:
    g = mission.graph
    return 10_000 + 100 * (g.m + g.n + 2) * (len(mission.tasks) + 1)


def execute(
    mission: Mission,
    planner: str = "NBA-P",
    team_size: int = 1,
    rng=None,
    *,
    record_decisions: bool = True,
    max_ticks: int | None = None,
) -> MissionTrace:
    """Run the mission to completion and return its trace.

    Costs are fixed by the mission, so ``rng`` is unused; it is accepted for
    interface symmetry with stochastic extensions.  Raises
    :class:`MissionError` on negative energy, a robot that cannot get home,
    two robots in one row, a stalled team or a tick-limit overrun.
    """
    if team_size < 1:
        raise ValueError("team_size must be >= 1")
    graph = mission.graph
    sides = {graph.column_side(b.col) for b in graph.base_stations}
    if sides != {0, 1}:
        raise ValueError("execution needs a base station on each boundary column")
    name = planner_name(planner)
    too_big = [t.vertex for t in mission.tasks if t.actual_cost > mission.p0]
    if too_big:
        raise ValueError(f"{len(too_big)} task(s) cost more than the resource budget and can never complete, e.g. {too_big[0]}")
    world = World(graph, mission.classes, mission.tasks)
    base = mission.start_base
    brain = make_planner(name, world, team_size, base_row=base.row)
    mu = {c.level: c.gain_ratio for c in mission.classes}
    trace = MissionTrace(name, team_size, mission.ground_truth_gain, len(mission.tasks), mission.p0, mission.t0)
    ev = trace.events
    robots = [RobotState.at_base(k, graph, base, mission.p0, mission.t0) for k in range(team_size)]
    plans = [deque() for _ in robots]
    intents: list = [None] * team_size
    # per-trip bookkeeping for the conservation check
    spent = [0.0] * team_size
    wasted = [0.0] * team_size
    limit = max_ticks if max_ticks is not None else _default_tick_limit(mission)
    tick = 0

    def fail(msg):
        trace.ticks = tick
        raise MissionError(f"tick {tick}: {msg}", trace)

    def reset(k, r):
        if not mission.p0 == spent[k] + wasted[k] + r.p:
            fail(f"robot {k}: resource not conserved over the trip")
        ev.append(("reset", k, r.pose, r.p, r.energy))
        r.p, r.q, r.energy = mission.p0, 0.0, mission.t0
        spent[k] = wasted[k] = 0.0
        r.held = frozenset()

    while True:
        busy = False
        for k, r in enumerate(robots):
            if not plans[k] and intents[k] is None:
                others = frozenset().union(*(o.held for o in robots if o.id != k))
                try:
                    act, info = brain.decide(r, others)
                except GraphError as exc:
                    fail(f"robot {k}: {exc}")
                if record_decisions:
                    ev.append(("decide", k, tick, act.kind.value, act.row, act.level, r.p, r.q, r.energy, r.pose, r.heading, others))
                if act.kind is ActionKind.WAIT:
                    busy = True
                    continue
                r.held = rows_touched(graph, r.pose, act.path) | frozenset(info.get("hold", ()))
                if act.kind is ActionKind.RETURN and not act.path:
                    if not graph.is_base(r.pose):
                        fail(f"robot {k} told to stay at non-base {r.pose}")
                    if r.fresh():
                        r.held = frozenset()
                        continue
                    reset(k, r)
                    busy = True
                    continue
                if act.kind is ActionKind.PERFORM and not act.path:
                    fail(f"robot {k}: perform action without a target")
                plans[k].extend(act.path)
                intents[k] = act
            busy = True
            if plans[k]:
                nxt = plans[k].popleft()
                cost = graph.edge_cost(r.pose, nxt)
                if nxt.row == r.pose.row and not graph.is_boundary(r.pose) and (nxt.col - r.pose.col) != r.heading.step:
                    fail(f"robot {k} reversed inside row {r.pose.row}")
                r.energy -= cost
                if r.energy < 0:
                    fail(f"robot {k} ran out of energy at {nxt}")
                ev.append(("move", k, r.pose, nxt, cost))
                if nxt.row == r.pose.row:
                    r.heading = Heading.HR if nxt.col > r.pose.col else Heading.HL
                r.pose = nxt
                if not plans[k]:
                    act = intents[k]
                    if act.kind is ActionKind.RETURN:
                        if not graph.is_base(r.pose):
                            fail(f"robot {k} return path ended off base at {r.pose}")
                        reset(k, r)
                        intents[k] = None
                    elif act.kind is ActionKind.MOVE:
                        intents[k] = None
            else:
                intents[k] = None
                v = r.pose
                level = world.level_at(v)
                if level == 0:
                    fail(f"robot {k} attempted {v} which has no pending task")
                cost = float(world.costs[v.row - 1, v.col - 1])
                ev.append(("attempt", k, v, level))
                if cost <= r.p:
                    gain = mu[level] * cost
                    r.p -= cost
                    r.q += gain
                    spent[k] += cost
                    world.complete(v)
                    ev.append(("complete", k, v, cost, gain))
                else:
                    wasted[k] += r.p
                    ev.append(("abort", k, v, r.p))
                    r.p = 0.0
        if team_size > 1:
            rows = [r.pose.row for r in robots if not graph.is_boundary(r.pose)]
            if len(rows) != len(set(rows)):
                fail("two robots inside the same row")
        tick += 1
        if not busy:
            if world.remaining:
                fail(f"planner stalled with {world.remaining} tasks pending")
            break
        if tick > limit:
            fail(f"tick limit {limit} exceeded")
    for k, r in enumerate(robots):
        if not graph.is_base(r.pose):
            fail(f"robot {k} finished away from base at {r.pose}")
    trace.ticks = tick
    return trace


def run_mission(mission: Mission, planner: str = "NBA-P", team_size: int = 1) -> Metrics:
    return compute_metrics(execute(mission, planner, team_size, record_decisions=False), mission)


# -- Monte Carlo studies of the stopping rule -----------------------------


@dataclass(frozen=True)
class AbortRate:
    ratio: float
    gain_ratio: float
    trials: int
    abort_rate: float  # share of trials ending in an abort
    per_attempt: float  # share of attempts that aborted
    mean_attempts: float


def _run_trials(budget, mus, means, trials, gen):
    width = int(math.ceil(3 * budget / float(np.min(means)))) + 32
    while True:
        draws = gen.standard_exponential((trials, width))
        aborted, attempts = _kernels.phase1_trials(float(budget), np.asarray(mus, float), np.asarray(means, float), draws)
        if (attempts >= 0).all():
            return aborted, attempts
        width *= 2


def abort_rate_study(classes, budget_ratios, trials: int, rng) -> list[AbortRate]:
    """Phase-1 trips with unlimited tasks at every level and no energy limit.

    ``budget_ratios`` are budgets in units of the lowest level's mean cost.
    """
    classes = sorted_classes(classes)
    if isinstance(rng, int):
        rng = RandomSource(rng)
    mus = [c.gain_ratio for c in classes]
    means = [c.mean_cost for c in classes]
    out = []
    for k, ratio in enumerate(budget_ratios):
        gen = rng.stream(trial=k, purpose="study")
        aborted, attempts = _run_trials(ratio * means[0], mus, means, trials, gen)
        total = int(attempts.sum())
        out.append(AbortRate(
            float(ratio), float(mus[0]), trials,
            float(aborted.mean()) if trials else 0.0,
            float(aborted.sum() / total) if total else 0.0,
            float(attempts.mean()) if trials else 0.0,
        ))
    return out


@dataclass(frozen=True)
class GridCell:
    ratio1: float
    ratio2: float
    abort_rate: float


def grid_abort_study(gain_ratios, ratios1, ratios2, trials: int, rng, budget: float = 1.0) -> list[GridCell]:
    """Two-level abort rates over a grid of (budget/w1, budget/w2).

    The budget is fixed and each cell sets the two mean costs from its ratios.
    """
    if isinstance(rng, int):
        rng = RandomSource(rng)
    mu1, mu2 = gain_ratios
    cells = []
    idx = 0
    for r1 in ratios1:
        for r2 in ratios2:
            gen = rng.stream(trial=idx, purpose="study")
            idx += 1
            means = [budget / r1, budget / r2]
            aborted, _ = _run_trials(budget, [mu1, mu2], means, trials, gen)
            cells.append(GridCell(float(r1), float(r2), float(aborted.mean()) if trials else 0.0))
    return cells


def marginal_ranges(cells: Iterable[GridCell]) -> tuple[float, float]:
    """Range of row means along each axis: ``(along ratio1, along ratio2)``."""
    cells = list(cells)
    r1s = sorted({c.ratio1 for c in cells})
    r2s = sorted({c.ratio2 for c in cells})
    grid = np.array([[next(c.abort_rate for c in cells if c.ratio1 == a and c.ratio2 == b) for b in r2s] for a in r1s])
    m1 = grid.mean(axis=1)
    m2 = grid.mean(axis=0)
    return float(m1.max() - m1.min()), float(m2.max() - m2.min())
