"""Scenario files, field-grid ingestion and the synthetic field generator.

Scenario files are INI documents read with :mod:`configparser`::

    [graph]
    rows = 20            ; m
    cols = 15            ; n interior columns
    edge_cost = 1
    bases = 10:0, 10:16  ; row:col pairs on column 0 or cols+1
    start = 10:0         ; optional, defaults to the first base

    [budgets]
    resource = 40        ; P0
    energy = 80          ; T0

    [class.1]            ; one section per priority level
    gain_ratio = 1
    mean_cost = 2

    [tasks]
    count = 225          ; random tasks ...
    mix = 1:1            ; ... with level:weight proportions
    ; list = 3:4:1:2.5, 5:6:2   explicit row:col:level[:cost]
    ; file = tasks.csv          explicit tasks, columns row,col,level,cost

    [run]
    robots = 2
    planners = NBA-P, N-LM
    trials = 10
    seed = 0

Without any ``[class.N]`` section a single level with gain ratio 1 is used;
its mean cost is the mean of the explicit costs, or 1.
"""

from __future__ import annotations

import configparser
import csv
import math
import os
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .graph import GraphError, VertexId, build_graph, snap
from .sim import PLANNERS, Mission, planner_name
from .stopping import PriorityClass, sorted_classes
from .world import Task


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    rows: int
    cols: int
    p0: float
    t0: float
    bases: tuple[tuple[int, int], ...]
    classes: tuple[PriorityClass, ...] = (PriorityClass(1, 1.0, 1.0),)
    edge_cost: float = 1.0
    start: tuple[int, int] | None = None
    task_count: int = 0
    mix: tuple[tuple[int, float], ...] = ()
    explicit_tasks: tuple | None = None  # (row, col, level, cost or None)
    task_file: str | None = None
    robots: int = 1
    planners: tuple[str, ...] = ("NBA-P",)
    trials: int = 1
    seed: int = 0
    name: str = "scenario"

    def __post_init__(self):
        object.__setattr__(self, "classes", sorted_classes(self.classes))
        if self.p0 < 0:
            raise ScenarioError(f"budgets.resource must be nonnegative, got {self.p0}")
        if self.t0 < 0:
            raise ScenarioError(f"budgets.energy must be nonnegative, got {self.t0}")
        if self.robots < 1:
            raise ScenarioError("run.robots must be >= 1")
        if self.trials < 0:
            raise ScenarioError("run.trials must be >= 0")
        levels = {c.level for c in self.classes}
        used = {s for s, _ in self.mix}
        if self.explicit_tasks:
            used |= {t[2] for t in self.explicit_tasks}
        missing = used - levels
        if missing:
            raise ScenarioError(f"tasks reference undefined levels {sorted(missing)}")
        object.__setattr__(self, "planners", tuple(planner_name(p) for p in self.planners))
        try:
            self.graph
        except GraphError as exc:
            raise ScenarioError(f"graph: {exc}") from None

    @cached_property
    def graph(self):
        return build_graph(self.rows, self.cols, self.edge_cost, self.bases)

    @property
    def priority_classes(self):
        return self.classes

    @property
    def level_mix(self) -> dict[int, float]:
        return dict(self.mix) if self.mix else {self.classes[0].level: 1.0}

    @property
    def start_vertex(self) -> VertexId | None:
        return VertexId(*self.start) if self.start else None

    def with_run(self, **kw) -> ScenarioSpec:
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


# -- parsing helpers -------------------------------------------------------


def _pair(text: str, what: str) -> tuple[int, int]:
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError:
        raise ScenarioError(f"{what}: expected row:col, got {text!r}") from None


def _items(text: str) -> list[str]:
    return [t.strip() for t in text.replace("\n", ",").split(",") if t.strip()]


def _get(cp, section, key, conv, default=..., path="<scenario>"):
    if not cp.has_option(section, key):
        if default is ...:
            raise ScenarioError(f"{path}: missing required field {section}.{key}")
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except ValueError:
        raise ScenarioError(f"{path}: field {section}.{key} has invalid value {raw!r}") from None


def read_task_csv(path) -> tuple:
    """Explicit tasks from a CSV with header ``row,col,level,cost``."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for line, rec in enumerate(reader, start=2):
            try:
                cost = rec.get("cost", "")
                out.append((int(rec["row"]), int(rec["col"]), int(rec["level"]), float(cost) if cost not in ("", None) else None))
            except (KeyError, ValueError, TypeError):
                raise ScenarioError(f"{path}:{line}: bad task record {rec}") from None
    return tuple(out)


def write_task_csv(path, tasks) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "col", "level", "cost"])
        for row, col, level, cost in tasks:
            w.writerow([row, col, level, "" if cost is None else repr(float(cost))])


def load_scenario(path) -> ScenarioSpec:
    path = Path(path)
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    p = str(path)
    for sec in ("graph", "budgets"):
        if not cp.has_section(sec):
            raise ScenarioError(f"{p}: missing section [{sec}]")
    rows = _get(cp, "graph", "rows", int, path=p)
    cols = _get(cp, "graph", "cols", int, path=p)
    edge = _get(cp, "graph", "edge_cost", float, 1.0, path=p)
    bases = tuple(_pair(b, "graph.bases") for b in _items(_get(cp, "graph", "bases", str, path=p)))
    start = _get(cp, "graph", "start", lambda s: _pair(s, "graph.start"), None, path=p)
    p0 = _get(cp, "budgets", "resource", float, path=p)
    t0 = _get(cp, "budgets", "energy", float, path=p)

    explicit = None
    task_file = None
    count = 0
    mix: tuple = ()
    if cp.has_section("tasks"):
        if cp.has_option("tasks", "file"):
            task_file = cp.get("tasks", "file")
            tf = Path(task_file)
            explicit = read_task_csv(tf if tf.is_absolute() else path.parent / tf)
        elif cp.has_option("tasks", "list"):
            recs = []
            for item in _items(cp.get("tasks", "list")):
                parts = item.split(":")
                if len(parts) not in (3, 4):
                    raise ScenarioError(f"{p}: tasks.list entry {item!r} must be row:col:level[:cost]")
                try:
                    recs.append((int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3]) if len(parts) == 4 else None))
                except ValueError:
                    raise ScenarioError(f"{p}: tasks.list entry {item!r} is not numeric") from None
            explicit = tuple(recs)
        else:
            count = _get(cp, "tasks", "count", int, 0, path=p)
            if cp.has_option("tasks", "mix"):
                mix = tuple(
                    (int(a), float(b)) for a, b in (m.split(":") for m in _items(cp.get("tasks", "mix")))
                )

    classes = []
    for sec in cp.sections():
        if sec.startswith("class."):
            try:
                level = int(sec.split(".", 1)[1])
            except ValueError:
                raise ScenarioError(f"{p}: bad class section [{sec}]") from None
            mu = _get(cp, sec, "gain_ratio", float, 1.0, path=p)
            w = _get(cp, sec, "mean_cost", float, path=p)
            classes.append(PriorityClass(level, mu, w))
    if not classes:
        known = [t[3] for t in explicit or () if t[3] is not None]
        classes = [PriorityClass(1, 1.0, float(np.mean(known)) if known else 1.0)]

    run = {}
    if cp.has_section("run"):
        run["robots"] = _get(cp, "run", "robots", int, 1, path=p)
        run["planners"] = tuple(_items(_get(cp, "run", "planners", str, "NBA-P", path=p)))
        run["trials"] = _get(cp, "run", "trials", int, 1, path=p)
        run["seed"] = _get(cp, "run", "seed", int, 0, path=p)
    try:
        return ScenarioSpec(
            rows, cols, p0, t0, bases, tuple(classes), edge, start, count, mix, explicit, task_file,
            name=path.stem, **run,
        )
    except ValueError as exc:
        raise ScenarioError(f"{p}: {exc}") from None


def write_scenario(spec: ScenarioSpec, path) -> None:
    """Write ``spec`` so that :func:`load_scenario` reads it back unchanged.

    Explicit task lists go to ``spec.task_file`` (next to the scenario) when
    one is named, otherwise inline.
    """
    path = Path(path)
    cp = configparser.ConfigParser()
    cp["graph"] = {
        "rows": str(spec.rows),
        "cols": str(spec.cols),
        "edge_cost": repr(float(spec.edge_cost)),
        "bases": ", ".join(f"{r}:{c}" for r, c in spec.bases),
    }
    if spec.start:
        cp["graph"]["start"] = f"{spec.start[0]}:{spec.start[1]}"
    cp["budgets"] = {"resource": repr(float(spec.p0)), "energy": repr(float(spec.t0))}
    for c in spec.classes:
        cp[f"class.{c.level}"] = {"gain_ratio": repr(float(c.gain_ratio)), "mean_cost": repr(float(c.mean_cost))}
    if spec.explicit_tasks is not None:
        if spec.task_file:
            tf = Path(spec.task_file)
            write_task_csv(tf if tf.is_absolute() else path.parent / tf, spec.explicit_tasks)
            cp["tasks"] = {"file": spec.task_file}
        else:
            cp["tasks"] = {
                "list": ", ".join(
                    f"{r}:{c}:{s}" + ("" if w is None else f":{float(w)!r}") for r, c, s, w in spec.explicit_tasks
                )
            }
    else:
        cp["tasks"] = {"count": str(spec.task_count)}
        if spec.mix:
            cp["tasks"]["mix"] = ", ".join(f"{s}:{float(w)!r}" for s, w in spec.mix)
    cp["run"] = {
        "robots": str(spec.robots),
        "planners": ", ".join(spec.planners),
        "trials": str(spec.trials),
        "seed": str(spec.seed),
    }
    with open(path, "w", encoding="utf-8") as fh:
        cp.write(fh)


# -- field grids -----------------------------------------------------------


@dataclass(frozen=True)
class FieldGrid:
    values: np.ndarray  # rows x cols, nan where missing
    desired_level: float
    band_thresholds: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        t = np.asarray(self.band_thresholds, dtype=float)
        if t.size == 0 or (np.diff(t) <= 0).any():
            raise ValueError(f"band thresholds must be nonempty and strictly increasing, got {self.band_thresholds}")

    @property
    def deficit(self) -> np.ndarray:
        v = np.asarray(self.values, dtype=float)
        with np.errstate(invalid="ignore"):
            d = np.maximum(0.0, self.desired_level - v)
        return np.where(np.isnan(v), 0.0, d)

    def levels(self) -> np.ndarray:
        """0 for no task, otherwise the count of thresholds the deficit exceeds."""
        d = self.deficit
        lv = np.searchsorted(np.asarray(self.band_thresholds), d, side="left")
        return np.where(d > 0, lv, 0)


def read_field_grid(path) -> np.ndarray:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for line_no, rec in enumerate(csv.reader(fh), start=1):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            vals = []
            for k, cell in enumerate(rec, start=1):
                cell = cell.strip()
                if not cell:
                    vals.append(math.nan)
                    continue
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ScenarioError(f"{path}:{line_no}: column {k} is not numeric: {cell!r}") from None
            rows.append(vals)
    if not rows:
        raise ScenarioError(f"{path}: empty grid")
    width = len(rows[0])
    for i, r in enumerate(rows, start=1):
        if len(r) != width:
            raise ScenarioError(f"{path}: row {i} has {len(r)} cells, expected {width}")
    return np.array(rows, dtype=float)


def write_field_grid(values: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in values:
            fh.write(",".join("" if np.isnan(x) else f"{x:.6g}" for x in row) + "\n")


FIELD_T0 = 800.0
FIELD_P0 = 400.0


def field_bases(m: int, n: int) -> tuple[tuple[int, int], ...]:
    mid = max(1, m // 2)
    return ((mid, 0), (mid, n + 1))


def field_mission(grid: FieldGrid, *, p0: float = FIELD_P0, t0: float = FIELD_T0, gain_ratios=None) -> tuple[Mission, ScenarioSpec]:
    """Mission whose tasks are the deficit cells of ``grid``.

    Each band becomes a priority level with gain ratio equal to its index
    unless ``gain_ratios`` says otherwise; its mean cost is the mean deficit
    of its cells.  Returns the mission and an equivalent scenario spec.
    """
    values = np.asarray(grid.values, dtype=float)
    if values.ndim != 2 or values.size == 0:
        raise ScenarioError("field grid must be a nonempty 2-d array")
    m, n = values.shape
    cost = snap(grid.deficit)
    lv = grid.levels()
    classes = []
    for s in sorted(set(np.unique(lv)) - {0}):
        mu = float(gain_ratios[s - 1]) if gain_ratios is not None else float(s)
        classes.append(PriorityClass(int(s), mu, float(cost[lv == s].mean())))
    if not classes:
        classes = [PriorityClass(1, 1.0, 1.0)]
    ii, jj = np.nonzero(lv)
    recs = tuple((int(i) + 1, int(j) + 1, int(lv[i, j]), float(cost[i, j])) for i, j in zip(ii, jj))
    spec = ScenarioSpec(
        m, n, float(p0), float(t0), field_bases(m, n), tuple(classes), 1.0,
        explicit_tasks=recs, name="field",
    )
    tasks = tuple(Task(VertexId(r, c), s, w) for r, c, s, w in recs)
    mission = Mission(spec.graph, tasks, spec.classes, float(snap(p0)), float(snap(t0)))
    return mission, spec


def ingest_field_grid(path, desired_level: float, bands=(0.0,), **kw) -> Mission:
    grid = FieldGrid(read_field_grid(path), float(desired_level), tuple(float(b) for b in bands))
    return field_mission(grid, **kw)[0]


def synthetic_field(m: int = 275, n: int = 214, seed: int = 0, desired: float = 30.0,
                    spread: float = 4.0, smoothness: float = 6.0) -> np.ndarray:
    """Spatially correlated moisture readings centred on ``desired``.

    White noise smoothed by a Gaussian filter, rescaled to unit variance,
    gives low-frequency patches of wet and dry ground.  The noise is centred,
    so about half the cells fall short of ``desired`` on any grid size.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 0, 0, 2])))
    noise = gaussian_filter(rng.standard_normal((m, n)), smoothness, mode="wrap")
    noise = (noise - noise.mean()) / noise.std()
    return np.round(desired + spread * noise, 3)


def default_output_dir() -> Path:
    return Path(os.environ.get("SAGPLAN_OUT", "results"))


__all__ = [
    "FIELD_P0", "FIELD_T0", "FieldGrid", "PLANNERS", "ScenarioError", "ScenarioSpec",
    "default_output_dir", "field_mission", "ingest_field_grid", "load_scenario",
    "read_field_grid", "read_task_csv", "synthetic_field", "write_field_grid",
    "write_scenario", "write_task_csv",
]
