"""Mutable view of a mission while it runs: which tasks remain and at what level.

Planners only see levels and counts.  The hidden actual costs stay in
``World.costs`` and are read by the execution engine alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import AisleGraph, VertexId
from .stopping import PriorityClass, sorted_classes


@dataclass
class Task:
    vertex: VertexId
    level: int
    actual_cost: float
    status: str = "pending"  # pending | completed

    @property
    def pending(self) -> bool:
        return self.status == "pending"

    @property
    def row(self) -> int:
        return self.vertex.row

    def __hash__(self):
        return hash(self.vertex)

    def __eq__(self, other):
        return isinstance(other, Task) and self.vertex == other.vertex


class World:
    """Pending-task bookkeeping indexed by row for fast planner queries."""

    def __init__(self, graph: AisleGraph, classes, tasks):
        self.graph = graph
        self.classes: tuple[PriorityClass, ...] = sorted_classes(classes)
        self.level_index = {c.level: k for k, c in enumerate(self.classes)}
        m, n = graph.m, graph.n
        # column j of a row lives at index j-1
        self.levels = np.zeros((m, n), dtype=np.int64)
        self.costs = np.zeros((m, n))
        self.counts = np.zeros((len(self.classes), m), dtype=np.int64)
        self.original_level = np.zeros((m, n), dtype=np.int64)
        for t in tasks:
            v = t.vertex
            if not (1 <= v.row <= m and 1 <= v.col <= n):
                raise ValueError(f"task at {v} is not on an interior vertex")
            if t.level not in self.level_index:
                raise ValueError(f"task at {v} has undefined level {t.level}")
            if self.levels[v.row - 1, v.col - 1]:
                raise ValueError(f"two tasks share vertex {v}")
            self.levels[v.row - 1, v.col - 1] = t.level
            self.original_level[v.row - 1, v.col - 1] = t.level
            self.costs[v.row - 1, v.col - 1] = t.actual_cost
            self.counts[self.level_index[t.level], v.row - 1] += 1
        self.remaining = int(self.counts.sum())
        self.mean_costs = np.array([c.mean_cost for c in self.classes])
        self.gain_ratios = np.array([c.gain_ratio for c in self.classes])

    # -- queries ----------------------------------------------------------

    def cls(self, level: int) -> PriorityClass:
        return self.classes[self.level_index[level]]

    def level_at(self, v: VertexId) -> int:
        if 1 <= v.col <= self.graph.n:
            return int(self.levels[v.row - 1, v.col - 1])
        return 0

    def has_level(self, level: int) -> bool:
        return bool(self.counts[self.level_index[level]].any())

    def row_counts(self, level: int) -> np.ndarray:
        return self.counts[self.level_index[level]]

    def pending_tasks(self) -> list[Task]:
        rows, cols = np.nonzero(self.levels)
        return [
            Task(VertexId(int(i) + 1, int(j) + 1), int(self.levels[i, j]), float("nan"))
            for i, j in zip(rows, cols)
        ]

    def first_task(self, row: int, from_col: int, step: int, level: int | None = None, accept=None):
        """First column strictly beyond ``from_col`` (moving by ``step``) holding
        a pending task of ``level`` (any level if None), or None."""
        line = self.levels[row - 1]
        if step > 0:
            seg = line[from_col:]  # columns from_col+1 .. n
            offset = from_col + 1
        else:
            seg = line[: max(from_col - 1, 0)][::-1]  # columns from_col-1 .. 1
            offset = from_col - 1
        hits = seg == level if level is not None else seg > 0
        if accept is not None:
            hits &= accept(seg)
        idx = np.flatnonzero(hits)
        if idx.size == 0:
            return None
        return offset + step * int(idx[0])

    def count_ahead(self, row: int, from_col: int, step: int, level: int) -> int:
        line = self.levels[row - 1]
        seg = line[from_col:] if step > 0 else line[: max(from_col - 1, 0)]
        return int(np.count_nonzero(seg == level))

    # -- updates ----------------------------------------------------------

    def complete(self, v: VertexId) -> None:
        lv = self.level_at(v)
        if lv == 0:
            raise ValueError(f"no pending task at {v}")
        self.levels[v.row - 1, v.col - 1] = 0
        self.counts[self.level_index[lv], v.row - 1] -= 1
        self.remaining -= 1
