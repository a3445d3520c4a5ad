"""Stochastic-vertex-cost aisle graph: topology, motion rules, row travel costs.

Rows are numbered ``1..m``; columns ``0..n+1`` where ``0`` and ``n+1`` are the
virtual boundary columns joining the rows.  Horizontal edge ``(i, j)`` links
``v[i, j]`` and ``v[i, j+1]``; the connector edges ``(i, 0)`` and ``(i, n)``
always cost zero.  Vertical edges exist only on the boundary columns.

All edge costs are snapped to multiples of :data:`COST_QUANTUM` so that sums
along any walk are exact in double precision, whatever the summation order.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

COST_QUANTUM = 2.0**-20


def snap(values):
    """Round costs to the dyadic grid used for exact accumulation."""
    return np.round(np.asarray(values, dtype=float) / COST_QUANTUM) * COST_QUANTUM


class VertexId(NamedTuple):
    row: int
    col: int

    def __str__(self) -> str:
        return f"v{self.row},{self.col}"


class Heading(enum.Enum):
    HL = "hl"  # toward column 0
    HR = "hr"  # toward column n+1

    @property
    def step(self) -> int:
        return 1 if self is Heading.HR else -1

    def reverse(self) -> Heading:
        return Heading.HL if self is Heading.HR else Heading.HR


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AisleGraph:
    """Immutable aisle graph.

    ``h_costs[i-1, j]`` is the cost of the edge between ``v[i, j]`` and
    ``v[i, j+1]`` for ``j`` in ``0..n``.  ``v_costs[k, i-1]`` is the cost
    between rows ``i`` and ``i+1`` on column ``0`` (``k=0``) or ``n+1``
    (``k=1``).
    """

    m: int
    n: int
    h_costs: np.ndarray
    v_costs: np.ndarray
    base_stations: tuple[VertexId, ...]
    # derived lookup tables, filled in __post_init__
    row_prefix: np.ndarray = field(init=False, repr=False)
    col_prefix: np.ndarray = field(init=False, repr=False)
    beta: np.ndarray = field(init=False, repr=False)
    gamma: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        h = np.array(self.h_costs, dtype=float)
        v = np.array(self.v_costs, dtype=float)
        h.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "h_costs", h)
        object.__setattr__(self, "v_costs", v)
        # row_prefix[i-1, j] = cost from column 0 to column j along row i
        rp = np.zeros((self.m, self.n + 2))
        rp[:, 1:] = np.cumsum(h, axis=1)
        # col_prefix[k, i-1] = cost from row 1 to row i along boundary column k
        cp = np.zeros((2, self.m))
        cp[:, 1:] = np.cumsum(v, axis=1)
        beta = rp[:, self.n + 1] - rp[:, 0]
        gamma = np.full((2, self.m), np.inf)
        for b in self.base_stations:
            k = self.column_side(b.col)
            d = np.abs(cp[k] - cp[k, b.row - 1])
            gamma[k] = np.minimum(gamma[k], d)
        for arr in (rp, cp, beta, gamma):
            arr.setflags(write=False)
        object.__setattr__(self, "row_prefix", rp)
        object.__setattr__(self, "col_prefix", cp)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)

    # -- topology ---------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self.m, self.n + 2

    def column_side(self, col: int) -> int:
        """0 for the left boundary column, 1 for the right one."""
        if col == 0:
            return 0
        if col == self.n + 1:
            return 1
        raise GraphError(f"column {col} is not a boundary column")

    def side_column(self, side: int) -> int:
        return 0 if side == 0 else self.n + 1

    def is_boundary(self, v: VertexId) -> bool:
        return v.col == 0 or v.col == self.n + 1

    def is_base(self, v: VertexId) -> bool:
        return v in self.base_stations

    def contains(self, v: VertexId) -> bool:
        return 1 <= v.row <= self.m and 0 <= v.col <= self.n + 1

    def vertices(self) -> Iterable[VertexId]:
        for i in range(1, self.m + 1):
            for j in range(self.n + 2):
                yield VertexId(i, j)

    def neighbors(self, v: VertexId) -> list[VertexId]:
        """Undirected adjacency; ignores the no-reversal rule."""
        i, j = v
        out = []
        if j > 0:
            out.append(VertexId(i, j - 1))
        if j < self.n + 1:
            out.append(VertexId(i, j + 1))
        if self.is_boundary(v):
            if i > 1:
                out.append(VertexId(i - 1, j))
            if i < self.m:
                out.append(VertexId(i + 1, j))
        return out

    def edge_cost(self, u: VertexId, v: VertexId) -> float:
        if u.row == v.row and abs(u.col - v.col) == 1:
            return float(self.h_costs[u.row - 1, min(u.col, v.col)])
        if u.col == v.col and abs(u.row - v.row) == 1 and self.is_boundary(u):
            k = self.column_side(u.col)
            return float(self.v_costs[k, min(u.row, v.row) - 1])
        raise GraphError(f"no edge between {u} and {v}")

    def edges(self) -> Iterable[tuple[VertexId, VertexId, float]]:
        for i in range(1, self.m + 1):
            for j in range(self.n + 1):
                yield VertexId(i, j), VertexId(i, j + 1), float(self.h_costs[i - 1, j])
        for k, col in ((0, 0), (1, self.n + 1)):
            for i in range(1, self.m):
                yield VertexId(i, col), VertexId(i + 1, col), float(self.v_costs[k, i - 1])

    def path_cost(self, path: list[VertexId]) -> float:
        return sum((self.edge_cost(a, b) for a, b in zip(path, path[1:])), 0.0)

    # -- cost helpers -----------------------------------------------------

    def vertical(self, side: int, a: int, b: int) -> float:
        """Cost between rows ``a`` and ``b`` along a boundary column."""
        cp = self.col_prefix[side]
        return float(abs(cp[a - 1] - cp[b - 1]))

    def in_row(self, row: int, a: int, b: int) -> float:
        """Cost between columns ``a`` and ``b`` inside a row."""
        rp = self.row_prefix[row - 1]
        return float(abs(rp[a] - rp[b]))


def _check_bases(m: int, n: int, bases: Iterable) -> tuple[VertexId, ...]:
    out = []
    for b in bases:
        b = VertexId(int(b[0]), int(b[1]))
        if not 1 <= b.row <= m:
            raise GraphError(f"base station {b} outside rows 1..{m}")
        if b.col not in (0, n + 1):
            raise GraphError(f"base station {b} must sit on column 0 or {n + 1}")
        if b not in out:
            out.append(b)
    if not out:
        raise GraphError("at least one base station is required")
    return tuple(sorted(out))


def build_graph(m: int, n: int, edge_costs=1.0, bases=((1, 0),)) -> AisleGraph:
    """Build an aisle graph with ``m`` rows and ``n`` interior columns.

    ``edge_costs`` is either a scalar applied to every interior horizontal and
    vertical edge, or a mapping from vertex pairs to costs.  A mapping may carry
    a ``"default"`` entry for edges it does not list (otherwise 1.0).  Connector
    edges into the virtual columns must be absent or zero.
    """
    if m < 1 or n < 1:
        raise GraphError(f"need m >= 1 and n >= 1, got m={m}, n={n}")
    bases = _check_bases(m, n, bases)
    h = np.zeros((m, n + 1))
    v = np.zeros((2, max(m - 1, 0)))
    if isinstance(edge_costs, Mapping):
        default = float(edge_costs.get("default", 1.0))
        h[:, 1:n] = default
        v[:] = default
        for key, c in edge_costs.items():
            if key == "default":
                continue
            a, b = (VertexId(*x) for x in key)
            c = float(c)
            if a.row == b.row and abs(a.col - b.col) == 1 and 1 <= a.row <= m:
                j = min(a.col, b.col)
                if not 0 <= j <= n:
                    raise GraphError(f"no edge between {a} and {b}")
                if j in (0, n) and c != 0:
                    raise GraphError(f"connector edge {a}-{b} must cost 0, got {c}")
                h[a.row - 1, j] = c
            elif a.col == b.col and a.col in (0, n + 1) and abs(a.row - b.row) == 1:
                k = 0 if a.col == 0 else 1
                if min(a.row, b.row) < 1 or max(a.row, b.row) > m:
                    raise GraphError(f"no edge between {a} and {b}")
                v[k, min(a.row, b.row) - 1] = c
            else:
                raise GraphError(f"no edge between {a} and {b}")
    else:
        c = float(edge_costs)
        h[:, 1:n] = c
        v[:] = c
    return from_arrays(h[:, 1:n], v, bases)


def from_arrays(interior, vertical, bases) -> AisleGraph:
    """Build from the ``m x (n-1)`` interior horizontal costs and ``2 x (m-1)``
    boundary-column costs."""
    interior = np.asarray(interior, dtype=float)
    vertical = np.asarray(vertical, dtype=float)
    if interior.ndim != 2:
        raise GraphError("interior costs must be a 2-d array")
    m, n = interior.shape[0], interior.shape[1] + 1
    if m < 1 or n < 1:
        raise GraphError(f"need m >= 1 and n >= 1, got m={m}, n={n}")
    if vertical.shape != (2, m - 1):
        raise GraphError(f"vertical costs must have shape (2, {m - 1}), got {vertical.shape}")
    if not (np.all(np.isfinite(interior)) and np.all(np.isfinite(vertical))):
        raise GraphError("edge costs must be finite")
    if (interior < 0).any() or (vertical < 0).any():
        raise GraphError("edge costs must be nonnegative")
    h = np.zeros((m, n + 1))
    h[:, 1:n] = snap(interior)
    return AisleGraph(m, n, h, snap(vertical), _check_bases(m, n, bases))


# -- motion ---------------------------------------------------------------


def legal_moves(graph: AisleGraph, pose: VertexId, heading: Heading) -> set[VertexId]:
    """Vertices reachable in one move without reversing inside a row.

    On a boundary column the heading is irrelevant: the robot may move along
    the column or enter the adjacent row, including the row it just left.
    """
    if not graph.contains(pose):
        raise GraphError(f"{pose} is not a vertex")
    if graph.is_boundary(pose):
        return set(graph.neighbors(pose))
    return {VertexId(pose.row, pose.col + heading.step)}


def exit_side(graph: AisleGraph, pose: VertexId, heading: Heading) -> int:
    """Boundary side the robot reaches next without reversing."""
    if graph.is_boundary(pose):
        return graph.column_side(pose.col)
    return 1 if heading is Heading.HR else 0


def forward_cost(graph: AisleGraph, pose: VertexId, heading: Heading) -> float:
    """In-row cost from ``pose`` to the row end ahead (0 on a boundary)."""
    if graph.is_boundary(pose):
        return 0.0
    end = graph.n + 1 if heading is Heading.HR else 0
    return graph.in_row(pose.row, pose.col, end)


def _check_row(graph: AisleGraph, row: int) -> None:
    if not 1 <= row <= graph.m:
        raise GraphError(f"row {row} outside 1..{graph.m}")


def t_beta(graph: AisleGraph, row: int) -> float:
    """Cost of traversing ``row`` between its two end vertices."""
    _check_row(graph, row)
    return float(graph.beta[row - 1])


def t_gamma(graph: AisleGraph, row: int, heading_after_row: Heading) -> float:
    """Vertical cost from the row end reached with ``heading_after_row`` to the
    closest base station on that column."""
    _check_row(graph, row)
    side = 1 if heading_after_row is Heading.HR else 0
    cost = float(graph.gamma[side, row - 1])
    if not np.isfinite(cost):
        col = graph.side_column(side)
        raise GraphError(f"no base station on column {col}")
    return cost


def t_alpha(graph: AisleGraph, robot, row: int) -> float:
    """Cost for ``robot`` (anything with ``pose`` and ``heading``) to reach the
    end of ``row`` on the side it will enter from: run to the row end ahead,
    then travel along that boundary column."""
    _check_row(graph, row)
    pose, heading = robot.pose, robot.heading
    side = exit_side(graph, pose, heading)
    return forward_cost(graph, pose, heading) + graph.vertical(side, pose.row, row)


def entry_side(graph: AisleGraph, robot) -> int:
    return exit_side(graph, robot.pose, robot.heading)


def through_row_cost(graph: AisleGraph, robot, row: int) -> float:
    """``t_alpha + t_beta + t_gamma`` for ``row``; ``inf`` when the far column
    has no base station."""
    side = entry_side(graph, robot)
    gamma = graph.gamma[1 - side, row - 1]
    return t_alpha(graph, robot, row) + t_beta(graph, row) + float(gamma)


def row_costs(graph: AisleGraph, pose: VertexId, heading: Heading):
    """Vectorised ``(alpha, beta, gamma)`` over all rows for one robot pose."""
    side = exit_side(graph, pose, heading)
    fwd = forward_cost(graph, pose, heading)
    cp = graph.col_prefix[side]
    alpha = fwd + np.abs(cp - cp[pose.row - 1])
    return alpha, graph.beta, graph.gamma[1 - side]


# -- walks ----------------------------------------------------------------


def row_walk(graph: AisleGraph, row: int, start_col: int, end_col: int) -> list[VertexId]:
    """Vertices strictly after ``start_col`` up to ``end_col`` along a row."""
    step = 1 if end_col >= start_col else -1
    return [VertexId(row, j) for j in range(start_col + step, end_col + step, step)]


def column_walk(graph: AisleGraph, side: int, start_row: int, end_row: int) -> list[VertexId]:
    col = graph.side_column(side)
    step = 1 if end_row >= start_row else -1
    return [VertexId(i, col) for i in range(start_row + step, end_row + step, step)]


def walk_to_row_end(graph: AisleGraph, pose: VertexId, heading: Heading) -> list[VertexId]:
    if graph.is_boundary(pose):
        return []
    end = graph.n + 1 if heading is Heading.HR else 0
    return row_walk(graph, pose.row, pose.col, end)


def return_path(graph: AisleGraph, pose: VertexId, heading: Heading, blocked_rows=()) -> list[VertexId]:
    """Cheapest legal walk from ``pose`` to any base station.

    The robot first runs out of its row (forced), then moves on the boundary
    network, where crossing a row costs ``t_beta``.  Rows in ``blocked_rows``
    may not be crossed.  Returns the vertices after ``pose``; raises
    :class:`GraphError` if no base is reachable.
    """
    import heapq

    path = walk_to_row_end(graph, pose, heading)
    start = path[-1] if path else pose
    if graph.is_base(start):
        return path
    blocked = set(blocked_rows)
    # nodes are (side, row); ties in cost prefer fewer row crossings
    src = (graph.column_side(start.col), start.row)
    best = {src: (0.0, 0)}
    prev: dict = {}
    heap = [(0.0, 0, src)]
    goal = None
    while heap:
        d, k, node = heapq.heappop(heap)
        if (d, k) > best[node]:
            continue
        side, row = node
        if graph.is_base(VertexId(row, graph.side_column(side))):
            goal = node
            break
        nbrs = []
        if row > 1:
            nbrs.append(((side, row - 1), float(graph.v_costs[side, row - 2]), 0))
        if row < graph.m:
            nbrs.append(((side, row + 1), float(graph.v_costs[side, row - 1]), 0))
        if row not in blocked:
            nbrs.append(((1 - side, row), float(graph.beta[row - 1]), 1))
        for nxt, c, dk in nbrs:
            key = (d + c, k + dk)
            if key < best.get(nxt, (np.inf, 0)):
                best[nxt] = key
                prev[nxt] = node
                heapq.heappush(heap, (key[0], key[1], nxt))
    if goal is None:
        raise GraphError(f"no base station reachable from {pose}")
    hops = [goal]
    while hops[-1] != src:
        hops.append(prev[hops[-1]])
    hops.reverse()
    for (s0, r0), (s1, r1) in zip(hops, hops[1:]):
        if s0 == s1:
            path += column_walk(graph, s0, r0, r1)
        else:
            path += row_walk(graph, r0, graph.side_column(s0), graph.side_column(s1))
    return path
