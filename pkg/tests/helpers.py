"""Shared builders and independent oracles for the test-suite."""

from __future__ import annotations

from dataclasses import replace

import networkx as nx
import numpy as np

from sagplan.graph import AisleGraph, Heading, VertexId, from_arrays
from sagplan.sim import Mission, random_mission
from sagplan.stopping import PriorityClass
from sagplan.world import World


def unit_graph(m, n, bases):
    return from_arrays(np.ones((m, n - 1)), np.ones((2, m - 1)), bases)


def random_graph(rng, max_m=12, max_n=12, both_sides=True, uniform=False):
    m = int(rng.integers(1, max_m + 1))
    n = int(rng.integers(1, max_n + 1))
    if uniform:
        h, v = np.ones((m, n - 1)), np.ones((2, m - 1))
    else:
        h = rng.integers(0, 5, size=(m, n - 1)) * 0.5
        v = rng.integers(0, 5, size=(2, m - 1)) * 0.5
    bases = [(int(rng.integers(1, m + 1)), 0)]
    if both_sides:
        bases.append((int(rng.integers(1, m + 1)), n + 1))
    if rng.random() < 0.3:
        bases.append((int(rng.integers(1, m + 1)), int(rng.choice([0, n + 1]))))
    return from_arrays(h, v, bases)


def random_pose(rng, graph):
    row = int(rng.integers(1, graph.m + 1))
    col = int(rng.integers(0, graph.n + 2))
    heading = Heading.HR if rng.random() < 0.5 else Heading.HL
    return VertexId(row, col), heading


def random_mission_case(seed):
    """Small random mission whose tasks are all completable."""
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 8, 10)
    k = int(rng.integers(1, 4))
    means = rng.uniform(0.5, 3.0, size=k)
    classes = [PriorityClass(s + 1, float(s + 1), float(means[s])) for s in range(k)]
    count = int(rng.integers(0, g.m * g.n + 1))
    p0 = float(rng.uniform(1.2, 10.0) * means.max())
    t0 = float(2 * g.col_prefix.max() + g.beta.max() + rng.uniform(0, 20))
    mission = random_mission(g, classes, count, {c.level: 1 for c in classes}, p0, t0, rng)
    worst = max((t.actual_cost for t in mission.tasks), default=0.0)
    if worst > mission.p0:
        mission = replace(mission, p0=float(worst * 1.5))
    return mission


def check_trace_invariants(mission, trace, team):
    """Replay a trace and assert the safety and completeness invariants."""
    g = mission.graph
    pose = {k: mission.start_base for k in range(team)}
    spent = {k: 0.0 for k in range(team)}
    energy = {k: mission.t0 for k in range(team)}
    completed = set()
    for ev in trace.events:
        kind, k = ev[0], ev[1]
        if kind == "move":
            assert ev[2] == pose[k]
            pose[k] = ev[3]
            energy[k] -= ev[4]
            assert energy[k] >= 0
        elif kind == "attempt":
            assert ev[2] == pose[k] and ev[2] not in completed
        elif kind == "complete":
            completed.add(ev[2])
            spent[k] += ev[3]
        elif kind == "abort":
            spent[k] += ev[3]
        elif kind == "reset":
            assert g.is_base(ev[2])
            assert spent[k] + ev[3] == mission.p0
            assert ev[4] == energy[k]
            spent[k], energy[k] = 0.0, mission.t0
        if team > 1 and kind == "move":
            inside = [v.row for v in pose.values() if not g.is_boundary(v)]
            assert len(inside) == len(set(inside))
    assert completed == {t.vertex for t in mission.tasks}
    assert all(g.is_base(v) for v in pose.values())


# -- heading-expanded shortest paths ---------------------------------------


def expanded_digraph(graph: AisleGraph, keep_rows=None) -> nx.DiGraph:
    """Directed state graph: interior vertices split by heading, boundary
    vertices plain.  ``keep_rows`` limits which row interiors exist."""
    G = nx.DiGraph()
    n = graph.n
    for i in range(1, graph.m + 1):
        for side, col in ((0, 0), (1, n + 1)):
            G.add_node(("b", i, col))
            if i < graph.m:
                c = float(graph.v_costs[side, i - 1])
                G.add_edge(("b", i, col), ("b", i + 1, col), weight=c)
                G.add_edge(("b", i + 1, col), ("b", i, col), weight=c)
        if keep_rows is not None and i not in keep_rows:
            continue
        for j in range(1, n + 1):
            # rightward
            nxt = ("b", i, n + 1) if j == n else ("i", i, j + 1, "hr")
            G.add_edge(("i", i, j, "hr"), nxt, weight=float(graph.h_costs[i - 1, j]))
            prv = ("b", i, 0) if j == 1 else ("i", i, j - 1, "hl")
            G.add_edge(("i", i, j, "hl"), prv, weight=float(graph.h_costs[i - 1, j - 1]))
        G.add_edge(("b", i, 0), ("i", i, 1, "hr"), weight=float(graph.h_costs[i - 1, 0]))
        G.add_edge(("b", i, n + 1), ("i", i, n, "hl"), weight=float(graph.h_costs[i - 1, n]))
    return G


def state_node(graph, pose, heading):
    if graph.is_boundary(pose):
        return ("b", pose.row, pose.col)
    return ("i", pose.row, pose.col, heading.value)


def to_base_distances(G: nx.DiGraph, graph: AisleGraph) -> dict:
    rev = G.reverse(copy=False)
    srcs = [("b", b.row, b.col) for b in graph.base_stations]
    return nx.multi_source_dijkstra_path_length(rev, srcs)


def through_row_oracle(graph, pose, heading, row, restricted):
    """Cheapest walk from the robot that reaches an end of ``row``, crosses
    the whole row and then reaches a base station.

    Unrestricted: any legal walk before and after the crossing.  Restricted:
    the robot may only finish its current row ahead and then use the boundary
    columns, and the entry end is the one it reaches first.
    """
    n = graph.n
    start = state_node(graph, pose, heading)
    if restricted:
        inside = not graph.is_boundary(pose)
        approach = expanded_digraph(graph, {pose.row} if inside else set())
        if inside:
            back = "hl" if heading is Heading.HR else "hr"
            approach.remove_nodes_from([v for v in list(approach) if v[0] == "i" and v[3] == back])
            for col, first in ((0, ("i", pose.row, 1, "hr")), (n + 1, ("i", pose.row, n, "hl"))):
                if approach.has_edge(("b", pose.row, col), first):
                    approach.remove_edge(("b", pose.row, col), first)
        home_graph = expanded_digraph(graph, set())
        ahead = 1 if heading is Heading.HR else 0
        sides = (graph.column_side(pose.col),) if not inside else (ahead,)
    else:
        approach = home_graph = expanded_digraph(graph)
        sides = (0, 1)
    d_from = nx.single_source_dijkstra_path_length(approach, start)
    home = to_base_distances(home_graph, graph)
    best = np.inf
    for e in sides:
        a = ("b", row, 0 if e == 0 else n + 1)
        z = ("b", row, n + 1 if e == 0 else 0)
        if a in d_from and z in home:
            best = min(best, d_from[a] + float(graph.beta[row - 1]) + home[z])
    return best


def world_of(mission: Mission) -> World:
    return World(mission.graph, mission.classes, mission.tasks)
