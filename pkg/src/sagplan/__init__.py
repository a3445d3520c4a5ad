"""Stochastic task allocation on aisle graphs with optimal stopping."""

from .graph import AisleGraph, GraphError, Heading, VertexId, build_graph, legal_moves, t_alpha, t_beta, t_gamma
from .stopping import PriorityClass, TripState, boundary, classify_boundaries, dp_value_oracle, sample_q1, select_level
from .world import Task, World
from .nbap import Action, ActionKind, RobotState, coordinate_step, energy_feasible, filter_q2, next_action, plan_return, select_row
from .baselines import LawnmowerCursor, ilm_next, nlm_next, sgpr_plan
from .sim import Metrics, Mission, MissionError, MissionTrace, RandomSource, abort_rate_study, compute_metrics, execute, generate_mission
from .scenario import FieldGrid, ScenarioSpec, ingest_field_grid, load_scenario, write_scenario
from .experiments import run_experiment

__version__ = "0.1.0"

__all__ = [
    "Action", "ActionKind", "AisleGraph", "FieldGrid", "GraphError", "Heading", "LawnmowerCursor",
    "Metrics", "Mission", "MissionError", "MissionTrace", "PriorityClass", "RandomSource", "RobotState",
    "ScenarioSpec", "Task", "TripState", "VertexId", "World", "abort_rate_study", "boundary",
    "build_graph", "classify_boundaries", "compute_metrics", "coordinate_step", "dp_value_oracle",
    "energy_feasible", "execute", "filter_q2", "generate_mission", "ilm_next", "ingest_field_grid",
    "legal_moves", "load_scenario", "next_action", "nlm_next", "plan_return", "run_experiment",
    "sample_q1", "select_level", "select_row", "sgpr_plan", "t_alpha", "t_beta", "t_gamma",
    "write_scenario",
]
