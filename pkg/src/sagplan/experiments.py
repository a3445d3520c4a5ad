"""Experiment presets and the batch harness that writes result files.

Output files (``CSV_SCHEMA`` is recorded in ``manifest.json``):

``trials.csv``
    trial, planner, robots, rv, wv, visited, waste, path_length, gain,
    completed, aborts, trips
``aggregate.csv``
    planner, robots, n, then mean and std of rv, wv, visited, waste and
    path_length
``curve_gain.csv`` / ``curve_waste.csv``
    trial, planner, visited, gain_fraction (or waste)
``fig6_left.csv``
    ratio, mu, trials, abort_rate, per_attempt_rate, mean_attempts
``fig6_right.csv``
    w1_config, ratio1, ratio2, trials, abort_rate
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .scenario import FieldGrid, ScenarioSpec, field_mission, synthetic_field
from .sim import Metrics, MissionError, RandomSource, abort_rate_study, compute_metrics, curves, execute, generate_mission, grid_abort_study
from .stopping import PriorityClass

CSV_SCHEMA = 1

TRIAL_COLUMNS = ("trial", "planner", "robots", "rv", "wv", "visited", "waste", "path_length", "gain", "completed", "aborts", "trips")
AGG_METRICS = ("rv", "wv", "visited", "waste", "path_length")

FIG6_LEFT_RATIOS = (1, 2, 3, 5, 10, 20, 30, 40, 50, 60, 80, 100)
FIG6_LEFT_MUS = (0.5, 1.0, 2.0)
FIG6_RIGHT_RATIOS = (1, 2, 5, 10, 20, 50)
# configurations of the two-level grid: (name, ratios1, ratios2)
FIG6_RIGHT_CONFIGS = (
    ("1-10", (1, 2, 5, 10), (1, 2, 5, 10)),
    ("5-50", (5, 10, 20, 50), (5, 10, 20, 50)),
    ("1-100", (1, 5, 20, 100), (1, 5, 20, 100)),
)


def table1_s1() -> ScenarioSpec:
    return ScenarioSpec(
        20, 15, 40.0, 80.0, ((10, 0), (10, 16)), (PriorityClass(1, 1.0, 2.0),),
        task_count=225, mix=((1, 1.0),), robots=2, planners=("NBA-P", "N-LM"), trials=10, name="table1_s1",
    )


def table1_s2() -> ScenarioSpec:
    return ScenarioSpec(
        20, 15, 40.0, 80.0, ((10, 0), (10, 16)), (PriorityClass(1, 1.0, 1.5), PriorityClass(2, 2.0, 2.0)),
        task_count=225, mix=((1, 0.5), (2, 0.5)), robots=2, planners=("NBA-P", "N-LM"), trials=10, name="table1_s2",
    )


def field_spec(seed: int = 0, m: int = 275, n: int = 214) -> ScenarioSpec:
    grid = FieldGrid(synthetic_field(m, n, seed=seed), 30.0, (0.0,))
    _, spec = field_mission(grid)
    return spec.with_run(planners=("NBA-P", "N-LM", "I-LM", "S-GPR"), robots=1, trials=1, seed=seed, name="field")


SCENARIO_PRESETS = {"table1_s1": table1_s1, "table1_s2": table1_s2, "field": field_spec}
STUDY_PRESETS = ("fig6_left", "fig6_right")
PRESETS = tuple(SCENARIO_PRESETS) + STUDY_PRESETS


# -- trials ----------------------------------------------------------------


@dataclass(frozen=True)
class TrialResult:
    trial: int
    planner: str
    robots: int
    metrics: Metrics
    gain_curve: tuple
    waste_curve: tuple


def run_trial(spec: ScenarioSpec, trial: int, trace_dir: str | None = None) -> list[TrialResult]:
    """All planners of ``spec`` on the mission of one trial."""
    mission = generate_mission(spec, RandomSource(spec.seed).stream(trial=trial))
    out = []
    for name in spec.planners:
        try:
            trace = execute(mission, name, spec.robots, record_decisions=False)
        except MissionError as exc:
            if trace_dir is not None and exc.trace is not None:
                dump = Path(trace_dir) / f"failed_trace_{trial}_{name}.jsonl"
                exc.trace.write(dump)
                raise MissionError(f"trial {trial}, {name}: {exc} (trace in {dump})", exc.trace) from None
            raise
        if trace_dir is not None:
            trace.write(Path(trace_dir) / f"trace_{trial}_{name}.jsonl", decisions=False)
        idx, gain, waste = curves(trace)
        out.append(TrialResult(trial, name, spec.robots, compute_metrics(trace, mission),
                               tuple(gain.tolist()), tuple(waste.tolist())))
    return out


def _trial_job(args):
    spec, trial, trace_dir = args
    return run_trial(spec, trial, trace_dir)


def run_trials(spec: ScenarioSpec, jobs: int = 1, trace_dir=None) -> list[TrialResult]:
    """Results in (trial, planner) order regardless of ``jobs``."""
    work = [(spec, t, None if trace_dir is None else str(trace_dir)) for t in range(spec.trials)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(_trial_job, work))
    else:
        batches = [_trial_job(w) for w in work]
    return [r for b in batches for r in b]


# -- writers ---------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def _trial_row(r: TrialResult):
    m = r.metrics
    return (r.trial, r.planner, r.robots, m.rv_ratio, m.wv_ratio, m.visited, m.total_waste,
            m.path_length, m.gain, m.completed, m.aborts, m.trips)


def aggregate(results: list[TrialResult]) -> list[tuple]:
    """Mean and sample standard deviation per planner, in first-seen order."""
    order: list[str] = []
    groups: dict[str, list[TrialResult]] = {}
    for r in results:
        if r.planner not in groups:
            order.append(r.planner)
            groups[r.planner] = []
        groups[r.planner].append(r)
    rows = []
    for name in order:
        rs = groups[name]
        table = np.array([[r.metrics.rv_ratio, r.metrics.wv_ratio, r.metrics.visited, r.metrics.total_waste,
                           r.metrics.path_length] for r in rs], dtype=float)
        mean = table.mean(axis=0)
        std = table.std(axis=0, ddof=1) if len(rs) > 1 else np.zeros(len(AGG_METRICS))
        row = [name, rs[0].robots, len(rs)]
        for mu, sd in zip(mean, std):
            row += [float(mu), float(sd)]
        rows.append(tuple(row))
    return rows


def write_results(results: list[TrialResult], out: Path) -> dict[str, str]:
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    _write_csv(out / "trials.csv", TRIAL_COLUMNS, [_trial_row(r) for r in results])
    files["trials"] = "trials.csv"
    agg_head = ["planner", "robots", "n"] + [f"{m}_{s}" for m in AGG_METRICS for s in ("mean", "std")]
    _write_csv(out / "aggregate.csv", agg_head, aggregate(results))
    files["aggregate"] = "aggregate.csv"
    _write_csv(out / "curve_gain.csv", ("trial", "planner", "visited", "gain_fraction"),
               [(r.trial, r.planner, k + 1, v) for r in results for k, v in enumerate(r.gain_curve)])
    files["curve_gain"] = "curve_gain.csv"
    _write_csv(out / "curve_waste.csv", ("trial", "planner", "visited", "waste"),
               [(r.trial, r.planner, k + 1, v) for r in results for k, v in enumerate(r.waste_curve)])
    files["curve_waste"] = "curve_waste.csv"
    return files


def _write_manifest(out: Path, info: dict) -> None:
    info = {"csv_schema": CSV_SCHEMA, **info}
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(info, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _spec_summary(spec: ScenarioSpec) -> dict:
    return {
        "name": spec.name,
        "rows": spec.rows,
        "cols": spec.cols,
        "bases": [list(b) for b in spec.bases],
        "resource": spec.p0,
        "energy": spec.t0,
        "classes": [asdict(c) for c in spec.classes],
        "tasks": len(spec.explicit_tasks) if spec.explicit_tasks is not None else spec.task_count,
        "robots": spec.robots,
        "planners": list(spec.planners),
        "trials": spec.trials,
        "seed": spec.seed,
    }


def run_experiment(spec: ScenarioSpec, output_dir, jobs: int = 1, traces: bool = False) -> dict[str, str]:
    """Run every trial and planner of ``spec`` and write the result files.

    Raises :class:`MissionError` when an execution invariant breaks; the
    failing trace is written next to the results first.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace_dir = out if traces else None
    try:
        results = run_trials(spec, jobs, trace_dir)
    except MissionError as exc:
        if exc.trace is not None and not traces:
            exc.trace.write(out / "failed_trace.jsonl")
        raise
    files = write_results(results, out)
    _write_manifest(out, {"kind": "missions", "scenario": _spec_summary(spec), "files": files})
    return files


# -- stopping-rule studies ---------------------------------------------------


def fig6_left(output_dir, trials: int = 1000, seed: int = 0, ratios=FIG6_LEFT_RATIOS, mus=FIG6_LEFT_MUS,
              mean_cost: float = 2.0) -> dict[str, str]:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for mu in mus:
        for r in abort_rate_study([PriorityClass(1, mu, mean_cost)], ratios, trials, RandomSource(seed)):
            rows.append((r.ratio, mu, r.trials, r.abort_rate, r.per_attempt, r.mean_attempts))
    _write_csv(out / "fig6_left.csv", ("ratio", "mu", "trials", "abort_rate", "per_attempt_rate", "mean_attempts"), rows)
    files = {"fig6_left": "fig6_left.csv"}
    _write_manifest(out, {"kind": "fig6_left", "trials": trials, "seed": seed, "mean_cost": mean_cost, "files": files})
    return files


def fig6_right(output_dir, trials: int = 1000, seed: int = 0, configs=FIG6_RIGHT_CONFIGS,
               gain_ratios=(1.0, 2.0)) -> dict[str, str]:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for name, r1s, r2s in configs:
        for c in grid_abort_study(gain_ratios, r1s, r2s, trials, RandomSource(seed)):
            rows.append((name, c.ratio1, c.ratio2, trials, c.abort_rate))
    _write_csv(out / "fig6_right.csv", ("w1_config", "ratio1", "ratio2", "trials", "abort_rate"), rows)
    files = {"fig6_right": "fig6_right.csv"}
    _write_manifest(out, {"kind": "fig6_right", "trials": trials, "seed": seed,
                          "gain_ratios": list(gain_ratios), "files": files})
    return files


def run_preset(name: str, output_dir, *, seed=None, trials=None, planners=None, robots=None, jobs: int = 1,
               traces: bool = False) -> dict[str, str]:
    if name == "fig6_left":
        return fig6_left(output_dir, trials=1000 if trials is None else trials, seed=seed or 0)
    if name == "fig6_right":
        return fig6_right(output_dir, trials=1000 if trials is None else trials, seed=seed or 0)
    if name not in SCENARIO_PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    spec = field_spec(seed or 0) if name == "field" else SCENARIO_PRESETS[name]()
    spec = spec.with_run(seed=seed, trials=trials, planners=planners, robots=robots)
    return run_experiment(spec, output_dir, jobs=jobs, traces=traces)
