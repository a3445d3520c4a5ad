"""Command line entry point: ``sagplan {run,preset,ingest,replay}``.

The default output directory is ``$SAGPLAN_OUT`` or ``./results``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import PRESETS, run_experiment, run_preset
from .scenario import FIELD_P0, FIELD_T0, FieldGrid, ScenarioError, default_output_dir, field_mission, load_scenario, read_field_grid, write_scenario
from .sim import PLANNERS, MissionError, MissionTrace, compute_metrics


def _planners(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _bands(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(b) for b in text.split(",") if b.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bands must be comma-separated numbers, got {text!r}") from None


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="base seed (default: from scenario)")
    p.add_argument("--trials", type=int, help="number of trials")
    p.add_argument("--planner", type=_planners, help=f"comma-separated planners from {', '.join(PLANNERS)}")
    p.add_argument("--robots", type=int, help="team size")
    p.add_argument("--out", type=Path, help="output directory (default: $SAGPLAN_OUT or ./results)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for independent trials")
    p.add_argument("--traces", action="store_true", help="also write one JSON-lines trace per mission")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sagplan", description="Stochastic task allocation on aisle graphs.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("scenario", type=Path)
    _add_run_flags(p)

    p = sub.add_parser("preset", help="run a named experiment")
    p.add_argument("name", choices=PRESETS)
    _add_run_flags(p)

    p = sub.add_parser("ingest", help="turn a field grid into a scenario file")
    p.add_argument("grid", type=Path, help="comma-separated grid, one row per line, empty cells missing")
    p.add_argument("--desired", type=float, required=True, help="desired sensor level")
    p.add_argument("--bands", type=_bands, default=(0.0,), help="increasing deficit cut points (default: 0)")
    p.add_argument("--resource", type=float, default=FIELD_P0)
    p.add_argument("--energy", type=float, default=FIELD_T0)
    p.add_argument("--out", type=Path, help="scenario path (default: <grid stem>.ini next to the grid)")

    p = sub.add_parser("replay", help="recompute metrics from a trace file")
    p.add_argument("trace", type=Path)
    return ap


def _out(args) -> Path:
    return args.out if args.out is not None else default_output_dir()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            spec = load_scenario(args.scenario)
            spec = spec.with_run(seed=args.seed, trials=args.trials, planners=args.planner, robots=args.robots)
            files = run_experiment(spec, _out(args), jobs=args.jobs, traces=args.traces)
        elif args.command == "preset":
            files = run_preset(args.name, _out(args), seed=args.seed, trials=args.trials, planners=args.planner,
                               robots=args.robots, jobs=args.jobs, traces=args.traces)
        elif args.command == "ingest":
            grid = FieldGrid(read_field_grid(args.grid), args.desired, args.bands)
            _, spec = field_mission(grid, p0=args.resource, t0=args.energy)
            target = args.out if args.out is not None else args.grid.with_suffix(".ini")
            spec = spec.with_run(task_file=target.stem + "_tasks.csv", name=target.stem)
            write_scenario(spec, target)
            print(f"{target}: {len(spec.explicit_tasks)} tasks on {spec.rows}x{spec.cols}, "
                  + ", ".join(f"level {c.level} mean cost {c.mean_cost:.4g}" for c in spec.classes))
            return 0
        else:
            m = compute_metrics(MissionTrace.read(args.trace))
            print(json.dumps(m.__dict__, sort_keys=True))
            return 0
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"sagplan: error: {exc}", file=sys.stderr)
        return 2
    except MissionError as exc:
        print(f"sagplan: invariant violated: {exc}", file=sys.stderr)
        return 3
    out = _out(args)
    for f in files.values():
        print(out / f)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
