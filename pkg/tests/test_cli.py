import json

import pytest

from sagplan.cli import main
from sagplan.scenario import load_scenario, synthetic_field, write_field_grid

SCENARIO = """
[graph]
rows = 5
cols = 4
bases = 3:0, 3:5
[budgets]
resource = 8
energy = 40
[class.1]
mean_cost = 1
[tasks]
count = 10
[run]
robots = 2
planners = NBA-P, N-LM
trials = 2
seed = 1
"""


def test_run_writes_results(tmp_path, capsys):
    (tmp_path / "s.ini").write_text(SCENARIO)
    out = tmp_path / "out"
    assert main(["run", str(tmp_path / "s.ini"), "--out", str(out), "--traces"]) == 0
    for f in ("trials.csv", "aggregate.csv", "curve_gain.csv", "curve_waste.csv", "manifest.json"):
        assert (out / f).exists()
    rows = (out / "trials.csv").read_text().splitlines()
    assert len(rows) == 1 + 2 * 2
    assert "trials.csv" in capsys.readouterr().out


def test_run_flags_override(tmp_path):
    (tmp_path / "s.ini").write_text(SCENARIO)
    out = tmp_path / "out"
    assert main(["run", str(tmp_path / "s.ini"), "--out", str(out), "--trials", "1", "--planner", "s-gpr",
                 "--robots", "1", "--seed", "4"]) == 0
    lines = (out / "trials.csv").read_text().splitlines()
    assert len(lines) == 2 and ",S-GPR," in lines[1]


def test_replay_matches_run(tmp_path, capsys):
    (tmp_path / "s.ini").write_text(SCENARIO)
    out = tmp_path / "out"
    main(["run", str(tmp_path / "s.ini"), "--out", str(out), "--traces", "--trials", "1", "--planner", "NBA-P"])
    capsys.readouterr()
    assert main(["replay", str(out / "trace_0_NBA-P.jsonl")]) == 0
    replayed = json.loads(capsys.readouterr().out)
    header, row = (out / "trials.csv").read_text().splitlines()[:2]
    rec = dict(zip(header.split(","), row.split(",")))
    assert replayed["visited"] == int(rec["visited"])
    assert replayed["rv_ratio"] == float(rec["rv"])
    assert replayed["wv_ratio"] == float(rec["wv"])


def test_missing_file_exit_code(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.ini")]) == 2
    assert "error" in capsys.readouterr().err


def test_bad_scenario_exit_code(tmp_path, capsys):
    (tmp_path / "s.ini").write_text(SCENARIO.replace("rows = 5\n", ""))
    assert main(["run", str(tmp_path / "s.ini"), "--out", str(tmp_path)]) == 2
    assert "graph.rows" in capsys.readouterr().err


def test_unknown_preset_rejected():
    with pytest.raises(SystemExit):
        main(["preset", "table9"])


def test_preset_fig6_left_small(tmp_path):
    assert main(["preset", "fig6_left", "--trials", "200", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "fig6_left.csv").read_text().splitlines()
    assert lines[0].startswith("ratio,mu,trials,abort_rate")
    assert len(lines) == 1 + 12 * 3


def test_ingest(tmp_path, capsys):
    grid = tmp_path / "field.csv"
    write_field_grid(synthetic_field(10, 8, seed=2), grid)
    assert main(["ingest", str(grid), "--desired", "30", "--bands", "0,3"]) == 0
    spec = load_scenario(tmp_path / "field.ini")
    assert spec.rows == 10 and spec.cols == 8
    assert spec.explicit_tasks and (tmp_path / "field_tasks.csv").exists()
    assert "tasks on 10x8" in capsys.readouterr().out


def test_ingest_bad_bands(tmp_path):
    with pytest.raises(SystemExit):
        main(["ingest", str(tmp_path / "x.csv"), "--desired", "30", "--bands", "a,b"])


def test_out_env_default(tmp_path, monkeypatch):
    (tmp_path / "s.ini").write_text(SCENARIO)
    monkeypatch.setenv("SAGPLAN_OUT", str(tmp_path / "envout"))
    assert main(["run", str(tmp_path / "s.ini"), "--trials", "1"]) == 0
    assert (tmp_path / "envout" / "trials.csv").exists()


def test_preset_seed_is_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["preset", "table1_s1", "--seed", "7", "--trials", "2", "--out", str(tmp_path / d)]) == 0
    for f in ("trials.csv", "aggregate.csv", "curve_gain.csv", "curve_waste.csv", "manifest.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_zero_trials_succeeds(tmp_path):
    assert main(["preset", "table1_s2", "--trials", "0", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "trials.csv").read_text().count("\n") == 1


def test_unknown_flag_rejected(capsys):
    with pytest.raises(SystemExit):
        main(["run", "x.ini", "--bogus"])
    assert "usage" in capsys.readouterr().err
