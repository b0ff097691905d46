"""Command-line interface tests (runner-based, no subprocesses)."""

import json

from click.testing import CliRunner

from sdfbayes.cli import main


def invoke(*args):
    return CliRunner().invoke(main, args, catch_exceptions=False)


def test_scenario_listing():
    result = invoke("scenarios", "list")
    assert result.exit_code == 0
    for name in ("A", "B", "C", "D", "RW", "EP"):
        assert name in result.output


def test_scenario_show_emits_json():
    result = invoke("scenarios", "show", "rw")
    assert result.exit_code == 0
    payload = json.loads(result.output)
    assert payload["name"] == "RW"
    assert payload["trueTox"][1][3] == 0.30


def test_scenario_show_unknown_fails_cleanly():
    result = CliRunner().invoke(main, ["scenarios", "show", "Z"])
    assert result.exit_code != 0
    assert "unknown scenario" in result.output


def test_simulate_single_arm(tmp_path):
    out = tmp_path / "results"
    result = invoke(
        "simulate", "--scenario", "A", "--algorithm", "indepts",
        "--runs", "2", "--seed", "0", "--budget", "6",
        "--out", str(out), "--format", "csv", "--no-heatmaps",
    )
    assert result.exit_code == 0
    csv_files = list(out.glob("*.csv"))
    assert len(csv_files) == 1
    lines = csv_files[0].read_text().splitlines()
    assert lines[0].startswith("scenario,algorithm,")
    assert "indepts" in lines[1]
    assert "viol=" in result.output and "err=" in result.output


def test_simulate_writes_heatmaps_and_logs(tmp_path):
    out = tmp_path / "results"
    result = invoke(
        "simulate", "--scenario", "A", "--algorithm", "sdf",
        "--runs", "1", "--seed", "0", "--budget", "5",
        "--draws", "150", "--burn", "80", "--warm-burn", "20",
        "--out", str(out), "--format", "json", "--log-decisions",
    )
    assert result.exit_code == 0
    report = json.loads(next(out.glob("*.json")).read_text())
    assert report[0]["runs"] == 1
    assert len(report[0]["allocation"]) == 3
    heat = list((out / "heatmaps").glob("*.csv"))
    assert len(heat) == 1
    runs_log = next(out.glob("*-runs.jsonl")).read_text().splitlines()
    assert len(runs_log) == 1
    assert json.loads(runs_log[0])["algorithm"] == "sdf"


def test_simulate_multi_group_requires_enough_scenarios(tmp_path):
    result = CliRunner().invoke(main, [
        "simulate", "--scenario", "A", "--algorithm", "sdf-ar",
        "--runs", "1", "--out", str(tmp_path)])
    assert result.exit_code != 0


def test_simulate_chain_trace(tmp_path):
    trace = tmp_path / "chains.csv"
    result = invoke(
        "simulate", "--scenario", "A", "--algorithm", "sdf",
        "--runs", "1", "--seed", "3", "--budget", "3",
        "--draws", "100", "--burn", "50",
        "--out", str(tmp_path / "results"), "--no-heatmaps",
        "--trace-chains", str(trace),
    )
    assert result.exit_code == 0
    lines = trace.read_text().splitlines()
    assert lines[0] == "round,sweep,theta0,theta1,theta2,theta3"
    # 3 rounds of 100 retained draws each, at most (early stop allowed)
    assert 100 <= len(lines) - 1 <= 300


def test_simulate_suite_option(tmp_path):
    # suites and explicit scenario/algorithm selections are exclusive
    result = CliRunner().invoke(main, [
        "simulate", "--suite", "table3", "--scenario", "A",
        "--out", str(tmp_path)])
    assert result.exit_code != 0
