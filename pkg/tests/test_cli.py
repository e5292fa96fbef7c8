from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from conftest import build_car_flowchart
from flowdialog.cli import main
from flowdialog.ingest import serialize_edge_list


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def workspace(tmp_path):
    charts = tmp_path / "charts"
    charts.mkdir()
    (charts / "car.json").write_text(json.dumps(serialize_edge_list(build_car_flowchart())))
    dataset = tmp_path / "samples.json"
    dataset.write_text(
        json.dumps(
            [
                {"id": "fuse", "flowchart_id": "car", "gt_path": ["n_open", "n_fuse", "n_replace", "t_fixed"]},
                {"id": "battery", "flowchart_id": "car", "gt_path": ["n_open", "n_battery", "t_battery"]},
            ]
        )
    )
    return tmp_path


class TestValidate:
    def test_valid_chart_ok(self, runner, workspace):
        result = runner.invoke(main, ["validate", str(workspace / "charts" / "car.json")])
        assert result.exit_code == 0
        assert "OK (car, 8 nodes)" in result.output

    def test_invalid_chart_lists_violations(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(
            json.dumps(
                {
                    "id": "bad",
                    "root": "a",
                    "nodes": [{"id": "a", "text": "start here"}, {"id": "b", "text": "the end"}],
                    "edges": [
                        {"src": "a", "dst": "b", "cond": "ok"},
                        {"src": "a", "dst": "ghost", "cond": "no"},
                    ],
                }
            )
        )
        result = runner.invoke(main, ["validate", str(bad)])
        assert result.exit_code == 1
        assert "INVALID" in result.output
        assert "dangling-edge" in result.output

    def test_unparseable_file_reports_error(self, runner, tmp_path):
        broken = tmp_path / "broken.puml"
        broken.write_text("@startuml\nif (oops\n@enduml\n")
        result = runner.invoke(main, ["validate", str(broken)])
        assert result.exit_code == 1
        assert "ERROR" in result.output

    def test_directory_walk_mixes_outcomes(self, runner, workspace, tmp_path):
        bad = workspace / "charts" / "empty.json"
        bad.write_text(json.dumps({"id": "empty", "root": "x", "nodes": [], "edges": []}))
        result = runner.invoke(main, ["validate", str(workspace / "charts")])
        assert result.exit_code == 1
        assert "OK (car, 8 nodes)" in result.output
        assert "empty.json: INVALID" in result.output


class TestRun:
    def test_flags_only_run_prints_report(self, runner, workspace):
        result = runner.invoke(
            main,
            [
                "run",
                "--dataset", str(workspace / "samples.json"),
                "--flowcharts", str(workspace / "charts"),
            ],
        )
        assert result.exit_code == 0, result.output
        assert "samples" in result.output
        assert "100.00" in result.output

    def test_out_dir_writes_artifacts(self, runner, workspace):
        out = workspace / "out"
        result = runner.invoke(
            main,
            [
                "run",
                "--dataset", str(workspace / "samples.json"),
                "--flowcharts", str(workspace / "charts"),
                "--out", str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        assert (out / "report.json").exists()
        assert (out / "records.json").exists()
        assert sorted(p.name for p in (out / "transcripts").iterdir()) == [
            "battery.jsonl",
            "fuse.jsonl",
        ]
        assert f"artifacts written to {out}" in result.output

    def test_config_file_with_flag_override(self, runner, workspace):
        cfg_path = workspace / "run.json"
        cfg_path.write_text(
            json.dumps(
                {
                    "dataset": str(workspace / "samples.json"),
                    "flowchart_dir": str(workspace / "charts"),
                    "seed": 7,
                }
            )
        )
        result = runner.invoke(main, ["run", "--config", str(cfg_path), "--seed", "9"])
        assert result.exit_code == 0, result.output

    def test_missing_flags_usage_error(self, runner):
        result = runner.invoke(main, ["run"])
        assert result.exit_code == 2
        assert "need --config" in result.output


class TestReplayAndReport:
    @pytest.fixture
    def transcripts(self, runner, workspace):
        out = workspace / "out"
        runner.invoke(
            main,
            [
                "run",
                "--dataset", str(workspace / "samples.json"),
                "--flowcharts", str(workspace / "charts"),
                "--out", str(out),
            ],
        )
        return out / "transcripts"

    def test_replay_prints_record_json(self, runner, transcripts):
        result = runner.invoke(main, ["replay", str(transcripts / "fuse.jsonl")])
        assert result.exit_code == 0, result.output
        doc = json.loads(result.output.strip())
        assert doc["sample_id"] == "fuse"
        assert doc["predicted"] == ["n_open", "n_fuse", "n_replace", "t_fixed"]
        assert doc["transition_lengths"] == [1, 1, 1]

    def test_report_over_directory(self, runner, transcripts):
        result = runner.invoke(main, ["report", str(transcripts)])
        assert result.exit_code == 0, result.output
        assert "100.00" in result.output

    def test_report_json_out(self, runner, transcripts, tmp_path):
        dest = tmp_path / "rep.json"
        result = runner.invoke(main, ["report", str(transcripts), "--json-out", str(dest)])
        assert result.exit_code == 0, result.output
        doc = json.loads(dest.read_text())
        assert doc["pca"] == 1.0

    def test_report_empty_dir_usage_error(self, runner, tmp_path):
        empty = tmp_path / "none"
        empty.mkdir()
        result = runner.invoke(main, ["report", str(empty)])
        assert result.exit_code == 2


class TestChat:
    def test_scripted_walk_to_terminal(self, runner, workspace):
        result = runner.invoke(
            main,
            ["chat", "--flowcharts", str(workspace / "charts"), "--chart", "car"],
            input="my circuit cut out\nyes\nyes\ndone\n",
        )
        assert result.exit_code == 0, result.output
        assert "agent[n_open]: open circuit on run?" in result.output
        assert "agent[n_fuse]: fuse wire blown?" in result.output
        assert "agent[t_fixed]:" in result.output
        assert "session ended: terminal; path n_open -> n_fuse -> n_replace -> t_fixed" in result.output

    def test_unknown_chart_usage_error(self, runner, workspace):
        result = runner.invoke(
            main,
            ["chat", "--flowcharts", str(workspace / "charts"), "--chart", "boat"],
            input="hello\n",
        )
        assert result.exit_code == 2
        assert "unknown flowchart" in result.output
