"""End-to-end tests of the command-line interface."""

import json

import numpy as np
import pytest

from cifuse.cli import main
from cifuse import demo_estimate_pairs, esci_closed_form, ImportanceFunction


def write_demo_pairs(path):
    payload = [
        {"x": [float(v) for v in p.x], "P": [[float(v) for v in row] for row in p.P]}
        for p in demo_estimate_pairs()
    ]
    path.write_text(json.dumps(payload))
    return path


class TestDemoEllipse:
    def test_writes_expected_files(self, tmp_path):
        out = tmp_path / "out"
        code = main(["demo-ellipse", "--structures", "3", "--seed", "1", "--out", str(out), "--points", "32"])
        assert code == 0
        ellipses = out / "ellipses.csv"
        fused = out / "fused_pairs.json"
        assert ellipses.is_file() and fused.is_file()
        payload = json.loads(fused.read_text())
        assert payload["seed"] == 1
        assert len(payload["structures"]) == 3
        combos = {(e["algorithm"], e["importance"], e["structure_id"]) for e in payload["fused"]}
        # 3 structures x (3 esci importance kinds + csci)
        assert len(combos) == 12

    def test_repeat_invocations_are_byte_identical(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["demo-ellipse", "--structures", "2", "--seed", "7", "--out", str(out_a), "--points", "16"]) == 0
        assert main(["demo-ellipse", "--structures", "2", "--seed", "7", "--out", str(out_b), "--points", "16"]) == 0
        assert (out_a / "ellipses.csv").read_bytes() == (out_b / "ellipses.csv").read_bytes()
        assert (out_a / "fused_pairs.json").read_bytes() == (out_b / "fused_pairs.json").read_bytes()

    def test_single_structure_flag(self, tmp_path):
        out = tmp_path / "out"
        assert main(["demo-ellipse", "--structures", "1", "--seed", "0", "--out", str(out), "--points", "8"]) == 0
        payload = json.loads((out / "fused_pairs.json").read_text())
        assert {e["structure_id"] for e in payload["fused"]} == {0}


class TestFuse:
    def test_esci_matches_closed_form(self, tmp_path, capsys):
        pairs_file = write_demo_pairs(tmp_path / "pairs.json")
        assert main(["fuse", str(pairs_file), "--importance", "inv_trace"]) == 0
        payload = json.loads(capsys.readouterr().out)
        reference = esci_closed_form(demo_estimate_pairs(), ImportanceFunction.inv_trace())
        np.testing.assert_allclose(payload["x"], reference.x, rtol=1e-12)
        np.testing.assert_allclose(payload["P"], reference.P, rtol=1e-12)
        assert payload["algorithm"] == "esci"
        assert "config_sha256" in payload

    def test_single_pair_echoes(self, tmp_path, capsys):
        pair = demo_estimate_pairs()[0]
        path = tmp_path / "one.json"
        path.write_text(json.dumps([{"x": list(pair.x), "P": [list(r) for r in pair.P]}]))
        assert main(["fuse", str(path)]) == 0
        payload = json.loads(capsys.readouterr().out)
        np.testing.assert_allclose(payload["x"], pair.x, atol=1e-12)
        np.testing.assert_allclose(payload["P"], pair.P, rtol=1e-12)

    def test_malformed_covariance_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps([{"x": [0.0, 0.0], "P": [[1.0, 2.0], [2.0, 1.0]]}]))
        assert main(["fuse", str(path)]) == 2
        assert "not positive definite" in capsys.readouterr().err

    def test_cbci_and_csci_algorithms(self, tmp_path, capsys):
        pairs_file = write_demo_pairs(tmp_path / "pairs.json")
        for algorithm in ("cbci", "csci"):
            assert main(["fuse", str(pairs_file), "--algorithms", algorithm, "--seed", "3"]) == 0
            payload = json.loads(capsys.readouterr().out)
            assert payload["algorithm"] == algorithm
            assert payload["importance"] == "-"

    def test_missing_file_exits_2(self, tmp_path, capsys):
        assert main(["fuse", str(tmp_path / "nope.json")]) == 2
        assert "error" in capsys.readouterr().err


class TestTrack:
    def test_small_run_with_config_layering(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(
            json.dumps(
                {
                    "seed": 5,
                    "runs": 2,
                    "scenario": {"kind": "tracking", "horizon": 8},
                }
            )
        )
        out = tmp_path / "out"
        # the flag overrides the config seed; runs comes from the config
        code = main(["track", "--config", str(config), "--seed", "9", "--out", str(out)])
        assert code == 0
        summary = json.loads((out / "tracking_summary.json").read_text())
        assert summary["seed"] == 9
        assert summary["config"]["runs"] == 2
        assert summary["config"]["scenario"]["horizon"] == 8
        assert (out / "tracking_rmse.csv").is_file()
        assert (out / "tracking_cost.csv").is_file()
        trajectory_lines = (out / "tracking_trajectory.csv").read_text().splitlines()
        assert trajectory_lines[1] == "step,series,x,y"
        series = {line.split(",")[1] for line in trajectory_lines[2:]}
        assert "truth" in series and "esci/inv_trace" in series
        first_line = (out / "tracking_rmse.csv").read_text().splitlines()[0]
        assert first_line.startswith("# seed=9")

    def test_same_seed_twice_identical(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"scenario": {"kind": "tracking", "horizon": 6}}))
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(
                ["track", "--config", str(config), "--runs", "1", "--seed", "7", "--out", str(out)]
            ) == 0
            outs.append((out / "tracking_rmse.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_bad_trigger_flag_exits_2(self, tmp_path, capsys):
        assert main(["track", "--trigger", "sometimes", "--out", str(tmp_path)]) == 2
        assert "error" in capsys.readouterr().err

    def test_unknown_algorithm_exits_2(self, tmp_path, capsys):
        assert main(["track", "--algorithms", "magic", "--out", str(tmp_path)]) == 2
        assert "unknown algorithm" in capsys.readouterr().err


class TestRobot:
    def test_small_run_outputs(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"scenario": {"kind": "robot", "horizon": 10}}))
        out = tmp_path / "out"
        code = main(
            [
                "robot",
                "--config",
                str(config),
                "--runs",
                "1",
                "--structures",
                "2",
                "--seed",
                "2",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        summary = json.loads((out / "robot_summary.json").read_text())
        assert summary["runs"] == 1
        assert len(summary["structures"]) == 2
        rmse_lines = (out / "robot_rmse.csv").read_text().splitlines()
        # 2 structures x (4 esci kinds + csci) series, 10 steps each, header + comment
        assert len(rmse_lines) == 2 + 2 * 5 * 10
        assert (out / "robot_trajectory.csv").is_file()


class TestConsistencyCommand:
    def test_writes_report(self, tmp_path):
        out = tmp_path / "out"
        assert main(["consistency", "--runs", "20000", "--seed", "1", "--out", str(out)]) == 0
        payload = json.loads((out / "consistency.json").read_text())
        assert payload["report"]["conservative"] is True
        assert payload["understated_control"]["conservative"] is False
