import json

import pytest
from click.testing import CliRunner

from ccradon.cli import main

BALL_SCENARIO = {
    "kind": "ball",
    "model": "parabola",
    "seed": 11,
    "parameters": {
        "center": [0.0, 0.0, 0.0],
        "delta1": 0.0625,
        "delta2": 0.0625,
        "h": 0.0078125,
        "mc": {"paths": 5000, "steps": 16},
    },
}


def write_scenario(tmp_path, payload, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture()
def runner():
    return CliRunner()


class TestBallCommand:
    def test_runs_and_writes_artifacts(self, runner, tmp_path):
        scen = write_scenario(tmp_path, BALL_SCENARIO)
        out = tmp_path / "out"
        result = runner.invoke(main, ["ball", "--scenario", scen, "--out", str(out)])
        assert result.exit_code == 0, result.output
        report = json.loads((out / "ball_report.json").read_text())
        assert report["passed"] is True
        assert (out / "slab_profile.csv").exists()
        assert (out / "meta.json").exists()

    def test_missing_h_names_field(self, runner, tmp_path):
        bad = json.loads(json.dumps(BALL_SCENARIO))
        del bad["parameters"]["h"]
        scen = write_scenario(tmp_path, bad)
        result = runner.invoke(main, ["ball", "--scenario", scen, "--out", str(tmp_path / "o")])
        assert result.exit_code == 2
        assert "parameters.h" in result.output

    def test_missing_seed_for_stochastic(self, runner, tmp_path):
        bad = json.loads(json.dumps(BALL_SCENARIO))
        del bad["seed"]
        scen = write_scenario(tmp_path, bad)
        result = runner.invoke(main, ["ball", "--scenario", scen, "--out", str(tmp_path / "o")])
        assert result.exit_code == 2
        assert "seed" in result.output

    def test_resolution_exit_code(self, runner, tmp_path):
        bad = json.loads(json.dumps(BALL_SCENARIO))
        bad["parameters"]["h"] = 0.0625
        del bad["parameters"]["mc"]
        scen = write_scenario(tmp_path, bad)
        result = runner.invoke(main, ["ball", "--scenario", scen, "--out", str(tmp_path / "o")])
        assert result.exit_code == 3

    def test_kind_mismatch(self, runner, tmp_path):
        bad = json.loads(json.dumps(BALL_SCENARIO))
        bad["kind"] = "region"
        scen = write_scenario(tmp_path, bad)
        result = runner.invoke(main, ["ball", "--scenario", scen, "--out", str(tmp_path / "o")])
        assert result.exit_code == 2


class TestModelCommands:
    def test_list(self, runner):
        result = runner.invoke(main, ["model", "list"])
        assert result.exit_code == 0
        assert "parabola" in result.output

    def test_show(self, runner):
        result = runner.invoke(main, ["model", "show", "cubic"])
        assert result.exit_code == 0
        assert json.loads(result.output)["d"] == 3

    def test_show_unknown(self, runner):
        result = runner.invoke(main, ["model", "show", "nope"])
        assert result.exit_code == 2


class TestInequalityCommand:
    def test_bounded_verdict(self, runner, tmp_path):
        scen = write_scenario(
            tmp_path,
            {
                "kind": "test-inequality",
                "model": "parabola",
                "parameters": {
                    "triple": ["5/3", 3, 3],
                    "delta_list": [0.125, 0.0625],
                    "expect": "bounded",
                },
            },
        )
        out = tmp_path / "out"
        result = runner.invoke(main, ["test-inequality", "--scenario", scen, "--out", str(out)])
        assert result.exit_code == 0, result.output
        report = json.loads((out / "inequality_report.json").read_text())
        assert report["verdict"] == "bounded"

    def test_growing_verdict_fails_wrong_expectation(self, runner, tmp_path):
        scen = write_scenario(
            tmp_path,
            {
                "kind": "test-inequality",
                "model": "parabola",
                "parameters": {
                    "triple": [1.1, 4, 4],
                    "delta_list": [0.125, 0.0625],
                    "expect": "bounded",
                },
            },
        )
        result = runner.invoke(main, ["test-inequality", "--scenario", scen, "--out", str(tmp_path / "o")])
        assert result.exit_code == 1


class TestDecomposeCommand:
    def test_slab_instance(self, runner, tmp_path):
        scen = write_scenario(
            tmp_path,
            {
                "kind": "decompose",
                "model": "parabola",
                "parameters": {
                    "h": 0.0078125,
                    "beta": 0.05,
                    "F": {"rects": [[[0.2, 0.26], [-0.9, 0.9]]]},
                    "eta": 0.125,
                    "c_eta": 0.25,
                    "C": 8.0,
                },
            },
        )
        out = tmp_path / "out"
        result = runner.invoke(main, ["decompose", "--scenario", scen, "--out", str(out)])
        assert result.exit_code == 0, result.output
        report = json.loads((out / "decompose_report.json").read_text())
        assert report["passed"] is True
        assert (out / "strata.csv").exists()
        assert (out / "partition.csv").exists()


class TestNecessityCommand:
    def test_records(self, runner, tmp_path):
        scen = write_scenario(
            tmp_path,
            {
                "kind": "necessity",
                "model": "parabola",
                "parameters": {
                    "triple": [1.25, 1, "inf"],
                    "delta_list": [[0.125, 0.125], [0.0625, 0.0625]],
                },
            },
        )
        out = tmp_path / "out"
        result = runner.invoke(main, ["necessity", "--scenario", scen, "--out", str(out)])
        assert result.exit_code == 0, result.output
        report = json.loads((out / "necessity_report.json").read_text())
        assert all(rec["disjoint"] for rec in report["records"])


class TestDeterminism:
    def test_ball_reports_identical(self, runner, tmp_path):
        scen = write_scenario(tmp_path, BALL_SCENARIO)
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            result = runner.invoke(main, ["ball", "--scenario", scen, "--out", str(out)])
            assert result.exit_code == 0
            outs.append((out / "ball_report.json").read_bytes())
        assert outs[0] == outs[1]

    def test_region_threads_identical(self, runner, tmp_path):
        scen = write_scenario(
            tmp_path,
            {
                "kind": "region",
                "model": "parabola",
                "seed": 3,
                "parameters": {
                    "windows": [[1.0, 1.0]],
                    "delta_grid": [0.0625, 0.03125],
                    "c1_grid": {"start": 1.8, "stop": 2.2, "step": 0.1},
                    "c2_grid": {"start": 1.8, "stop": 2.2, "step": 0.1},
                    "z_samples": [[0.0, 0.0, 0.0]],
                },
            },
        )
        payloads = []
        for threads in ("1", "8"):
            out = tmp_path / f"t{threads}"
            result = runner.invoke(main, ["region", "--scenario", scen, "--out", str(out), "--threads", threads])
            assert result.exit_code == 0, result.output
            payloads.append((out / "region_report.json").read_bytes() + (out / "region.csv").read_bytes())
        assert payloads[0] == payloads[1]
