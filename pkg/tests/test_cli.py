"""CLI surface: every subcommand, file outputs, exit codes."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from depthsep import instance, networks
from depthsep.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def invoke(runner, args, expect_exit=0):
    result = runner.invoke(main, args, catch_exceptions=False)
    assert result.exit_code == expect_exit, result.output
    return result


class TestBuildInstance:
    def test_writes_instance_and_samples(self, runner, tmp_path):
        inst = tmp_path / "inst.json"
        csvp = tmp_path / "s.csv"
        invoke(
            runner,
            ["build-instance", "--d", "1", "--seed", "5", "--out", str(inst),
             "--samples", "20", "--samples-out", str(csvp)],
        )
        spec = instance.spec_from_json(inst.read_text())
        assert spec.d == 1
        lines = csvp.read_text().strip().split("\n")
        assert len(lines) == 21
        assert lines[0].startswith("point0,")

    def test_deterministic_bytes(self, runner, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        invoke(runner, ["build-instance", "--d", "1", "--seed", "5", "--out", str(a)])
        invoke(runner, ["build-instance", "--d", "1", "--seed", "5", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()


class TestEval:
    def test_target_values(self, runner):
        result = invoke(
            runner,
            ["eval", "--d", "1", "--point", "0,0,0.25,0.25", "--point", "0,0,0.05,0.3"],
        )
        assert json.loads(result.output) == {"values": [1, 0]}

    def test_network_evaluation(self, runner, tmp_path):
        net = networks.DenseNetwork(
            2,
            ((np.array([[1.0, 0.0]]), np.array([0.0])),),
            np.array([1.0]),
            0.5,
            networks.RELU,
        )
        p = tmp_path / "net.json"
        p.write_text(networks.network_to_json(net))
        result = invoke(runner, ["eval", "--net", str(p), "--point", "2,9"])
        assert json.loads(result.output) == {"values": [2.5]}

    def test_requires_exactly_one_mode(self, runner):
        result = runner.invoke(main, ["eval", "--point", "1"])
        assert result.exit_code != 0


class TestCompileThreshold:
    def test_files_and_report(self, runner, tmp_path, rng):
        net = networks.DenseNetwork(
            4,
            ((rng.uniform(-1, 1, (4, 4)), rng.uniform(-1, 1, 4)),),
            rng.uniform(-1, 1, 4),
            0.0,
            networks.RELU,
        )
        src = tmp_path / "in.json"
        src.write_text(networks.network_to_json(net))
        out = tmp_path / "compiled.json"
        rep = tmp_path / "report.json"
        invoke(
            runner,
            ["compile-threshold", "--net", str(src), "--delta", "0.05",
             "--out", str(out), "--report", str(rep)],
        )
        compiled = networks.network_from_json(out.read_text())
        assert compiled.activation.tag == "threshold"
        report = json.loads(rep.read_text())
        assert report["certified_error"] <= 0.05


class TestReduce:
    def test_reports_equivalence_and_counts(self, runner, tmp_path):
        out = tmp_path / "avg.json"
        result = invoke(
            runner,
            ["reduce", "--d", "1", "--D", "8", "--blocks", "3", "--seed", "9",
             "--out", str(out)],
        )
        report = json.loads(result.output)
        assert report["block_equivalence_error"] <= 1e-9
        assert report["width"] == [24]
        assert not report["bound_armed"]
        net = networks.network_from_json(out.read_text())
        assert net.input_dim == 2


class TestVerifyLemmas:
    def test_passing_run(self, runner, tmp_path):
        out = tmp_path / "rep.json"
        invoke(
            runner,
            ["verify-lemmas", "--a1", "4x4", "--a2", "d<=1", "--l2", "d=1,D=24",
             "--out", str(out)],
        )
        doc = json.loads(out.read_text())
        assert doc["pass"]
        assert {r["lemma"] for r in doc["reports"]} == {"a1", "a2", "l2"}
        for r in doc["reports"]:
            assert {"lemma", "parameters", "max_ratio", "pass"} <= set(r)

    def test_requires_a_selection(self, runner):
        result = runner.invoke(main, ["verify-lemmas"])
        assert result.exit_code != 0


class TestTrainBaseline:
    def test_report_written(self, runner, tmp_path):
        out = tmp_path / "train.json"
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"width": 4, "epochs": 2, "samples_per_epoch": 256}))
        invoke(
            runner,
            ["train-baseline", "--d", "1", "--seed", "3", "--config", str(cfg),
             "--out", str(out)],
        )
        doc = json.loads(out.read_text())
        assert len(doc["history"]) == 2
        assert doc["config"]["width"] == 4
        assert "population_loss" in doc


class TestReport:
    def test_writes_csv_and_json(self, runner, tmp_path):
        prefix = tmp_path / "sweep"
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"width": 1, "epochs": 2, "samples_per_epoch": 256}))
        invoke(
            runner,
            ["report", "--d", "1", "--widths", "2,4", "--seed", "3",
             "--config", str(cfg), "--out", str(prefix)],
        )
        csv_text = (tmp_path / "sweep.csv").read_text()
        assert csv_text.splitlines()[0].startswith("label,width")
        doc = json.loads((tmp_path / "sweep.json").read_text())
        labels = [r["label"] for r in doc["rows"]]
        assert "constant-half" in labels and "exact-depth3" in labels

    def test_byte_identical_reruns(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"width": 1, "epochs": 1, "samples_per_epoch": 128}))
        args = ["report", "--d", "1", "--widths", "2", "--seed", "3", "--config", str(cfg)]
        invoke(runner, args + ["--out", str(tmp_path / "one")])
        invoke(runner, args + ["--out", str(tmp_path / "two")])
        assert (tmp_path / "one.csv").read_bytes() == (tmp_path / "two.csv").read_bytes()
        assert (tmp_path / "one.json").read_bytes() == (tmp_path / "two.json").read_bytes()


class TestVerifyAllCommand:
    def test_subset_passes(self, runner):
        result = invoke(runner, ["verify-all", "--only", "baseline,gradient"])
        doc = json.loads(result.output)
        assert doc["pass"]

    def test_corrupted_packing_exits_nonzero(self, runner, tmp_path):
        spec = instance.build_instance(1, seed=4)
        doc = json.loads(instance.spec_to_json(spec))
        doc["points"][1] = [c * 0.9 for c in doc["points"][0]]
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        result = runner.invoke(
            main,
            ["verify-all", "--only", "packing", "--instance", str(bad)],
            catch_exceptions=False,
        )
        assert result.exit_code == 1
        assert not json.loads(result.output)["pass"]
