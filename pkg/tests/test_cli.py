import csv
import json
import os

import pytest

import config_manager
from graph_ir import GraphNode, ModelGraph, ValueInfo, save_model
from main import build_parser, main

TINY_CONFIG = {
    "k": 8,
    "h": 4,
    "hidden_dim": 4,
    "n_stations": 3,
    "days": 6,
    "seed": 3,
    "epochs": 3,
    "patience": 2,
    "log_level": "WARNING",
    "latency_samples": 5,
}


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    """空工作目录 + 小规模 config.json"""
    for name in list(os.environ):
        if name.startswith("EDGE_GNN_"):
            monkeypatch.delenv(name)
    monkeypatch.chdir(tmp_path)
    monkeypatch.setattr(config_manager, "config_manager", None)
    (tmp_path / "config.json").write_text(json.dumps(TINY_CONFIG), encoding="utf-8")
    return tmp_path


def run_json(capsys, *argv):
    code = main([*argv, "--json", "--no-log-file"])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


@pytest.fixture
def trained(workspace, capsys):
    """生成数据并训练一个 gcn2 模型"""
    assert main(["gen-data", "--out", "data/pv.csv", "--no-log-file"]) == 0
    capsys.readouterr()
    code, payload = run_json(capsys, "train", "--data", "data/pv.csv", "--arch", "gcn2",
                             "--out", "ckpt/gcn2.npz", "--report", "reports/train.jsonl",
                             "--export", "models/gcn2.egir")
    assert code == 0
    return payload


@pytest.mark.integration
class TestWorkflow:
    def test_gen_data(self, workspace, capsys):
        code, payload = run_json(capsys, "gen-data", "--out", "data/pv.csv", "--days", "3",
                                 "--independent-weather")
        assert code == 0
        assert payload["rows"] == 3 * 96
        assert [s["capacity_kw"] for s in payload["stations"]] == [5.0, 8.0, 10.0]
        assert (workspace / "data" / "pv.meta.json").exists()

    def test_train(self, workspace, trained):
        assert trained["arch"] == "gcn2"
        assert trained["provenance"]["epochs_run"] in {"2", "3"}
        assert trained["test_samples"] > 0
        assert (workspace / "ckpt" / "gcn2.npz").exists()
        assert (workspace / "models" / "gcn2.egir").exists()
        lines = (workspace / "reports" / "train.jsonl").read_text(encoding="utf-8").splitlines()
        assert len(lines) == int(trained["provenance"]["epochs_run"])

    def test_export_matches_train_export(self, workspace, trained, capsys):
        code, payload = run_json(capsys, "export", "--checkpoint", "ckpt/gcn2.npz", "--out", "models/again.egir")
        assert code == 0
        assert payload["op_types"] == ["MyGcnOp", "Flatten", "MatMul", "AddBias"]
        assert (workspace / "models" / "again.egir").read_bytes() == (workspace / "models" / "gcn2.egir").read_bytes()

    def test_eval_and_compare(self, workspace, trained, capsys):
        code, batched = run_json(capsys, "eval", "--data", "data/pv.csv", "--model", "models/gcn2.egir",
                                 "--out", "reports/batched.json")
        assert code == 0
        assert batched["arch"] == "gcn2"
        assert batched["n_samples"] == trained["test_samples"]
        assert [s["station_id"] for s in batched["stations"]] == ["station_1", "station_2", "station_3"]

        code, _ = run_json(capsys, "eval", "--data", "data/pv.csv", "--model", "models/gcn2.egir",
                           "--mode", "serialized", "--threads", "2", "--out", "reports/serialized.json")
        assert code == 0

        code, comparison = run_json(capsys, "compare", "reports/batched.json", "reports/serialized.json")
        assert code == 0
        assert comparison["labels"] == ["batched", "serialized"]
        assert all(row["abs_diff"] < 1e-6 for row in comparison["stations"])

    def test_eval_text_report(self, workspace, trained, capsys):
        code = main(["eval", "--data", "data/pv.csv", "--model", "models/gcn2.egir",
                     "--out", "reports/eval.txt", "--no-log-file"])
        assert code == 0
        assert "MAPE" in capsys.readouterr().out
        assert "PV ID" in (workspace / "reports" / "eval.txt").read_text(encoding="utf-8")

    def test_verify_equivalence(self, trained, capsys):
        code, payload = run_json(capsys, "verify-equivalence", "--data", "data/pv.csv",
                                 "--model", "models/gcn2.egir", "--limit", "32", "--tolerance", "1e-4")
        assert code == 0
        assert payload["samples"] == 32
        assert payload["equivalent"]

    def test_verify_equivalence_failure(self, trained, capsys):
        code, payload = run_json(capsys, "verify-equivalence", "--data", "data/pv.csv",
                                 "--model", "models/gcn2.egir", "--tolerance", "0")
        assert code == 5
        assert payload["equivalent"] is False

    def test_infer(self, workspace, trained, capsys):
        code, payload = run_json(capsys, "infer", "--data", "data/pv.csv", "--model", "models/gcn2.egir",
                                 "--limit", "3", "--out", "out/pred.csv")
        assert code == 0
        assert (payload["samples"], payload["rows"]) == (3, 9)
        with open(workspace / "out" / "pred.csv", newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        assert [r["station_id"] for r in rows[:3]] == ["station_1", "station_2", "station_3"]

    def test_bench(self, workspace, trained, capsys):
        code, payload = run_json(capsys, "bench", "--data", "data/pv.csv", "--model", "models/gcn2.egir",
                                 "--repetitions", "2", "--out", "reports/bench.json")
        assert code == 0
        assert payload["n_samples"] == trained["test_samples"]
        assert len(payload["run_seconds"]) == 2
        assert (workspace / "reports" / "bench.json").exists()

    def test_inspect(self, trained, capsys):
        code, payload = run_json(capsys, "inspect", "--model", "models/gcn2.egir")
        assert code == 0
        assert payload["node_count"] == 5
        assert payload["metadata"]["k"] == "8"
        assert payload["missing_ops"] == []


@pytest.mark.integration
class TestExitCodes:
    def test_data_error(self, workspace):
        code = main(["train", "--data", "missing.csv", "--arch", "sage2", "--out", "x.npz", "--no-log-file"])
        assert code == 3

    def test_model_error(self, workspace):
        (workspace / "broken.egir").write_bytes(b"not a model")
        assert main(["inspect", "--model", "broken.egir", "--no-log-file"]) == 4

    def test_config_error(self, workspace):
        (workspace / "bad.json").write_text(json.dumps({"k": 0}), encoding="utf-8")
        assert main(["gen-data", "--out", "pv.csv", "--config", "bad.json", "--no-log-file"]) == 2

    def test_station_count_mismatch(self, trained):
        assert main(["gen-data", "--out", "data/two.csv", "--n-stations", "2", "--capacities", "5", "8",
                     "--no-log-file"]) == 0
        assert main(["eval", "--data", "data/two.csv", "--model", "models/gcn2.egir", "--no-log-file"]) == 4

    @pytest.mark.parametrize("command", ["eval", "infer", "bench", "verify-equivalence"])
    def test_model_without_training_metadata(self, workspace, command):
        assert main(["gen-data", "--out", "data/pv.csv", "--no-log-file"]) == 0
        bare = ModelGraph(
            inputs=[ValueInfo("X", (3, 8))],
            outputs=["Y"],
            nodes=[GraphNode("Flatten", ["X"], ["Y"], {"axis": 1}, "flatten")],
        )
        save_model(bare, workspace / "bare.egir")
        assert main([command, "--data", "data/pv.csv", "--model", "bare.egir", "--no-log-file"]) == 4

    @pytest.mark.parametrize("value", ["0", "-3", "five"])
    def test_repetitions_must_be_positive(self, workspace, value):
        with pytest.raises(SystemExit) as exc_info:
            main(["bench", "--data", "pv.csv", "--model", "m.egir", "--repetitions", value])
        assert exc_info.value.code == 2

    def test_usage_error(self, workspace):
        with pytest.raises(SystemExit) as exc_info:
            main(["train"])
        assert exc_info.value.code == 2

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as exc_info:
            build_parser().parse_args(["deploy"])
        assert exc_info.value.code == 2
