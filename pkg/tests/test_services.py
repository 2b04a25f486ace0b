import csv
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from errors import ArchSpecError, EmptyDatasetError, ModelError, ShapeMismatchError
from graph_ir import GraphNode, ModelGraph, ValueInfo, create_registry
from models import build_model
from services import ExportService, PeakMemorySampler, format_bytes, format_table, load_report
from services.bench_service import BenchService
from services.inference_service import InferenceService
from services.log_manager import get_log_manager, get_logger
from training import predict


@pytest.fixture
def raw_windows(rng):
    return rng.uniform(0.0, 8.0, size=(40, 3, 4))


@pytest.mark.unit
class TestSystemMonitor:
    def test_sampler_records_peak(self):
        with PeakMemorySampler(interval_ms=1.0) as sampler:
            buffer = np.ones((256, 1024))
            buffer.sum()
        metrics = sampler.get_current_metrics()
        assert metrics["peak_rss_bytes"] > 0
        assert metrics["samples"] >= 1
        assert metrics["mean_cpu_percent"] >= 0.0

    def test_invalid_interval(self):
        with pytest.raises(ValueError):
            PeakMemorySampler(interval_ms=0)

    @pytest.mark.parametrize("value,text", [
        (512, "512.0 B"),
        (1536, "1.5 KB"),
        (1024 ** 3, "1.0 GB"),
    ])
    def test_format_bytes(self, value, text):
        assert format_bytes(value) == text


@pytest.mark.unit
class TestExportService:
    def test_format_table(self):
        table = format_table(["PV ID", "MAPE"], [("PV 1", "9.01%"), ("PV 10", "12.5%")])
        assert table.splitlines() == [
            "PV ID  MAPE",
            "-----  -----",
            "PV 1   9.01%",
            "PV 10  12.5%",
        ]

    def test_json_report_round_trip(self, tmp_path):
        service = ExportService(tmp_path)
        payload = {"arch": "sage2", "stations": [{"station_id": "PV 1", "error_pct": 8.5}]}
        path = service.export_report("eval", payload, out=tmp_path / "out" / "eval.json")
        assert load_report(path) == payload
        data = json.loads((tmp_path / "out" / "eval.json").read_text(encoding="utf-8"))
        assert data["kind"] == "eval"
        assert "export_time" in data

    def test_default_location(self, tmp_path):
        path = ExportService(tmp_path / "exports").export_report("bench", {"n": 1})
        assert path.startswith(str(tmp_path / "exports" / "bench_"))
        assert path.endswith(".json")

    def test_txt_report(self, tmp_path):
        path = ExportService(tmp_path).export_report("eval", {"n": 1}, format="txt",
                                                     table="PV ID  MAPE", out=tmp_path / "eval.txt")
        text = open(path, encoding="utf-8").read()
        assert text.startswith("eval 报告\n")
        assert "PV ID  MAPE" in text

    def test_txt_report_without_table(self, tmp_path):
        path = ExportService(tmp_path).export_report("bench", {"median_seconds": 0.25}, format="txt")
        assert "median_seconds: 0.25" in open(path, encoding="utf-8").read()

    def test_unsupported_format(self, tmp_path):
        with pytest.raises(ValueError):
            ExportService(tmp_path).export_report("eval", {}, format="xml")

    def test_predictions_csv(self, tmp_path):
        rows = [
            {"timestamp": "2024-01-02T00:00:00", "station_id": "station_1", "y": 1.5, "y_hat": 1.25},
            {"timestamp": "2024-01-02T00:00:00", "station_id": "station_2", "y": 0.0, "y_hat": 0.125},
        ]
        path = ExportService(tmp_path).export_predictions(rows, out=tmp_path / "pred.csv")
        with open(path, newline="", encoding="utf-8") as f:
            read = list(csv.DictReader(f))
        assert list(read[0]) == ["timestamp", "station_id", "y", "y_hat"]
        assert [float(r["y_hat"]) for r in read] == [1.25, 0.125]

    def test_load_bare_report(self, tmp_path):
        path = tmp_path / "bare.json"
        path.write_text(json.dumps({"stations": []}), encoding="utf-8")
        assert load_report(path) == {"stations": []}


@pytest.mark.unit
class TestLogManager:
    def test_file_logging(self, tmp_path):
        get_log_manager(log_dir=str(tmp_path / "logs"), log_level="INFO", log_to_file=True)
        get_logger("tests").info("训练开始", arch="gcn2")
        assert sorted(p.name for p in (tmp_path / "logs").iterdir()) == ["main.log"]
        text = (tmp_path / "logs" / "main.log").read_text(encoding="utf-8")
        assert "edge_gnn.tests" in text
        assert "训练开始" in text
        assert "arch='gcn2'" in text

    def test_structured_events_reach_buffer(self):
        buffer = []
        get_log_manager(log_level="INFO", log_to_file=False, log_buffer=buffer)
        get_logger("tests").info("评估完成", mean_error_pct=9.01)
        assert any("mean_error_pct=9.01" in line for line in buffer)

    def test_level_filters_events(self):
        buffer = []
        get_log_manager(log_level="WARNING", log_to_file=False, log_buffer=buffer)
        get_logger("tests").info("不会出现")
        get_logger("tests").warning("会出现")
        assert len(buffer) == 1

    def test_training_report_appends(self, tmp_path):
        manager = get_log_manager(log_level="WARNING", log_to_file=False)
        path = tmp_path / "train.jsonl"
        for epoch in (1, 2):
            manager.log_training_epoch(
                {"epoch": epoch, "train_loss": 0.5, "val_loss": 0.25, "lr": 1e-3, "wall_ms": 1.0}, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert [json.loads(line)["epoch"] for line in lines] == [1, 2]


@pytest.mark.integration
class TestInferenceService:
    def test_reads_metadata(self, random_model_factory):
        model = random_model_factory("gcn2")
        service = InferenceService(model.to_graph())
        assert service.capacities == [5.0, 8.0, 10.0]
        assert (service.n_stations, service.k) == (3, 4)
        assert service.norm_stats.mean.tolist() == model.norm_stats.mean.tolist()

    @pytest.mark.parametrize("kind", ["gcn2", "sage2"])
    def test_predict_matches_training_forward(self, random_model_factory, raw_windows, kind):
        model = random_model_factory(kind, seed=8)
        service = InferenceService(model.to_graph())
        expected = model.norm_stats.denormalize_y(predict(model, model.norm_stats.normalize_x(raw_windows)))
        assert_allclose(service.predict(raw_windows), expected, rtol=1e-4, atol=1e-5)

    def test_threads_match_single_thread(self, random_model_factory, raw_windows):
        service = InferenceService(random_model_factory("sage2").to_graph())
        single = service.predict(raw_windows)
        for threads in (2, 4, 64):
            assert_allclose(service.predict(raw_windows, threads=threads), single, rtol=1e-5, atol=1e-5)

    def test_compare_modes(self, random_model_factory, raw_windows):
        service = InferenceService(random_model_factory("sage2").to_graph())
        divergence = service.compare_modes(raw_windows)
        assert set(divergence) == {"y_hat"}
        assert divergence["y_hat"] < 1e-4

    def test_graph_without_norm_stats(self, random_model_factory):
        model = random_model_factory("gcn2")
        with pytest.raises(ArchSpecError, match="norm_mean_0"):
            InferenceService(build_model(model.spec, model.params))

    def test_graph_without_training_metadata(self):
        bare = ModelGraph(
            inputs=[ValueInfo("X", (3, 4))],
            outputs=["Y"],
            nodes=[GraphNode("Flatten", ["X"], ["Y"], {"axis": 1}, "flatten")],
        )
        with pytest.raises(ModelError, match="n_stations"):
            InferenceService(bare)

    def test_window_checks(self, random_model_factory):
        service = InferenceService(random_model_factory("gcn2").to_graph(), create_registry())
        with pytest.raises(ShapeMismatchError):
            service.predict(np.zeros((2, 3, 5)))
        with pytest.raises(EmptyDatasetError):
            service.predict(np.zeros((0, 3, 4)))


@pytest.mark.integration
class TestBenchService:
    def test_report(self, random_model_factory, raw_windows):
        bench = BenchService(random_model_factory("gcn2").to_graph(), memory_interval_ms=1.0)
        report = bench.run(raw_windows, mode="serialized", repetitions=3, threads=2, latency_samples=5)
        assert report.arch == "gcn2"
        assert (report.mode, report.threads, report.n_samples, report.repetitions) == ("serialized", 2, 40, 3)
        assert len(report.run_seconds) == 3
        assert report.median_seconds == sorted(report.run_seconds)[1]
        assert report.samples_per_sec > 0
        assert report.peak_memory_bytes > 0
        assert 0 < report.latency_ms_p50 <= report.latency_ms_p95 <= report.latency_ms_p99
        table = report.to_table()
        assert "samples/sec" in table
        assert format_bytes(report.peak_memory_bytes) in table

    def test_without_latency_samples(self, random_model_factory, raw_windows):
        bench = BenchService(random_model_factory("sage2").to_graph())
        report = bench.run(raw_windows, repetitions=1, latency_samples=0)
        assert report.latency_ms_p99 == 0.0
        assert report.median_seconds == report.run_seconds[0]

    @pytest.mark.slow
    def test_median_of_five_is_stable(self, random_model_factory, rng):
        bench = BenchService(random_model_factory("sage2").to_graph())
        x = rng.uniform(0.0, 8.0, size=(2000, 3, 4))
        report = bench.run(x, mode="serialized", repetitions=5, latency_samples=0)
        assert len(report.run_seconds) == 5
        q1, q3 = np.percentile(report.run_seconds, [25, 75])
        assert (q3 - q1) / report.median_seconds < 0.20

    def test_invalid_runs(self, random_model_factory, raw_windows):
        bench = BenchService(random_model_factory("gcn2").to_graph())
        with pytest.raises(EmptyDatasetError):
            bench.run(raw_windows[:0])
        with pytest.raises(ValueError):
            bench.run(raw_windows, repetitions=0)
