"""
桌面规模验收：默认合成数据（3 站点、150 天、5/8/10 kW），k = h = 96
"""

import numpy as np
import pytest

from models import ArchSpec
from pipeline import evaluate, generate_synthetic, window
from services.bench_service import BenchService
from training import TrainConfig, fit

BENCH_SAMPLES = 2209


@pytest.fixture(scope="module")
def desk_dataset():
    return window(generate_synthetic(seed=42), k=96, h=96)


@pytest.fixture(scope="module")
def trained_graphs(desk_dataset):
    config = TrainConfig()
    graphs = {}
    for kind in ("gcn2", "sage2"):
        spec = ArchSpec.create(kind, n_stations=3, k=96, h=96, hidden_dim=64)
        graphs[kind] = fit(desk_dataset, spec, config).to_graph()
    return graphs


@pytest.fixture(scope="module")
def holdout(desk_dataset):
    _, _, test = desk_dataset.split_chronological()
    return test


@pytest.mark.slow
class TestDeskScale:
    def test_dataset_scale(self, desk_dataset, holdout):
        assert len(desk_dataset) == 150 * 96 - 95 - 96
        assert len(holdout) > 2000

    @pytest.mark.parametrize("kind", ["gcn2", "sage2"])
    def test_error_per_station(self, trained_graphs, holdout, kind):
        report, _ = evaluate(trained_graphs[kind], holdout)
        for score in report.stations:
            assert score.error_pct <= 15.0, score

    def test_gcn_not_worse_than_sage(self, trained_graphs, holdout):
        gcn, _ = evaluate(trained_graphs["gcn2"], holdout)
        sage, _ = evaluate(trained_graphs["sage2"], holdout)
        assert gcn.mean_error_pct <= sage.mean_error_pct + 2.0

    def test_modes_give_same_metric(self, trained_graphs, holdout):
        for graph in trained_graphs.values():
            batched, _ = evaluate(graph, holdout, mode="batched")
            serialized, _ = evaluate(graph, holdout, mode="serialized")
            for a, b in zip(batched.stations, serialized.stations):
                assert abs(a.error_pct - b.error_pct) <= 1e-6

    @pytest.mark.parametrize("kind", ["gcn2", "sage2"])
    def test_batched_throughput(self, trained_graphs, desk_dataset, kind):
        x = desk_dataset.x[-BENCH_SAMPLES:]
        report = BenchService(trained_graphs[kind]).run(x, mode="batched", repetitions=3, latency_samples=0)
        assert report.n_samples == BENCH_SAMPLES
        assert report.samples_per_sec >= 2000
        assert np.isfinite(report.median_seconds)
