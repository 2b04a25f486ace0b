"""
测试公共夹具
"""

import numpy as np
import pandas as pd
import pytest

from gnn_ops import GraphTopology
from models import ArchSpec, NormStats, TrainedModel
from pipeline import StationSeries, generate_synthetic, window
from services.log_manager import get_log_manager
from training import init_params


@pytest.fixture(autouse=True)
def console_only_logging():
    """测试中不写日志文件"""
    get_log_manager(log_dir="./logs", log_level="WARNING", log_to_file=False)
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


@pytest.fixture
def triangle():
    return GraphTopology.fully_connected(3)


@pytest.fixture
def small_spec_factory():
    """n=3, k=4, h=2, d=5 的小架构"""
    def factory(kind: str, n: int = 3, k: int = 4, h: int = 2, d: int = 5, topology=None) -> ArchSpec:
        return ArchSpec.create(kind, n_stations=n, k=k, h=h, hidden_dim=d, topology=topology)
    return factory


@pytest.fixture
def random_model_factory(small_spec_factory):
    """随机参数的 TrainedModel（偏置也取随机值，避免输出恰好为 0）"""
    def factory(kind: str, seed: int = 0, **spec_kwargs) -> TrainedModel:
        spec = small_spec_factory(kind, **spec_kwargs)
        gen = np.random.default_rng(seed)
        params = init_params(spec, gen)
        params["bm"] = gen.normal(size=params["bm"].shape)
        n = spec.n_stations
        return TrainedModel(
            spec,
            params,
            NormStats(gen.uniform(0.5, 2.0, n), gen.uniform(0.5, 2.0, n)),
            capacities=[5.0, 8.0, 10.0][:n] + [10.0] * max(0, n - 3),
        )
    return factory


@pytest.fixture
def tiny_series():
    """3 个站点、6 天的合成数据"""
    return generate_synthetic(n_stations=3, days=6, seed=7)


@pytest.fixture
def tiny_dataset(tiny_series):
    return window(tiny_series, k=8, h=4)


@pytest.fixture
def series_factory():
    """按 15 分钟网格构造单站点序列"""
    def factory(values, capacity=10.0, station_id="station_1", start="2024-01-01",
                imputed=None) -> StationSeries:
        timestamps = pd.date_range(start, periods=len(values), freq="15min")
        return StationSeries(station_id, capacity, timestamps, np.asarray(values, dtype=float), imputed)
    return factory
