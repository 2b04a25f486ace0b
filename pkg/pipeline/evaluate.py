"""
在测试集上评估导出的模型图
"""

import time
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from errors import ArchSpecError, EmptyDatasetError
from graph_ir import ExecutionMode, ModelGraph, OperatorRegistry
from models import metadata_int
from services.inference_service import InferenceService
from services.log_manager import get_logger
from services.system_monitor import DEFAULT_INTERVAL_MS, PeakMemorySampler

from .metrics import EvalReport, score_stations
from .windowing import ForecastDataset

logger = get_logger(__name__)


def check_compatible(model: ModelGraph, dataset: ForecastDataset):
    """模型的 n、k、h 必须与数据集一致"""
    meta = model.metadata
    expected = tuple(metadata_int(meta, key) for key in ("n_stations", "k", "h"))
    actual = (dataset.n_stations, dataset.k, dataset.h)
    if expected != actual:
        raise ArchSpecError(f"模型 (n, k, h)={expected} 与数据集 {actual} 不一致")


def evaluate(model: ModelGraph, dataset: ForecastDataset,
             mode: Union[ExecutionMode, str] = ExecutionMode.BATCHED, threads: int = 1,
             registry: Optional[OperatorRegistry] = None,
             memory_interval_ms: float = DEFAULT_INTERVAL_MS) -> Tuple[EvalReport, np.ndarray]:
    """返回评估报告和反归一化后的预测 [N, n]

    计时只覆盖推理，不含模型加载、数据解析和归一化。
    """
    mode = ExecutionMode(mode)
    if len(dataset) == 0:
        raise EmptyDatasetError("测试集为空，无法评估")
    check_compatible(model, dataset)

    service = InferenceService(model, registry)
    x_norm = service.prepare(dataset.x)

    with PeakMemorySampler(memory_interval_ms) as sampler:
        started = time.perf_counter()
        y_norm = service.run_normalized(x_norm, mode, threads)
        seconds = time.perf_counter() - started

    y_hat = service.norm_stats.denormalize_y(y_norm.astype(np.float64))
    report = EvalReport(
        arch=model.metadata.get("arch", "unknown"),
        mode=mode.value,
        threads=threads,
        n_samples=len(dataset),
        inference_seconds=seconds,
        samples_per_sec=len(dataset) / seconds if seconds > 0 else float("inf"),
        peak_memory_bytes=sampler.peak_rss_bytes,
        mean_cpu_percent=sampler.mean_cpu_percent,
        stations=score_stations(dataset.y, y_hat, dataset.station_ids, dataset.capacities),
    )
    logger.info("评估完成", arch=report.arch, mode=report.mode, n=report.n_samples,
                seconds=round(seconds, 4), mean_error_pct=round(report.mean_error_pct, 4))
    return report, y_hat


def prediction_rows(dataset: ForecastDataset, y_hat: np.ndarray,
                    limit: Optional[int] = None) -> List[Dict[str, Any]]:
    """逐样本逐站点的预测行，按样本顺序，可只取前 limit 个样本"""
    count = len(dataset) if limit is None else min(limit, len(dataset))
    rows = []
    for s in range(count):
        timestamp = dataset.targets[s].isoformat()
        for i, sid in enumerate(dataset.station_ids):
            rows.append({
                "timestamp": timestamp,
                "station_id": sid,
                "y": float(dataset.y[s, i]),
                "y_hat": float(y_hat[s, i]),
            })
    return rows
