"""
基准测试服务
统计推理总耗时（多次重复取中位数）、吞吐、峰值内存、CPU 占用和单样本延迟分位数
"""

import statistics
import time
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel

from errors import EmptyDatasetError
from graph_ir import ExecutionMode, ModelGraph, OperatorRegistry

from .inference_service import InferenceService
from .log_manager import get_logger
from .system_monitor import DEFAULT_INTERVAL_MS, PeakMemorySampler, format_bytes
from .export_service import format_table

logger = get_logger(__name__)

DEFAULT_LATENCY_SAMPLES = 200


class BenchReport(BaseModel):
    arch: str
    mode: str
    threads: int
    n_samples: int
    repetitions: int
    run_seconds: List[float]
    median_seconds: float
    samples_per_sec: float
    peak_memory_bytes: int
    mean_cpu_percent: float
    latency_ms_p50: float
    latency_ms_p95: float
    latency_ms_p99: float

    def to_table(self) -> str:
        rows = [
            ("arch", self.arch),
            ("mode", self.mode),
            ("threads", self.threads),
            ("samples", self.n_samples),
            ("repetitions", self.repetitions),
            ("median time (sec)", f"{self.median_seconds:.4f}"),
            ("samples/sec", f"{self.samples_per_sec:.1f}"),
            ("peak memory", format_bytes(self.peak_memory_bytes)),
            ("mean CPU (%)", f"{self.mean_cpu_percent:.1f}"),
            ("latency p50/p95/p99 (ms)",
             f"{self.latency_ms_p50:.3f} / {self.latency_ms_p95:.3f} / {self.latency_ms_p99:.3f}"),
        ]
        return format_table(["metric", "value"], rows)


class BenchService:
    """基准测试服务，计时不含模型加载和数据解析"""

    def __init__(self, model: ModelGraph, registry: Optional[OperatorRegistry] = None,
                 memory_interval_ms: float = DEFAULT_INTERVAL_MS):
        self.inference = InferenceService(model, registry)
        self.memory_interval_ms = memory_interval_ms

    def run(self, x: np.ndarray, mode: Union[ExecutionMode, str] = ExecutionMode.BATCHED,
            repetitions: int = 5, threads: int = 1,
            latency_samples: int = DEFAULT_LATENCY_SAMPLES) -> BenchReport:
        mode = ExecutionMode(mode)
        if len(x) == 0:
            raise EmptyDatasetError("基准测试数据集为空")
        if repetitions < 1:
            raise ValueError(f"repetitions 必须 ≥ 1，实际 {repetitions}")
        x_norm = self.inference.prepare(x)
        # 预热一次，不计时
        self.inference.run_normalized(x_norm[:min(len(x_norm), 64)], mode, threads)

        run_seconds = []
        with PeakMemorySampler(self.memory_interval_ms) as sampler:
            for _ in range(repetitions):
                started = time.perf_counter()
                self.inference.run_normalized(x_norm, mode, threads)
                run_seconds.append(time.perf_counter() - started)

        latencies = self._sample_latencies(x_norm, latency_samples)
        median = statistics.median(run_seconds)
        p50, p95, p99 = np.percentile(latencies, [50, 95, 99]) if latencies else (0.0, 0.0, 0.0)
        report = BenchReport(
            arch=self.inference.model.metadata.get("arch", "unknown"),
            mode=mode.value,
            threads=threads,
            n_samples=len(x),
            repetitions=repetitions,
            run_seconds=run_seconds,
            median_seconds=median,
            samples_per_sec=len(x) / median if median > 0 else float("inf"),
            peak_memory_bytes=sampler.peak_rss_bytes,
            mean_cpu_percent=sampler.mean_cpu_percent,
            latency_ms_p50=float(p50),
            latency_ms_p95=float(p95),
            latency_ms_p99=float(p99),
        )
        logger.info("基准测试完成", arch=report.arch, mode=report.mode, n=report.n_samples,
                    median_seconds=round(median, 4), samples_per_sec=round(report.samples_per_sec, 1))
        return report

    def _sample_latencies(self, x_norm: np.ndarray, count: int) -> List[float]:
        """对前 count 个样本逐个单独执行，返回毫秒延迟"""
        latencies = []
        for i in range(min(count, len(x_norm))):
            started = time.perf_counter()
            self.inference.run_normalized(x_norm[i:i + 1], ExecutionMode.BATCHED)
            latencies.append((time.perf_counter() - started) * 1000.0)
        return latencies
