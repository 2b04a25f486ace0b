"""
进程资源采样
在后台线程中按固定间隔采样本进程的常驻内存（RSS）和 CPU 占用率
"""

import threading
import time
from typing import Any, Dict, Optional

import psutil

from .log_manager import get_logger

logger = get_logger(__name__)

DEFAULT_INTERVAL_MS = 10.0


class PeakMemorySampler:
    """峰值内存采样器

    用法:
        with PeakMemorySampler() as sampler:
            ...
        sampler.peak_rss_bytes, sampler.mean_cpu_percent

    采样间隔默认 10 ms，峰值是近似值：两次采样之间的瞬时峰值可能被漏掉。
    """

    def __init__(self, interval_ms: float = DEFAULT_INTERVAL_MS, pid: Optional[int] = None):
        if interval_ms <= 0:
            raise ValueError(f"采样间隔必须 > 0，实际 {interval_ms}")
        self.interval = interval_ms / 1000.0
        self.process = psutil.Process(pid)
        self.peak_rss_bytes = 0
        self.samples = 0
        self._cpu_readings = []
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def start(self) -> "PeakMemorySampler":
        """启动采样线程"""
        self._stop.clear()
        self.peak_rss_bytes = self._read_rss()
        # 第一次调用只建立基准，返回值无意义
        self.process.cpu_percent(None)
        self._thread = threading.Thread(target=self._sample_loop, name="peak-memory-sampler", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> Dict[str, Any]:
        """停止采样并返回结果"""
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
            self._thread = None
        self._record()
        self._cpu_readings.append(self.process.cpu_percent(None))
        return self.get_current_metrics()

    def __enter__(self) -> "PeakMemorySampler":
        return self.start()

    def __exit__(self, exc_type, exc, tb):
        self.stop()
        return False

    @property
    def mean_cpu_percent(self) -> float:
        """采样期间进程 CPU 占用的平均值，多核时可超过 100"""
        if not self._cpu_readings:
            return 0.0
        return float(sum(self._cpu_readings) / len(self._cpu_readings))

    def _read_rss(self) -> int:
        try:
            return int(self.process.memory_info().rss)
        except (psutil.NoSuchProcess, psutil.AccessDenied) as e:
            logger.warning("读取进程内存失败", error=str(e))
            return 0

    def _record(self):
        self.peak_rss_bytes = max(self.peak_rss_bytes, self._read_rss())
        self.samples += 1

    def _sample_loop(self):
        last_cpu = time.perf_counter()
        while not self._stop.wait(self.interval):
            self._record()
            # CPU 占用每 100 ms 读一次
            now = time.perf_counter()
            if now - last_cpu >= 0.1:
                self._cpu_readings.append(self.process.cpu_percent(None))
                last_cpu = now

    def get_current_metrics(self) -> Dict[str, Any]:
        return {
            "peak_rss_bytes": self.peak_rss_bytes,
            "mean_cpu_percent": self.mean_cpu_percent,
            "samples": self.samples,
        }


def format_bytes(bytes_value: float) -> str:
    """格式化字节数"""
    for unit in ['B', 'KB', 'MB', 'GB', 'TB']:
        if bytes_value < 1024.0:
            return f"{bytes_value:.1f} {unit}"
        bytes_value /= 1024.0
    return f"{bytes_value:.1f} PB"
