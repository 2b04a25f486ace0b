"""
推理服务
对已导出的模型图做批量推理，可用多个线程共享同一个会话并发执行
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Union

import numpy as np

from errors import EmptyDatasetError, ShapeMismatchError
from graph_ir import ExecutionMode, InferenceSession, ModelGraph, OperatorRegistry, create_registry
from models import INPUT_NAME, OUTPUT_NAME, capacities_from_metadata, metadata_int, norm_stats_from_metadata
from tensor_core import FLOAT32, Tensor

from .log_manager import get_logger

logger = get_logger(__name__)


class InferenceService:
    """推理服务

    归一化参数从模型元数据读取，调用方传入原始 kW 窗口，得到原始 kW 预测。
    """

    def __init__(self, model: ModelGraph, registry: Optional[OperatorRegistry] = None):
        self.model = model
        self.registry = registry if registry is not None else create_registry()
        self.session = InferenceSession(model, self.registry)
        self.norm_stats = norm_stats_from_metadata(model.metadata)
        self.capacities = capacities_from_metadata(model.metadata)
        self.n_stations = metadata_int(model.metadata, "n_stations")
        self.k = metadata_int(model.metadata, "k")

    def _check_windows(self, x: np.ndarray):
        if x.ndim != 3 or x.shape[1:] != (self.n_stations, self.k):
            raise ShapeMismatchError("InferenceService", x.shape, ("S", self.n_stations, self.k))
        if len(x) == 0:
            raise EmptyDatasetError("没有可推理的样本")

    def prepare(self, x: np.ndarray) -> np.ndarray:
        """原始窗口 [S, n, k] -> 归一化 float32"""
        x = np.asarray(x, dtype=np.float64)
        self._check_windows(x)
        return self.norm_stats.normalize_x(x).astype(np.float32)

    def run_normalized(self, x_norm: np.ndarray, mode: Union[ExecutionMode, str] = ExecutionMode.BATCHED,
                       threads: int = 1) -> np.ndarray:
        """归一化输入 -> 归一化输出 [S, n]（float32）

        threads > 1 时按批量维切成连续块并发执行，输出按输入顺序拼回。
        """
        mode = ExecutionMode(mode)
        if threads <= 1 or len(x_norm) < 2:
            return self._run_chunk(x_norm, mode)
        chunks: List[np.ndarray] = np.array_split(x_norm, min(threads, len(x_norm)))
        with ThreadPoolExecutor(max_workers=len(chunks), thread_name_prefix="inference") as pool:
            outputs = list(pool.map(lambda chunk: self._run_chunk(chunk, mode), chunks))
        return np.concatenate(outputs, axis=0)

    def _run_chunk(self, x_norm: np.ndarray, mode: ExecutionMode) -> np.ndarray:
        result = self.session.run({INPUT_NAME: Tensor(x_norm, FLOAT32)}, mode)
        return result[OUTPUT_NAME].numpy()

    def predict(self, x: np.ndarray, mode: Union[ExecutionMode, str] = ExecutionMode.BATCHED,
                threads: int = 1) -> np.ndarray:
        """原始窗口 -> 反归一化后的预测 [S, n]（float64）"""
        y_norm = self.run_normalized(self.prepare(x), mode, threads)
        return self.norm_stats.denormalize_y(y_norm.astype(np.float64))

    def compare_modes(self, x: np.ndarray) -> Dict[str, float]:
        """Batched 与 Serialized 的逐输出最大绝对差"""
        x_norm = self.prepare(x)
        batched = self.session.run({INPUT_NAME: Tensor(x_norm, FLOAT32)}, ExecutionMode.BATCHED)
        serialized = self.session.run({INPUT_NAME: Tensor(x_norm, FLOAT32)}, ExecutionMode.SERIALIZED)
        divergence = {}
        for name in self.model.outputs:
            a = batched[name].numpy().astype(np.float64)
            b = serialized[name].numpy().astype(np.float64)
            divergence[name] = float(np.max(np.abs(a - b))) if a.size else 0.0
        logger.info("模式一致性检查完成", samples=len(x), **divergence)
        return divergence
