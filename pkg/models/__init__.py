"""
模型模块
两种固定预测架构（GCN2、SAGE2）的描述、导出和检查点
"""

from .arch import (
    DEFAULT_H,
    DEFAULT_HIDDEN_DIM,
    DEFAULT_K,
    DEFAULT_N_STATIONS,
    ArchKind,
    ArchSpec,
    NormStats,
    TrainedModel,
    capacities_from_metadata,
    metadata_int,
    norm_stats_from_metadata,
)
from .builders import INPUT_NAME, LAYER_EXPORTS, OUTPUT_NAME, build_gcn2, build_model, build_sage2
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "DEFAULT_H",
    "DEFAULT_HIDDEN_DIM",
    "DEFAULT_K",
    "DEFAULT_N_STATIONS",
    "ArchKind",
    "ArchSpec",
    "NormStats",
    "TrainedModel",
    "capacities_from_metadata",
    "metadata_int",
    "norm_stats_from_metadata",
    "INPUT_NAME",
    "LAYER_EXPORTS",
    "OUTPUT_NAME",
    "build_gcn2",
    "build_model",
    "build_sage2",
    "load_checkpoint",
    "save_checkpoint",
]
