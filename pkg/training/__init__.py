"""
训练模块
两种架构的解析梯度、优化器和离线训练循环
"""

from .config import OptimizerKind, TrainConfig
from .networks import (
    ForwardCache,
    GradientSet,
    backward,
    forward,
    forward_loss,
    glorot_uniform,
    graph_matrix_for,
    init_params,
    predict,
)
from .optimizers import SGD, Adam, Optimizer, create_optimizer
from .trainer import compute_norm_stats, evaluate_loss, fit, fit_split

__all__ = [
    "OptimizerKind",
    "TrainConfig",
    "ForwardCache",
    "GradientSet",
    "backward",
    "forward",
    "forward_loss",
    "glorot_uniform",
    "graph_matrix_for",
    "init_params",
    "predict",
    "SGD",
    "Adam",
    "Optimizer",
    "create_optimizer",
    "compute_norm_stats",
    "evaluate_loss",
    "fit",
    "fit_split",
]
