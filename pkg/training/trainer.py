"""
离线训练循环

单线程、按 seed 确定性执行：同一 seed 得到逐位一致的参数。
"""

import time
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from errors import ArchSpecError, EmptyDatasetError, NonFiniteError, TrainingDivergedError
from models.arch import ArchSpec, NormStats, TrainedModel
from pipeline.windowing import ForecastDataset
from services.log_manager import get_log_manager, get_logger

from .config import TrainConfig
from .networks import backward, forward, forward_loss, graph_matrix_for, init_params
from .optimizers import create_optimizer

logger = get_logger(__name__)


def compute_norm_stats(x_train: np.ndarray) -> NormStats:
    """每个站点在训练集输入窗口上的均值和标准差，标准差为 0 时尺度取 1"""
    if len(x_train) == 0:
        raise EmptyDatasetError("训练集为空，无法计算归一化参数")
    mean = x_train.mean(axis=(0, 2))
    std = x_train.std(axis=(0, 2))
    return NormStats(mean, np.where(std > 0, std, 1.0))


def _check_dataset(dataset: ForecastDataset, spec: ArchSpec, label: str):
    if (dataset.n_stations, dataset.k, dataset.h) != (spec.n_stations, spec.k, spec.h):
        raise ArchSpecError(
            f"{label}的 (n, k, h)=({dataset.n_stations}, {dataset.k}, {dataset.h}) "
            f"与架构 ({spec.n_stations}, {spec.k}, {spec.h}) 不一致"
        )


def _mean_loss(model: TrainedModel, x: np.ndarray, y: np.ndarray, g: np.ndarray) -> float:
    y_hat, _ = forward(model.spec, model.params, x, g)
    return float(np.mean((y_hat - y) ** 2))


def fit(dataset: ForecastDataset, spec: ArchSpec, config: Optional[TrainConfig] = None,
        report_path: Optional[Path] = None) -> TrainedModel:
    """按时间顺序切出训练/验证集后训练，返回验证损失最低时的参数"""
    config = config or TrainConfig()
    train, val, _ = dataset.split_chronological(config.train_fraction, config.val_fraction)
    return fit_split(train, val, spec, config, report_path)


def fit_split(train: ForecastDataset, val: ForecastDataset, spec: ArchSpec,
              config: Optional[TrainConfig] = None,
              report_path: Optional[Path] = None) -> TrainedModel:
    """在给定的训练集和验证集上训练

    验证集为空时以训练损失代替验证损失。
    """
    config = config or TrainConfig()
    _check_dataset(train, spec, "训练集")
    if len(train) == 0:
        raise EmptyDatasetError("训练集为空")
    _check_dataset(val, spec, "验证集")

    stats = compute_norm_stats(train.x)
    x_train, y_train = stats.normalize_x(train.x), stats.normalize_y(train.y)
    x_val, y_val = stats.normalize_x(val.x), stats.normalize_y(val.y)

    rng = np.random.default_rng(config.seed)
    model = TrainedModel(spec, init_params(spec, rng), stats, capacities=list(train.capacities))
    optimizer = create_optimizer(config)
    g = graph_matrix_for(spec)

    best_loss = np.inf
    best_params: Dict[str, np.ndarray] = {name: p.copy() for name, p in model.params.items()}
    best_epoch = 0
    stale_epochs = 0
    last_report: Optional[Dict[str, Any]] = None
    epochs_run = 0

    logger.info("开始训练", arch=spec.kind.value, samples=len(train), val_samples=len(val),
                epochs=config.epochs, batch_size=config.batch_size, optimizer=config.optimizer.value)

    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        order = rng.permutation(len(x_train))
        total = 0.0
        try:
            for start in range(0, len(order), config.batch_size):
                idx = order[start:start + config.batch_size]
                loss, cache = forward_loss(model, (x_train[idx], y_train[idx]), g)
                grads = backward(model, cache)
                optimizer.step(model.params, grads)
                model.version += 1
                total += loss * len(idx)
            train_loss = total / len(order)
            val_loss = _mean_loss(model, x_val, y_val, g) if len(x_val) else train_loss
        except NonFiniteError as e:
            raise TrainingDivergedError(f"第 {epoch} 轮训练发散: {e}", last_report) from e
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise TrainingDivergedError(f"第 {epoch} 轮损失为 NaN/Inf", last_report)

        report = {
            "epoch": epoch,
            "train_loss": train_loss,
            "val_loss": val_loss,
            "lr": config.learning_rate,
            "wall_ms": (time.perf_counter() - started) * 1000.0,
        }
        get_log_manager().log_training_epoch(report, report_path)
        last_report = report
        epochs_run = epoch

        if val_loss < best_loss:
            best_loss, best_epoch, stale_epochs = val_loss, epoch, 0
            best_params = {name: p.copy() for name, p in model.params.items()}
        else:
            stale_epochs += 1
            if config.patience is not None and stale_epochs >= config.patience:
                logger.info("验证损失不再下降，提前停止", epoch=epoch, best_epoch=best_epoch)
                break

    model.params = best_params
    model.version += 1
    model.provenance = {
        "optimizer": config.optimizer.value,
        "learning_rate": repr(config.learning_rate),
        "batch_size": str(config.batch_size),
        "seed": str(config.seed),
        "epochs_run": str(epochs_run),
        "best_epoch": str(best_epoch),
        "best_val_loss": repr(float(best_loss)),
        "init": "glorot_uniform",
    }
    logger.info("训练完成", best_epoch=best_epoch, best_val_loss=float(best_loss), epochs_run=epochs_run)
    return model


def evaluate_loss(model: TrainedModel, dataset: ForecastDataset) -> Tuple[float, int]:
    """模型自身归一化空间上的 MSE 和样本数"""
    if len(dataset) == 0:
        raise EmptyDatasetError("数据集为空")
    stats = model.norm_stats
    x, y = stats.normalize_x(dataset.x), stats.normalize_y(dataset.y)
    return _mean_loss(model, x, y, graph_matrix_for(model.spec)), len(dataset)
