"""
滑动窗口

样本 t 的输入 X[i, j] = P_i(t − j)，j = 0..k−1；目标 y[i] = P_i(t + h)。
"""

from dataclasses import dataclass, field
from typing import Iterator, List, Tuple

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view

from errors import AlignmentError, DataError
from tensor_core import FLOAT64, Tensor

from .series import StationSeries


@dataclass
class ForecastDataset:
    """窗口化后的样本集合

    x: [S, n, k]，y: [S, n]，anchors: 每个样本的锚点时间 t
    """
    x: np.ndarray
    y: np.ndarray
    anchors: pd.DatetimeIndex
    station_ids: List[str]
    capacities: List[float]
    k: int
    h: int
    targets: pd.DatetimeIndex = field(default=None)

    def __post_init__(self):
        n = len(self.station_ids)
        if self.x.shape[1:] != (n, self.k) or self.y.shape[1:] != (n,):
            raise DataError(f"样本形状不一致: x{list(self.x.shape)} y{list(self.y.shape)}")
        if not (len(self.x) == len(self.y) == len(self.anchors)):
            raise DataError("样本、目标与锚点个数不一致")
        if len(self.capacities) != n:
            raise DataError("容量个数与站点数不一致")
        if self.targets is None:
            self.targets = self.anchors + self.h * pd.Timedelta(minutes=15)

    def __len__(self) -> int:
        return len(self.x)

    @property
    def n_stations(self) -> int:
        return len(self.station_ids)

    def sample(self, index: int) -> Tuple[Tensor, Tensor]:
        """返回 (X[n×k], y[1×n])"""
        return Tensor(self.x[index]), Tensor(self.y[index][None, :], FLOAT64)

    def samples(self) -> Iterator[Tuple[Tensor, Tensor]]:
        for index in range(len(self)):
            yield self.sample(index)

    def subset(self, start: int, stop: int) -> "ForecastDataset":
        return ForecastDataset(
            x=self.x[start:stop],
            y=self.y[start:stop],
            anchors=self.anchors[start:stop],
            station_ids=list(self.station_ids),
            capacities=list(self.capacities),
            k=self.k,
            h=self.h,
            targets=self.targets[start:stop],
        )

    def head(self, count: int) -> "ForecastDataset":
        return self.subset(0, min(count, len(self)))

    def split_chronological(self, train_fraction: float = 0.70,
                            val_fraction: float = 0.15) -> Tuple["ForecastDataset", "ForecastDataset", "ForecastDataset"]:
        """按时间顺序切分训练/验证/测试集，不打乱"""
        if not (0 < train_fraction < 1 and 0 <= val_fraction < 1 and train_fraction + val_fraction < 1):
            raise DataError(f"切分比例不合法: train={train_fraction} val={val_fraction}")
        total = len(self)
        n_train = int(total * train_fraction)
        n_val = int(total * val_fraction)
        return (
            self.subset(0, n_train),
            self.subset(n_train, n_train + n_val),
            self.subset(n_train + n_val, total),
        )


def _check_alignment(series: List[StationSeries]) -> pd.DatetimeIndex:
    reference = series[0]
    grid = reference.timestamps
    for s in series[1:]:
        if s.timestamps.equals(grid):
            continue
        common = min(len(grid), len(s.timestamps))
        mismatch = np.flatnonzero(grid[:common] != s.timestamps[:common])
        if len(mismatch):
            i = int(mismatch[0])
            raise AlignmentError(
                f"站点 {s.station_id} 第 {i} 个时间戳 {s.timestamps[i].isoformat()} "
                f"与 {reference.station_id} 的 {grid[i].isoformat()} 不一致"
            )
        raise AlignmentError(
            f"站点 {s.station_id} 长度 {len(s.timestamps)} 与 {reference.station_id} 长度 {len(grid)} 不一致"
        )
    return grid


def window(series: List[StationSeries], k: int, h: int) -> ForecastDataset:
    """按锚点 t = k−1 .. T−1−h 生成样本，共 T − (k−1) − h 个（不足时为空）

    任何输入窗口或目标点落在填充值上的样本都会被跳过。
    """
    if not series:
        raise DataError("没有站点序列")
    if k < 1 or h < 1:
        raise DataError(f"k 和 h 必须 ≥ 1，实际 k={k} h={h}")
    grid = _check_alignment(series)
    n = len(series)
    length = len(grid)
    station_ids = [s.station_id for s in series]
    capacities = [s.capacity_kw for s in series]

    count = length - (k - 1) - h
    if count <= 0:
        return ForecastDataset(
            x=np.empty((0, n, k)), y=np.empty((0, n)), anchors=grid[:0],
            station_ids=station_ids, capacities=capacities, k=k, h=h,
        )

    power = np.stack([s.power for s in series])            # [n, T]
    imputed = np.stack([s.imputed for s in series]).any(axis=0)  # [T]

    views = sliding_window_view(power, k, axis=1)[:, :count, ::-1]  # [n, S, k]，列 j 对应 t − j
    x = np.ascontiguousarray(views.transpose(1, 0, 2))
    anchor_index = np.arange(k - 1, k - 1 + count)
    y = power[:, anchor_index + h].T.copy()

    keep = np.ones(count, dtype=bool)
    if imputed.any():
        touched = sliding_window_view(imputed, k)[:count].any(axis=1)
        keep = ~(touched | imputed[anchor_index + h])

    return ForecastDataset(
        x=x[keep],
        y=y[keep],
        anchors=grid[anchor_index[keep]],
        station_ids=station_ids,
        capacities=capacities,
        k=k,
        h=h,
        targets=grid[anchor_index[keep] + h],
    )
