"""
站点功率时间序列
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from errors import DataError, GapError, NegativePowerError, PowerBoundsError

STEP = pd.Timedelta(minutes=15)
SAMPLES_PER_DAY = 96
DEFAULT_TOLERANCE = 0.05


@dataclass
class StationSeries:
    """单个光伏站点的 15 分钟功率序列（kW）

    imputed 标记由前向填充补上的点；窗口化时会跳过这些点。
    """
    station_id: str
    capacity_kw: float
    timestamps: pd.DatetimeIndex
    power: np.ndarray
    imputed: Optional[np.ndarray] = None
    tolerance: float = field(default=DEFAULT_TOLERANCE, repr=False)

    def __post_init__(self):
        self.timestamps = pd.DatetimeIndex(self.timestamps)
        self.power = np.asarray(self.power, dtype=np.float64)
        if self.imputed is None:
            self.imputed = np.zeros(len(self.power), dtype=bool)
        self.imputed = np.asarray(self.imputed, dtype=bool)

        if self.capacity_kw <= 0:
            raise DataError(f"站点 {self.station_id} 的容量必须 > 0")
        if len(self.timestamps) != len(self.power) or len(self.imputed) != len(self.power):
            raise DataError(f"站点 {self.station_id} 的时间戳与功率长度不一致")
        if len(self.timestamps) > 1:
            steps = np.diff(self.timestamps.asi8)
            if np.any(steps != STEP.value):
                bad = int(np.argmax(steps != STEP.value)) + 1
                raise GapError(
                    f"站点 {self.station_id} 在 {self.timestamps[bad].isoformat()} 处间隔不是 15 分钟"
                )
        if np.any(self.power < 0):
            i = int(np.argmax(self.power < 0))
            raise NegativePowerError(
                f"站点 {self.station_id} 在 {self.timestamps[i].isoformat()} 的功率为负: {self.power[i]}"
            )
        limit = self.capacity_kw * (1.0 + self.tolerance)
        if np.any(self.power > limit):
            i = int(np.argmax(self.power > limit))
            raise PowerBoundsError(self.station_id, self.timestamps[i].isoformat(),
                                   float(self.power[i]), self.capacity_kw)

    def __len__(self) -> int:
        return len(self.power)
