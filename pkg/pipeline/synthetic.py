"""
合成光伏功率数据生成器

每个站点的功率 = 容量 × 晴空日变化曲线 × 季节因子 × 天气因子 + 截断噪声。
天气因子由 AR(1) 潜变量经 sigmoid 映射得到，共享天气时各站点的潜变量
混入同一条公共序列，从而在空间上相关。
"""

from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from errors import DataError
from services.log_manager import get_logger

from .series import SAMPLES_PER_DAY, STEP, StationSeries

logger = get_logger(__name__)

DEFAULT_CAPACITIES_KW = (5.0, 8.0, 10.0)
DEFAULT_DAYS = 150
DEFAULT_START = "2024-01-01"

LATITUDE_DEG = 30.0
PANEL_DERATE = 0.9
AR_PHI = 0.995
SHARED_WEIGHT = 0.8
NOISE_STD = 0.02
NOISE_CLIP = 3.0


def solar_elevation_sine(timestamps: pd.DatetimeIndex, latitude_deg: float = LATITUDE_DEG) -> np.ndarray:
    """太阳高度角正弦（时间戳按当地太阳时处理）"""
    doy = timestamps.dayofyear.to_numpy(dtype=np.float64)
    hours = timestamps.hour.to_numpy(dtype=np.float64) + timestamps.minute.to_numpy(dtype=np.float64) / 60.0
    declination = np.deg2rad(23.44) * np.sin(2.0 * np.pi * (284.0 + doy) / 365.0)
    hour_angle = np.deg2rad(15.0 * (hours - 12.0))
    lat = np.deg2rad(latitude_deg)
    return np.sin(lat) * np.sin(declination) + np.cos(lat) * np.cos(declination) * np.cos(hour_angle)


def clear_sky_profile(timestamps: pd.DatetimeIndex, latitude_deg: float = LATITUDE_DEG) -> np.ndarray:
    """晴空曲线，夜间（高度角 ≤ 0）严格为 0"""
    sin_elev = solar_elevation_sine(timestamps, latitude_deg)
    return np.where(sin_elev > 0, np.power(np.clip(sin_elev, 0.0, None), 1.2), 0.0)


def seasonal_factor(timestamps: pd.DatetimeIndex) -> np.ndarray:
    doy = timestamps.dayofyear.to_numpy(dtype=np.float64)
    return 0.92 + 0.08 * np.cos(2.0 * np.pi * (doy - 80.0) / 365.0)


def _ar1_paths(rng: np.random.Generator, length: int, count: int, phi: float) -> np.ndarray:
    """count 条平稳 AR(1) 序列，边缘分布为 N(0, 1)"""
    shocks = rng.standard_normal((length, count))
    paths = np.empty((length, count))
    paths[0] = shocks[0]
    innovation = np.sqrt(1.0 - phi * phi)
    for t in range(1, length):
        paths[t] = phi * paths[t - 1] + innovation * shocks[t]
    return paths


def weather_factors(rng: np.random.Generator, length: int, n_stations: int,
                    shared_weather: bool = True) -> np.ndarray:
    """[T, n] 的天气乘数，取值在 (0.3, 1.0)"""
    shared = _ar1_paths(rng, length, 1, AR_PHI)
    own = _ar1_paths(rng, length, n_stations, AR_PHI)
    if shared_weather:
        latent = np.sqrt(SHARED_WEIGHT) * shared + np.sqrt(1.0 - SHARED_WEIGHT) * own
    else:
        latent = own
    return 0.3 + 0.7 / (1.0 + np.exp(-(1.5 * latent + 1.0)))


def generate_synthetic(n_stations: int = 3, days: int = DEFAULT_DAYS,
                       capacities: Optional[Sequence[float]] = None, seed: int = 42,
                       shared_weather: bool = True, start: str = DEFAULT_START,
                       latitude_deg: float = LATITUDE_DEG) -> List[StationSeries]:
    """生成 n_stations 条 15 分钟分辨率的功率序列，同一 seed 结果逐位一致"""
    if days < 2:
        raise DataError(f"days 必须 ≥ 2，实际 {days}")
    if n_stations < 1:
        raise DataError(f"n_stations 必须 ≥ 1，实际 {n_stations}")
    if capacities is None:
        capacities = [DEFAULT_CAPACITIES_KW[i % len(DEFAULT_CAPACITIES_KW)] for i in range(n_stations)]
    capacities = [float(c) for c in capacities]
    if len(capacities) != n_stations:
        raise DataError(f"容量个数 {len(capacities)} 与站点数 {n_stations} 不一致")

    length = days * SAMPLES_PER_DAY
    timestamps = pd.date_range(start=start, periods=length, freq=STEP)
    rng = np.random.default_rng(seed)

    clear = clear_sky_profile(timestamps, latitude_deg)
    daylight = clear > 0
    season = seasonal_factor(timestamps)
    weather = weather_factors(rng, length, n_stations, shared_weather)
    noise = np.clip(rng.normal(0.0, NOISE_STD, size=(length, n_stations)), -NOISE_CLIP * NOISE_STD,
                    NOISE_CLIP * NOISE_STD)

    series = []
    for i, capacity in enumerate(capacities):
        relative = PANEL_DERATE * clear * season * weather[:, i] + noise[:, i]
        power = np.where(daylight, np.clip(relative, 0.0, 1.0) * capacity, 0.0)
        series.append(StationSeries(
            station_id=f"station_{i + 1}",
            capacity_kw=capacity,
            timestamps=timestamps,
            power=power,
        ))

    logger.info("合成数据已生成", n_stations=n_stations, days=days, seed=seed,
                shared_weather=shared_weather)
    return series
