"""
CSV 读写

格式: 表头 "timestamp,station_1,...,station_n"，时间戳为 ISO-8601，功率单位 kW。
容量放在旁路元数据 JSON 中: {station_id: {"capacity_kw": ...}}，
默认路径为 <csv 文件名>.meta.json。
"""

import json
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd

from errors import (
    DataError,
    GapError,
    MetadataError,
    NegativePowerError,
    NonMonotonicTimestampError,
    PowerBoundsError,
    TimestampParseError,
)
from services.log_manager import get_logger

from .series import DEFAULT_TOLERANCE, STEP, StationSeries

logger = get_logger(__name__)

TIMESTAMP_COLUMN = "timestamp"
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%S"

PathLike = Union[str, Path]


class GapPolicy(str, Enum):
    REJECT = "reject"
    FORWARD_FILL = "ffill"


def metadata_path_for(csv_path: PathLike) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(f"{csv_path.stem}.meta.json")


def load_metadata(path: PathLike) -> Dict[str, float]:
    """读取容量元数据，返回 station_id -> capacity_kw"""
    path = Path(path)
    if not path.exists():
        raise MetadataError(f"元数据文件不存在: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            raw = json.load(f)
        return {str(sid): float(entry["capacity_kw"]) for sid, entry in raw.items()}
    except (json.JSONDecodeError, KeyError, TypeError, ValueError, AttributeError) as e:
        raise MetadataError(f"元数据文件格式错误 {path}: {e}") from e


def _parse_timestamps(column: pd.Series) -> pd.DatetimeIndex:
    parsed = pd.to_datetime(column, format="ISO8601", errors="coerce")
    bad = parsed.isna()
    if bad.any():
        i = int(np.argmax(bad.to_numpy()))
        # 行号按文件计，表头为第 1 行
        raise TimestampParseError(f"第 {i + 2} 行时间戳无法按 ISO-8601 解析: {column.iloc[i]!r}")
    index = pd.DatetimeIndex(parsed)
    if index.tz is not None:
        index = index.tz_convert(None)
    return index


def _check_monotonic(timestamps: pd.DatetimeIndex):
    if len(timestamps) < 2:
        return
    steps = np.diff(timestamps.asi8)
    if np.any(steps <= 0):
        i = int(np.argmax(steps <= 0)) + 1
        raise NonMonotonicTimestampError(i + 2, timestamps[i].isoformat())


def _fill_gaps(timestamps: pd.DatetimeIndex, power: pd.DataFrame,
               gap_policy: GapPolicy) -> tuple:
    """检查 15 分钟网格上的缺口，按策略拒绝或前向填充"""
    offsets = (timestamps - timestamps[0]) % STEP
    if np.any(offsets != pd.Timedelta(0)):
        i = int(np.argmax(offsets != pd.Timedelta(0)))
        raise GapError(f"时间戳 {timestamps[i].isoformat()} 不在 15 分钟网格上")

    grid = pd.date_range(timestamps[0], timestamps[-1], freq=STEP)
    frame = power.set_index(timestamps).reindex(grid)
    missing = frame.isna()
    if not missing.to_numpy().any():
        return grid, frame, np.zeros(frame.shape, dtype=bool)

    if gap_policy is GapPolicy.REJECT:
        row = int(np.argmax(missing.any(axis=1).to_numpy()))
        raise GapError(f"数据在 {grid[row].isoformat()} 处缺失（gap_policy=reject）")

    if missing.iloc[0].any():
        raise GapError(f"首行 {grid[0].isoformat()} 缺失，无法前向填充")
    logger.warning("前向填充缺失点", missing=int(missing.to_numpy().sum()))
    return grid, frame.ffill(), missing.to_numpy()


def ingest_csv(path: PathLike, metadata_path: Optional[PathLike] = None,
               gap_policy: Union[str, GapPolicy] = GapPolicy.REJECT,
               tolerance: float = DEFAULT_TOLERANCE) -> List[StationSeries]:
    """读取并校验 CSV，返回各站点的序列"""
    path = Path(path)
    gap_policy = GapPolicy(gap_policy)
    if not path.exists():
        raise DataError(f"数据文件不存在: {path}")
    try:
        df = pd.read_csv(path, dtype={TIMESTAMP_COLUMN: str}, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataError(f"无法解析 CSV {path}: {e}") from e

    if len(df.columns) < 2 or df.columns[0] != TIMESTAMP_COLUMN:
        raise DataError(f"CSV 表头应为 'timestamp,station_1,...'，实际 {','.join(df.columns)}")
    if df.empty:
        raise DataError(f"CSV 没有数据行: {path}")

    timestamps = _parse_timestamps(df[TIMESTAMP_COLUMN])
    _check_monotonic(timestamps)

    station_ids = [str(c) for c in df.columns[1:]]
    power = df[station_ids].apply(pd.to_numeric, errors="coerce")

    capacities = load_metadata(metadata_path or metadata_path_for(path))
    unknown = [sid for sid in station_ids if sid not in capacities]
    if unknown:
        raise MetadataError(f"元数据缺少站点容量: {', '.join(unknown)}")

    # 负值和越界在填充之前检查，错误信息指向原始时间戳
    for sid in station_ids:
        values = power[sid].to_numpy()
        negative = values < 0
        if negative.any():
            i = int(np.argmax(negative))
            raise NegativePowerError(
                f"站点 {sid} 在 {timestamps[i].isoformat()} 的功率为负: {values[i]}"
            )
        limit = capacities[sid] * (1.0 + tolerance)
        over = values > limit
        if over.any():
            i = int(np.argmax(over))
            raise PowerBoundsError(sid, timestamps[i].isoformat(), float(values[i]), capacities[sid])

    grid, frame, imputed = _fill_gaps(timestamps, power, gap_policy)
    series = [
        StationSeries(
            station_id=sid,
            capacity_kw=capacities[sid],
            timestamps=grid,
            power=frame[sid].to_numpy(dtype=np.float64),
            imputed=imputed[:, j],
            tolerance=tolerance,
        )
        for j, sid in enumerate(station_ids)
    ]
    logger.info("CSV 已读取", path=str(path), stations=len(series), rows=len(grid))
    return series


def write_csv(series: List[StationSeries], path: PathLike,
              metadata_path: Optional[PathLike] = None) -> Path:
    """写出 ingest_csv 可读的 CSV 和元数据，返回元数据路径"""
    if not series:
        raise DataError("没有可写出的站点序列")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    timestamps = series[0].timestamps
    for s in series[1:]:
        if not s.timestamps.equals(timestamps):
            raise DataError(f"站点 {s.station_id} 的时间网格与 {series[0].station_id} 不一致")

    frame = pd.DataFrame({TIMESTAMP_COLUMN: timestamps.strftime(TIMESTAMP_FORMAT)})
    for s in series:
        frame[s.station_id] = s.power
    # 默认浮点格式为最短 repr，读回后逐位一致
    frame.to_csv(path, index=False)

    metadata_path = Path(metadata_path) if metadata_path else metadata_path_for(path)
    with open(metadata_path, 'w', encoding='utf-8') as f:
        json.dump({s.station_id: {"capacity_kw": s.capacity_kw} for s in series}, f,
                  ensure_ascii=False, indent=2)
    return metadata_path
