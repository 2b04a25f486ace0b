"""
评估指标与评估报告

accuracy_pct = (1 − sqrt(mean(((y − ŷ) / Cap)²))) × 100
error_pct    = 100 − accuracy_pct，即 100 × 按容量归一化的 RMSE

两个值都输出；验收和对比使用 error_pct。
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from errors import DataError, ShapeMismatchError, UndefinedMetricError
from services.export_service import format_table


def capacity_metric(y: Sequence[float], y_hat: Sequence[float], capacity: float) -> Tuple[float, float]:
    """返回 (accuracy_pct, error_pct)"""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    y_hat = np.asarray(y_hat, dtype=np.float64).reshape(-1)
    if y.shape != y_hat.shape:
        raise ShapeMismatchError("capacity_metric", y.shape, y_hat.shape)
    if len(y) == 0:
        raise UndefinedMetricError("样本数为 0，指标无定义")
    if not capacity > 0:
        raise DataError(f"容量必须 > 0，实际 {capacity}")
    residual = (y - y_hat) / capacity
    rms = float(np.sqrt(np.mean(residual * residual)))
    accuracy_pct = (1.0 - rms) * 100.0
    error_pct = 100.0 - accuracy_pct
    return accuracy_pct, error_pct


class StationScore(BaseModel):
    station_id: str
    capacity_kw: float
    data_length: int
    accuracy_pct: float
    error_pct: float = Field(..., ge=0)


class EvalReport(BaseModel):
    """测试集评估报告，时间只统计推理本身"""
    arch: str
    mode: str
    threads: int = 1
    n_samples: int
    inference_seconds: float
    samples_per_sec: float
    peak_memory_bytes: int
    mean_cpu_percent: float = 0.0
    stations: List[StationScore]

    @property
    def mean_error_pct(self) -> float:
        return float(np.mean([s.error_pct for s in self.stations]))

    def to_table(self) -> str:
        rows = [
            (s.station_id, s.data_length, f"{self.inference_seconds:.3f}", f"{s.error_pct:.2f}%")
            for s in self.stations
        ]
        return format_table(["PV ID", "Data Length", "Time (sec)", "MAPE"], rows)


def score_stations(y: np.ndarray, y_hat: np.ndarray, station_ids: Sequence[str],
                   capacities: Sequence[float]) -> List[StationScore]:
    """逐站点计算指标，y / y_hat: [N, n]"""
    scores = []
    for i, (sid, capacity) in enumerate(zip(station_ids, capacities)):
        accuracy, error = capacity_metric(y[:, i], y_hat[:, i], capacity)
        scores.append(StationScore(
            station_id=sid,
            capacity_kw=float(capacity),
            data_length=int(len(y)),
            accuracy_pct=accuracy,
            error_pct=error,
        ))
    return scores


def compare_reports(left: Dict[str, Any], right: Dict[str, Any],
                    labels: Optional[Tuple[str, str]] = None) -> Dict[str, Any]:
    """对比两份评估报告的逐站点 error_pct"""
    labels = labels or ("left", "right")
    if labels[0] == labels[1]:
        labels = (f"{labels[0]}#1", f"{labels[1]}#2")
    right_scores = {s["station_id"]: s for s in right.get("stations", [])}
    rows = []
    for score in left.get("stations", []):
        other = right_scores.get(score["station_id"])
        if other is None:
            continue
        diff = abs(score["error_pct"] - other["error_pct"])
        rows.append({
            "station_id": score["station_id"],
            labels[0]: score["error_pct"],
            labels[1]: other["error_pct"],
            "abs_diff": diff,
            "identical": score["error_pct"] == other["error_pct"],
        })
    if not rows:
        raise DataError("两份报告没有共同的站点")
    return {"labels": list(labels), "stations": rows,
            "identical": all(row["identical"] for row in rows)}


def comparison_table(comparison: Dict[str, Any]) -> str:
    left, right = comparison["labels"]
    rows = [
        (r["station_id"], f"{r[left]:.4f}%", f"{r[right]:.4f}%", f"{r['abs_diff']:.2e}",
         "yes" if r["identical"] else "no")
        for r in comparison["stations"]
    ]
    return format_table(["PV ID", left, right, "|diff|", "identical"], rows)
