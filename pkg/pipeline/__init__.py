"""
数据流水线模块
合成数据、CSV 读写、窗口化、评估指标和测试集评估
"""

from .series import SAMPLES_PER_DAY, STEP, StationSeries
from .synthetic import DEFAULT_CAPACITIES_KW, DEFAULT_DAYS, clear_sky_profile, generate_synthetic
from .ingest import GapPolicy, ingest_csv, load_metadata, metadata_path_for, write_csv
from .windowing import ForecastDataset, window
from .metrics import EvalReport, StationScore, compare_reports, comparison_table, capacity_metric, score_stations
from .evaluate import check_compatible, evaluate, prediction_rows

__all__ = [
    "SAMPLES_PER_DAY",
    "STEP",
    "StationSeries",
    "DEFAULT_CAPACITIES_KW",
    "DEFAULT_DAYS",
    "clear_sky_profile",
    "generate_synthetic",
    "GapPolicy",
    "ingest_csv",
    "load_metadata",
    "metadata_path_for",
    "write_csv",
    "ForecastDataset",
    "window",
    "EvalReport",
    "StationScore",
    "compare_reports",
    "comparison_table",
    "capacity_metric",
    "score_stations",
    "check_compatible",
    "evaluate",
    "prediction_rows",
]
