"""
服务模块
日志、资源监控、报告导出、推理与基准测试服务

inference_service 和 bench_service 依赖模型包，需按模块路径导入。
"""

from .log_manager import LogManager, get_log_manager, get_logger
from .system_monitor import PeakMemorySampler, format_bytes
from .export_service import ExportService, format_table, load_report

__all__ = [
    "LogManager",
    "get_log_manager",
    "get_logger",
    "PeakMemorySampler",
    "format_bytes",
    "ExportService",
    "format_table",
    "load_report",
]
