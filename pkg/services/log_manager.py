#!/usr/bin/env python3
"""
日志管理模块
提供统一的日志记录、训练报告写入功能
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import structlog

_LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
_DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


class LogManager:
    """日志管理器"""

    def __init__(self, log_dir: str = "./logs", log_level: str = "INFO",
                 log_to_file: bool = True, log_buffer: Optional[List[str]] = None):
        self.log_dir = Path(log_dir)
        self.log_level = getattr(logging, log_level.upper())
        self.log_to_file = log_to_file
        self.log_buffer = log_buffer  # 可选的内存日志缓冲区，保留最近 1000 条

        if self.log_to_file:
            self.log_dir.mkdir(parents=True, exist_ok=True)

        self._setup_loggers()
        self._configure_structlog()

    def _setup_loggers(self):
        """设置日志记录器"""
        self.main_logger = logging.getLogger('edge_gnn')
        self.main_logger.setLevel(self.log_level)
        self.main_logger.propagate = False
        for handler in list(self.main_logger.handlers):
            self.main_logger.removeHandler(handler)

        formatter = logging.Formatter(_LOG_FORMAT, datefmt=_DATE_FORMAT)

        # 控制台处理器（stderr，stdout 留给 --json 输出）
        console_handler = logging.StreamHandler()
        console_handler.setLevel(self.log_level)
        console_handler.setFormatter(formatter)
        self.main_logger.addHandler(console_handler)

        # 文件处理器
        if self.log_to_file:
            file_handler = logging.FileHandler(self.log_dir / "main.log", encoding='utf-8')
            file_handler.setLevel(self.log_level)
            file_handler.setFormatter(formatter)
            self.main_logger.addHandler(file_handler)

        if self.log_buffer is not None:
            self.main_logger.addHandler(_BufferHandler(self.log_buffer, formatter))

    def _configure_structlog(self):
        """structlog 接到标准 logging 上，事件以 key=value 形式输出"""
        structlog.configure(
            processors=[
                structlog.stdlib.filter_by_level,
                structlog.stdlib.add_log_level,
                structlog.processors.format_exc_info,
                structlog.processors.KeyValueRenderer(key_order=["event"], drop_missing=True),
            ],
            logger_factory=structlog.stdlib.LoggerFactory(),
            wrapper_class=structlog.stdlib.BoundLogger,
            cache_logger_on_first_use=False,
        )

    def log_training_epoch(self, report: Dict[str, Any], report_path: Optional[Path] = None):
        """记录一轮训练，并追加到 JSON lines 训练报告"""
        self.main_logger.debug(
            f"epoch={report['epoch']} train_loss={report['train_loss']:.6g} "
            f"val_loss={report['val_loss']:.6g} wall_ms={report['wall_ms']:.1f}"
        )
        if report_path is not None:
            report_path = Path(report_path)
            report_path.parent.mkdir(parents=True, exist_ok=True)
            with open(report_path, 'a', encoding='utf-8') as f:
                f.write(json.dumps(report, ensure_ascii=False) + "\n")


class _BufferHandler(logging.Handler):
    def __init__(self, buffer: List[str], formatter: logging.Formatter):
        super().__init__()
        self.buffer = buffer
        self.setFormatter(formatter)

    def emit(self, record: logging.LogRecord):
        self.buffer.append(self.format(record))
        if len(self.buffer) > 1000:
            self.buffer.pop(0)


# 全局日志管理器实例 - 延迟初始化
log_manager = None


def get_log_manager(**kwargs) -> LogManager:
    """获取日志管理器实例，传入参数时重新创建"""
    global log_manager
    if kwargs:
        log_manager = LogManager(**kwargs)
    elif log_manager is None:
        # 未经 CLI 配置（例如作为库导入或测试）时只输出到控制台
        log_manager = LogManager(log_to_file=False)
    return log_manager


def get_logger(name: str):
    """模块级结构化日志记录器，名称挂在 edge_gnn 下"""
    get_log_manager()
    return structlog.get_logger(f"edge_gnn.{name}")
