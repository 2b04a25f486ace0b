"""
报告导出服务
支持导出评估报告、基准测试报告和逐样本预测
"""

import csv
import json
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from .log_manager import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]


def format_table(headers: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """按列对齐的文本表格"""
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = []
    for index, row in enumerate(cells):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if index == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


class ExportService:
    """报告导出服务"""

    def __init__(self, export_path: PathLike = "./exports"):
        self.export_path = Path(export_path)

    def _target(self, kind: str, suffix: str, out: Optional[PathLike]) -> Path:
        if out is not None:
            path = Path(out)
        else:
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            path = self.export_path / f"{kind}_{timestamp}.{suffix}"
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def export_report(self, kind: str, payload: Dict[str, Any], format: str = "json",
                      table: Optional[str] = None, out: Optional[PathLike] = None) -> str:
        """导出报告，json 带导出时间，txt 写对齐表格"""
        if format == "json":
            return self._export_report_json(kind, payload, out)
        elif format == "txt":
            return self._export_report_txt(kind, payload, table, out)
        else:
            raise ValueError(f"不支持的导出格式: {format}")

    def _export_report_json(self, kind: str, payload: Dict[str, Any], out: Optional[PathLike]) -> str:
        filepath = self._target(kind, "json", out)
        data = {
            "export_time": datetime.now().isoformat(),
            "kind": kind,
            "report": payload,
        }
        with open(filepath, 'w', encoding='utf-8') as f:
            json.dump(data, f, ensure_ascii=False, indent=2)
        logger.info("报告已导出", kind=kind, path=str(filepath))
        return str(filepath)

    def _export_report_txt(self, kind: str, payload: Dict[str, Any], table: Optional[str],
                           out: Optional[PathLike]) -> str:
        filepath = self._target(kind, "txt", out)
        with open(filepath, 'w', encoding='utf-8') as f:
            f.write(f"{kind} 报告\n")
            f.write(f"导出时间: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}\n")
            f.write("=" * 50 + "\n\n")
            if table is not None:
                f.write(table + "\n")
            else:
                for key, value in payload.items():
                    f.write(f"{key}: {value}\n")
        logger.info("报告已导出", kind=kind, path=str(filepath))
        return str(filepath)

    def export_predictions(self, rows: List[Dict[str, Any]], out: Optional[PathLike] = None) -> str:
        """导出逐样本预测（timestamp, station_id, y, y_hat）为 CSV"""
        filepath = self._target("predictions", "csv", out)
        columns = ["timestamp", "station_id", "y", "y_hat"]
        with open(filepath, 'w', newline='', encoding='utf-8') as f:
            writer = csv.DictWriter(f, fieldnames=columns)
            writer.writeheader()
            for row in rows:
                writer.writerow({c: row[c] for c in columns})
        logger.info("预测已导出", rows=len(rows), path=str(filepath))
        return str(filepath)


def load_report(path: PathLike) -> Dict[str, Any]:
    """读取 export_report 写出的 json（或裸报告 json）"""
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    if isinstance(data, dict) and "report" in data and "kind" in data:
        return data["report"]
    return data
