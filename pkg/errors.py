"""
异常定义
所有模块共用的异常层级，exit_code 供命令行使用
"""

from typing import Any, Dict, List, Optional, Sequence


class EdgeGnnError(Exception):
    """基础异常"""

    exit_code = 1


class DataError(EdgeGnnError):
    """数据错误（CSV、窗口化、指标）"""

    exit_code = 3


class ModelError(EdgeGnnError):
    """模型/格式错误"""

    exit_code = 4


class ExecutionError(EdgeGnnError):
    """执行错误"""

    exit_code = 5


class ConfigError(EdgeGnnError):
    """配置文件或配置值不合法"""

    exit_code = 2


# ==================== tensor-core ====================

class ShapeMismatchError(ExecutionError):
    """形状不匹配"""

    def __init__(self, op: str, *shapes: Sequence[int], detail: str = ""):
        self.op = op
        self.shapes = [tuple(s) for s in shapes]
        shape_text = " vs ".join(str(list(s)) for s in self.shapes)
        message = f"{op}: 形状不匹配 {shape_text}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class EmptyAggregationError(ExecutionError):
    """对空集合做聚合"""


class NonFiniteError(ExecutionError):
    """出现 NaN/Inf"""

    def __init__(self, where: str):
        self.where = where
        super().__init__(f"{where}: 结果包含 NaN 或 Inf")


# ==================== graph-ir ====================

class ModelFormatError(ModelError):
    """.egir 文件格式错误"""


class BadMagicError(ModelFormatError):
    pass


class UnsupportedVersionError(ModelFormatError):
    pass


class TruncatedTensorError(ModelFormatError):
    pass


class ManifestInconsistencyError(ModelFormatError):
    pass


class InvalidModelError(ModelError):
    """模型图未通过校验"""

    def __init__(self, violations: List[Any]):
        self.violations = list(violations)
        details = "; ".join(str(v) for v in self.violations)
        super().__init__(f"模型图校验失败: {details}")


class OperatorConflictError(ModelError):
    """重复注册算子"""

    def __init__(self, op_type: str):
        self.op_type = op_type
        super().__init__(f"算子 '{op_type}' 已注册")


class RegistryFrozenError(ModelError):
    """注册表已冻结，不允许再注册"""


class UnknownOperatorError(ExecutionError):
    """注册表中找不到算子"""

    def __init__(self, op_types: Sequence[str]):
        self.op_types = sorted(set(op_types))
        super().__init__(f"未注册的算子: {', '.join(self.op_types)}")


class MissingFeedError(ExecutionError):
    def __init__(self, names: Sequence[str]):
        self.names = list(names)
        super().__init__(f"缺少输入: {', '.join(self.names)}")


class NodeExecutionError(ExecutionError):
    """节点执行失败，带节点名和算子类型"""

    def __init__(self, node_name: str, op_type: str, cause: Exception):
        self.node_name = node_name
        self.op_type = op_type
        self.cause = cause
        super().__init__(f"节点 {node_name} ({op_type}) 执行失败: {cause}")


# ==================== gnn-ops ====================

class TopologyError(ModelError):
    """邻接矩阵不合法"""


class AggregationError(ModelError):
    """邻居集合为空"""

    def __init__(self, node: int):
        self.node = node
        super().__init__(f"节点 {node} 没有邻居，无法做均值聚合")


# ==================== models / training ====================

class ArchSpecError(ModelError):
    """架构描述或参数形状不一致"""


class StaleCacheError(ExecutionError):
    """反向传播使用了过期的前向缓存"""


class TrainingDivergedError(ExecutionError):
    """训练发散"""

    def __init__(self, message: str, last_report: Optional[Dict[str, Any]] = None):
        self.last_report = last_report
        super().__init__(message)


# ==================== pipeline ====================

class AlignmentError(DataError):
    pass


class TimestampParseError(DataError):
    pass


class NonMonotonicTimestampError(DataError):
    def __init__(self, row: int, timestamp: str):
        self.row = row
        self.timestamp = timestamp
        super().__init__(f"第 {row} 行时间戳不递增: {timestamp}")


class NegativePowerError(DataError):
    pass


class PowerBoundsError(DataError):
    def __init__(self, station_id: str, timestamp: str, value: float, capacity: float):
        self.station_id = station_id
        self.timestamp = timestamp
        self.value = value
        self.capacity = capacity
        super().__init__(f"站点 {station_id} 在 {timestamp} 的功率 {value} 超过容量 {capacity}")


class GapError(DataError):
    pass


class MetadataError(DataError):
    pass


class UndefinedMetricError(DataError):
    pass


class EmptyDatasetError(DataError):
    pass
