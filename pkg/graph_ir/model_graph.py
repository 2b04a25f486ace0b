"""
计算图中间表示
节点、初始化张量、命名输入输出组成的有向无环图，以及结构校验
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Set

from tensor_core import FLOAT32, Tensor
from .base import attribute_kind

IR_VERSION = 1


@dataclass(frozen=True)
class ValueInfo:
    """图输入声明

    shape 为单样本形状；batched 为 True 时实际输入带前置批量维 B。
    """
    name: str
    shape: Sequence[int]
    dtype: str = FLOAT32
    batched: bool = False

    def expected_shape(self, batch: Optional[int] = None) -> tuple:
        if self.batched:
            return (batch,) + tuple(self.shape)
        return tuple(self.shape)


@dataclass
class GraphNode:
    op_type: str
    inputs: List[str]
    outputs: List[str]
    attributes: Dict[str, Any] = field(default_factory=dict)
    name: str = ""

    def display_name(self, index: int) -> str:
        return self.name or f"{self.op_type}#{index}"


@dataclass
class ModelGraph:
    """可序列化的计算图"""
    inputs: List[ValueInfo]
    outputs: List[str]
    nodes: List[GraphNode] = field(default_factory=list)
    initializers: Dict[str, Tensor] = field(default_factory=dict)
    metadata: Dict[str, str] = field(default_factory=dict)
    version: int = IR_VERSION

    @property
    def input_names(self) -> List[str]:
        return [info.name for info in self.inputs]

    def op_types(self) -> List[str]:
        """图中出现的算子类型（按首次出现顺序）"""
        seen: List[str] = []
        for node in self.nodes:
            if node.op_type not in seen:
                seen.append(node.op_type)
        return seen

    def validate(self) -> List["Violation"]:
        return validate(self)


# ==================== 校验结果 ====================

@dataclass(frozen=True)
class Violation:
    """校验问题基类"""
    value: str
    node: str = ""

    def __str__(self) -> str:
        where = f" @ {self.node}" if self.node else ""
        return f"{type(self).__name__}({self.value!r}){where}"


class UndefinedInput(Violation):
    """节点输入既不是图输入、初始化张量，也不是前序节点输出"""


class NotTopologicallyOrdered(Violation):
    """节点使用了后续节点（或自身）才产生的值"""


class DuplicateOutput(Violation):
    """值名称被重复定义"""


class UndefinedGraphOutput(Violation):
    """图输出没有任何来源"""


class EmptyOpType(Violation):
    pass


class NonFloat32Initializer(Violation):
    pass


class InvalidAttribute(Violation):
    pass


def validate(model: ModelGraph) -> List[Violation]:
    """检查 ModelGraph 的所有不变量，返回问题列表（为空表示合法）"""
    violations: List[Violation] = []

    defined: Set[str] = set()
    for info in model.inputs:
        if info.name in defined:
            violations.append(DuplicateOutput(info.name, "<inputs>"))
        defined.add(info.name)
    for name, tensor in model.initializers.items():
        if name in defined:
            violations.append(DuplicateOutput(name, "<initializers>"))
        defined.add(name)
        if tensor.dtype != FLOAT32:
            violations.append(NonFloat32Initializer(name))

    produced_later: Dict[str, int] = {}
    for index, node in enumerate(model.nodes):
        for out in node.outputs:
            produced_later.setdefault(out, index)

    for index, node in enumerate(model.nodes):
        label = node.display_name(index)
        if not node.op_type:
            violations.append(EmptyOpType(str(index), label))
        for name in node.inputs:
            if name in defined:
                continue
            producer = produced_later.get(name)
            if producer is not None and producer >= index:
                violations.append(NotTopologicallyOrdered(name, label))
            else:
                violations.append(UndefinedInput(name, label))
        for name, value in node.attributes.items():
            if attribute_kind(value) is None:
                violations.append(InvalidAttribute(name, label))
        for out in node.outputs:
            if out in defined:
                violations.append(DuplicateOutput(out, label))
            defined.add(out)

    for name in model.outputs:
        if name not in defined:
            violations.append(UndefinedGraphOutput(name))

    return violations
