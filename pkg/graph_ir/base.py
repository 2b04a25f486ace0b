"""
算子内核基础接口
定义算子模式（schema）和后端内核的标准接口
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

from tensor_core import Tensor

# 属性取值类型：int、float、int 列表、字符串
ATTR_INT = "int"
ATTR_FLOAT = "float"
ATTR_INTS = "ints"
ATTR_STRING = "string"
ATTR_KINDS = (ATTR_INT, ATTR_FLOAT, ATTR_INTS, ATTR_STRING)


def attribute_kind(value: Any) -> Optional[str]:
    """推断属性值类型，不在允许集合内时返回 None"""
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return ATTR_INT
    if isinstance(value, float):
        return ATTR_FLOAT
    if isinstance(value, str):
        return ATTR_STRING
    if isinstance(value, (list, tuple)) and all(
        isinstance(v, int) and not isinstance(v, bool) for v in value
    ):
        return ATTR_INTS
    return None


@dataclass(frozen=True)
class AttributeSpec:
    """属性声明"""
    name: str
    kind: str
    required: bool = False
    choices: Sequence[str] = ()


@dataclass(frozen=True)
class OpSchema:
    """算子模式：输入、输出和属性的声明"""
    op_type: str
    inputs: Sequence[str]
    outputs: Sequence[str] = ("Y",)
    attributes: Sequence[AttributeSpec] = ()
    min_inputs: Optional[int] = None
    max_inputs: Optional[int] = None

    @property
    def arity(self) -> tuple:
        lo = len(self.inputs) if self.min_inputs is None else self.min_inputs
        hi = len(self.inputs) if self.max_inputs is None else self.max_inputs
        return lo, hi

    def check_node(self, inputs: Sequence[str], outputs: Sequence[str],
                   attributes: Dict[str, Any]) -> List[str]:
        """按模式检查节点，返回问题描述列表"""
        problems = []
        lo, hi = self.arity
        if not lo <= len(inputs) <= hi:
            problems.append(f"输入个数 {len(inputs)} 不在 [{lo}, {hi}] 内")
        if len(outputs) != len(self.outputs):
            problems.append(f"输出个数 {len(outputs)} != {len(self.outputs)}")
        declared = {spec.name: spec for spec in self.attributes}
        for name, value in attributes.items():
            spec = declared.get(name)
            if spec is None:
                problems.append(f"未声明的属性 '{name}'")
                continue
            if attribute_kind(value) != spec.kind:
                problems.append(f"属性 '{name}' 类型应为 {spec.kind}")
            elif spec.choices and value not in spec.choices:
                problems.append(f"属性 '{name}' 取值 {value!r} 不在 {list(spec.choices)} 中")
        for spec in self.attributes:
            if spec.required and spec.name not in attributes:
                problems.append(f"缺少必需属性 '{spec.name}'")
        return problems


class OpKernel(ABC):
    """后端内核基础接口

    evaluate 必须是确定性的纯函数：相同输入得到逐位相同的输出。
    """

    schema: OpSchema

    @property
    def op_type(self) -> str:
        return self.schema.op_type

    @abstractmethod
    def evaluate(self, inputs: List[Tensor], attributes: Dict[str, Any]) -> List[Tensor]:
        """执行算子"""
        pass


@dataclass
class FunctionKernel(OpKernel):
    """用普通函数实现的内核"""
    schema: OpSchema
    fn: Callable[[List[Tensor], Dict[str, Any]], List[Tensor]] = field(repr=False)

    def evaluate(self, inputs: List[Tensor], attributes: Dict[str, Any]) -> List[Tensor]:
        return self.fn(inputs, attributes)
