"""
计算图中间表示模块
可序列化的模型格式、执行器和自定义算子注册表
"""

from .base import AttributeSpec, FunctionKernel, OpKernel, OpSchema
from .model_graph import (
    IR_VERSION,
    GraphNode,
    ModelGraph,
    ValueInfo,
    Violation,
    UndefinedInput,
    NotTopologicallyOrdered,
    DuplicateOutput,
    UndefinedGraphOutput,
    EmptyOpType,
    NonFloat32Initializer,
    InvalidAttribute,
    validate,
)
from .registry import OperatorRegistry, create_registry, register_op
from .serializer import deserialize, inspect_model, load_model, save_model, serialize
from .executor import ExecutionMode, InferenceSession, execute

__all__ = [
    "AttributeSpec",
    "FunctionKernel",
    "OpKernel",
    "OpSchema",
    "IR_VERSION",
    "GraphNode",
    "ModelGraph",
    "ValueInfo",
    "Violation",
    "UndefinedInput",
    "NotTopologicallyOrdered",
    "DuplicateOutput",
    "UndefinedGraphOutput",
    "EmptyOpType",
    "NonFloat32Initializer",
    "InvalidAttribute",
    "validate",
    "OperatorRegistry",
    "create_registry",
    "register_op",
    "serialize",
    "deserialize",
    "save_model",
    "load_model",
    "inspect_model",
    "ExecutionMode",
    "InferenceSession",
    "execute",
]
