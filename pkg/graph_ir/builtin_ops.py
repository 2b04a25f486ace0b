"""
内置算子
MatMul, Add, AddBias, Relu, Concat, Reshape, RowMean, Flatten
"""

from typing import Any, Dict, List

from tensor_core import Tensor, ops
from .base import ATTR_INT, ATTR_INTS, AttributeSpec, FunctionKernel, OpKernel, OpSchema


def _matmul(inputs: List[Tensor], attributes: Dict[str, Any]) -> List[Tensor]:
    return [ops.matmul(inputs[0], inputs[1])]


def _add(inputs: List[Tensor], attributes: Dict[str, Any]) -> List[Tensor]:
    return [ops.add(inputs[0], inputs[1])]


def _add_bias(inputs: List[Tensor], attributes: Dict[str, Any]) -> List[Tensor]:
    return [ops.add_bias(inputs[0], inputs[1])]


def _relu(inputs: List[Tensor], attributes: Dict[str, Any]) -> List[Tensor]:
    return [ops.relu(inputs[0])]


def _concat(inputs: List[Tensor], attributes: Dict[str, Any]) -> List[Tensor]:
    # 只支持沿最后一维拼接
    result = inputs[0]
    for other in inputs[1:]:
        result = ops.concat_cols(result, other)
    return [result]


def _reshape(inputs: List[Tensor], attributes: Dict[str, Any]) -> List[Tensor]:
    return [ops.reshape(inputs[0], attributes["shape"])]


def _row_mean(inputs: List[Tensor], attributes: Dict[str, Any]) -> List[Tensor]:
    return [ops.row_mean(inputs[0])]


def _flatten(inputs: List[Tensor], attributes: Dict[str, Any]) -> List[Tensor]:
    return [ops.flatten(inputs[0], int(attributes.get("axis", 1)))]


def builtin_kernels() -> List[OpKernel]:
    """内置算子内核列表"""
    return [
        FunctionKernel(OpSchema("MatMul", ("A", "B")), _matmul),
        FunctionKernel(OpSchema("Add", ("A", "B")), _add),
        FunctionKernel(OpSchema("AddBias", ("X", "bias")), _add_bias),
        FunctionKernel(OpSchema("Relu", ("X",)), _relu),
        FunctionKernel(OpSchema("Concat", ("A", "B"), min_inputs=2, max_inputs=16), _concat),
        FunctionKernel(
            OpSchema("Reshape", ("X",), attributes=(AttributeSpec("shape", ATTR_INTS, required=True),)),
            _reshape,
        ),
        FunctionKernel(OpSchema("RowMean", ("X",)), _row_mean),
        FunctionKernel(
            OpSchema("Flatten", ("X",), attributes=(AttributeSpec("axis", ATTR_INT),)),
            _flatten,
        ),
    ]
