"""
GNN 自定义算子
MyGcnOp:    σ(A_hat · H · W)，A_hat 作为初始化张量预先计算
SageMeanOp: σ(CONCAT(h_v, mean_{u∈N(v)} h_u) · W)
"""

from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from errors import AggregationError, ShapeMismatchError
from graph_ir.base import ATTR_INTS, ATTR_STRING, AttributeSpec, OpKernel, OpSchema
from graph_ir.registry import OperatorRegistry
from tensor_core import Tensor, concat_cols, matmul, relu
from .topology import NeighborSet

ACTIVATION_RELU = "relu"
ACTIVATION_NONE = "none"
ACTIVATIONS = (ACTIVATION_RELU, ACTIVATION_NONE)

GCN_OP_TYPE = "MyGcnOp"
SAGE_OP_TYPE = "SageMeanOp"


def _activate(x: Tensor, activation: Optional[str]) -> Tensor:
    if activation in (None, ACTIVATION_NONE):
        return x
    if activation == ACTIVATION_RELU:
        return relu(x)
    raise ValueError(f"不支持的激活函数: {activation}")


def gcn_layer(a_hat: Tensor, h: Tensor, w: Tensor, activation: Optional[str] = ACTIVATION_RELU,
              layer: str = "gcn") -> Tensor:
    """H' = σ((A_hat · H) · W)，H 可带前置批量维"""
    n = a_hat.shape[0]
    if a_hat.rank != 2 or a_hat.shape[1] != n or h.rank not in (2, 3) or h.shape[-2] != n:
        raise ShapeMismatchError(f"{layer}: A_hat·H", a_hat.shape, h.shape)
    if w.rank != 2 or h.shape[-1] != w.shape[0]:
        raise ShapeMismatchError(f"{layer}: H·W", h.shape, w.shape)
    return _activate(matmul(matmul(a_hat, h), w), activation)


def mean_aggregate(h: Tensor, neighbors: NeighborSet) -> Tensor:
    """邻居均值：按排好序的邻居顺序逐行累加后除以邻居数"""
    if h.rank not in (2, 3) or h.shape[-2] != neighbors.n_nodes:
        raise ShapeMismatchError("mean_aggregate", h.shape, detail=f"节点数应为 {neighbors.n_nodes}")
    array = h.numpy()
    out = np.empty_like(array)
    for v, nbrs in enumerate(neighbors.lists):
        if not nbrs:
            raise AggregationError(v)
        acc = array[..., nbrs[0], :].copy()
        for u in nbrs[1:]:
            acc += array[..., u, :]
        out[..., v, :] = acc / array.dtype.type(len(nbrs))
    return Tensor.wrap(out, "mean_aggregate")


def sage_round(h: Tensor, w: Tensor, neighbors: NeighborSet,
               activation: Optional[str] = ACTIVATION_RELU, layer: str = "sage") -> Tensor:
    """一轮 GraphSAGE 均值聚合 + 更新"""
    if w.rank != 2 or w.shape[0] != 2 * h.shape[-1]:
        raise ShapeMismatchError(f"{layer}: CONCAT·W", h.shape, w.shape,
                                 detail="W 的行数应为 2×特征维")
    aggregated = mean_aggregate(h, neighbors)
    return _activate(matmul(concat_cols(h, aggregated), w), activation)


class GcnOpKernel(OpKernel):
    """MyGcnOp 后端内核，输入 (H, A_hat, W)"""

    schema = OpSchema(
        GCN_OP_TYPE,
        inputs=("H", "A_hat", "W"),
        attributes=(AttributeSpec("activation", ATTR_STRING, choices=ACTIVATIONS),),
    )

    def evaluate(self, inputs: List[Tensor], attributes: Dict[str, Any]) -> List[Tensor]:
        h, a_hat, w = inputs
        return [gcn_layer(a_hat, h, w, attributes.get("activation", ACTIVATION_RELU), GCN_OP_TYPE)]


@lru_cache(maxsize=64)
def _decode_neighbors(encoded: tuple) -> NeighborSet:
    return NeighborSet.from_csr(encoded)


class SageMeanOpKernel(OpKernel):
    """SageMeanOp 后端内核，输入 (H, W)，邻居表以 CSR 整数列表存放在属性中"""

    schema = OpSchema(
        SAGE_OP_TYPE,
        inputs=("H", "W"),
        attributes=(
            AttributeSpec("activation", ATTR_STRING, choices=ACTIVATIONS),
            AttributeSpec("neighbor_lists", ATTR_INTS, required=True),
        ),
    )

    def evaluate(self, inputs: List[Tensor], attributes: Dict[str, Any]) -> List[Tensor]:
        h, w = inputs
        neighbors = _decode_neighbors(tuple(attributes["neighbor_lists"]))
        return [sage_round(h, w, neighbors, attributes.get("activation", ACTIVATION_RELU), SAGE_OP_TYPE)]


def gnn_kernels() -> Sequence[OpKernel]:
    return (GcnOpKernel(), SageMeanOpKernel())


def register_gnn_ops(registry: OperatorRegistry) -> OperatorRegistry:
    """把 MyGcnOp 和 SageMeanOp 注册进注册表"""
    for kernel in gnn_kernels():
        registry.register_op(kernel)
    return registry
