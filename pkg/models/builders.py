"""
模型导出：把两种架构降级为 ModelGraph

每种层通过 LAYER_EXPORTS 中的导出映射生成图节点；新增层类型时
注册一个导出映射和一个后端内核即可。
"""

from typing import Callable, Dict, List, Optional

import numpy as np

from errors import ArchSpecError, InvalidModelError
from gnn_ops import ACTIVATION_RELU, GCN_OP_TYPE, SAGE_OP_TYPE, NeighborSet
from graph_ir import GraphNode, ModelGraph, ValueInfo, validate
from tensor_core import FLOAT32, Tensor
from .arch import ArchKind, ArchSpec

INPUT_NAME = "X"
OUTPUT_NAME = "y_hat"


class GraphBuilder:
    """逐层累积节点和初始化张量"""

    def __init__(self, inputs: List[ValueInfo]):
        self.inputs = inputs
        self.nodes: List[GraphNode] = []
        self.initializers: Dict[str, Tensor] = {}

    def constant(self, name: str, value: np.ndarray) -> str:
        if name in self.initializers:
            raise ArchSpecError(f"初始化张量重名: {name}")
        self.initializers[name] = Tensor(value, FLOAT32)
        return name

    def node(self, op_type: str, inputs: List[str], output: str, name: str, **attributes) -> str:
        self.nodes.append(GraphNode(op_type, list(inputs), [output], dict(attributes), name))
        return output

    def finish(self, outputs: List[str], metadata: Optional[Dict[str, str]] = None) -> ModelGraph:
        return ModelGraph(
            inputs=self.inputs,
            outputs=outputs,
            nodes=self.nodes,
            initializers=self.initializers,
            metadata=dict(metadata or {}),
        )


# ==================== 导出映射 ====================

def export_gcn_layer(builder: GraphBuilder, x: str, name: str, weight: np.ndarray,
                     a_hat: str, activation: str = ACTIVATION_RELU) -> str:
    w = builder.constant(f"{name}.W", weight)
    return builder.node(GCN_OP_TYPE, [x, a_hat, w], f"{name}.out", name, activation=activation)


def export_sage_layer(builder: GraphBuilder, x: str, name: str, weight: np.ndarray,
                      neighbors: NeighborSet, activation: str = ACTIVATION_RELU) -> str:
    w = builder.constant(f"{name}.W", weight)
    return builder.node(SAGE_OP_TYPE, [x, w], f"{name}.out", name,
                        activation=activation, neighbor_lists=neighbors.to_csr())


def export_flatten(builder: GraphBuilder, x: str, name: str) -> str:
    return builder.node("Flatten", [x], f"{name}.out", name, axis=1)


def export_dense(builder: GraphBuilder, x: str, name: str, weight: np.ndarray,
                 bias: np.ndarray, output: Optional[str] = None) -> str:
    w = builder.constant(f"{name}.W", weight)
    b = builder.constant(f"{name}.b", bias)
    z = builder.node("MatMul", [x, w], f"{name}.z", f"{name}.matmul")
    return builder.node("AddBias", [z, b], output or f"{name}.out", f"{name}.bias")


LAYER_EXPORTS: Dict[str, Callable[..., str]] = {
    "gcn": export_gcn_layer,
    "sage": export_sage_layer,
    "flatten": export_flatten,
    "dense": export_dense,
}


# ==================== 架构 ====================

def _graph_input(spec: ArchSpec) -> List[ValueInfo]:
    return [ValueInfo(INPUT_NAME, (spec.n_stations, spec.k), FLOAT32, batched=True)]


def _finish(builder: GraphBuilder, spec: ArchSpec, metadata: Optional[Dict[str, str]]) -> ModelGraph:
    meta = {"arch": spec.kind.value, "n_stations": str(spec.n_stations), "k": str(spec.k),
            "h": str(spec.h), "hidden_dim": str(spec.hidden_dim)}
    meta.update(metadata or {})
    model = builder.finish([OUTPUT_NAME], meta)
    violations = validate(model)
    if violations:
        raise InvalidModelError(violations)
    return model


def build_gcn2(spec: ArchSpec, params: Dict[str, np.ndarray],
               metadata: Optional[Dict[str, str]] = None) -> ModelGraph:
    """X → MyGcnOp → MyGcnOp → Flatten → MatMul → AddBias → ŷ"""
    if spec.kind is not ArchKind.GCN2:
        raise ArchSpecError(f"build_gcn2 需要 gcn2 架构，实际 {spec.kind.value}")
    spec.check_params(params)

    builder = GraphBuilder(_graph_input(spec))
    a_hat = builder.constant("A_hat", spec.topology.a_hat)
    h = LAYER_EXPORTS["gcn"](builder, INPUT_NAME, "gcn1", params["W1"], a_hat)
    h = LAYER_EXPORTS["gcn"](builder, h, "gcn2", params["W2"], a_hat)
    h = LAYER_EXPORTS["flatten"](builder, h, "flatten")
    LAYER_EXPORTS["dense"](builder, h, "mlp", params["Wm"], params["bm"], output=OUTPUT_NAME)
    return _finish(builder, spec, metadata)


def build_sage2(spec: ArchSpec, params: Dict[str, np.ndarray],
                metadata: Optional[Dict[str, str]] = None) -> ModelGraph:
    """X → SageMeanOp → SageMeanOp → Flatten → MatMul → AddBias → ŷ"""
    if spec.kind is not ArchKind.SAGE2:
        raise ArchSpecError(f"build_sage2 需要 sage2 架构，实际 {spec.kind.value}")
    spec.check_params(params)
    neighbors = spec.neighbors().require_nonempty()

    builder = GraphBuilder(_graph_input(spec))
    h = LAYER_EXPORTS["sage"](builder, INPUT_NAME, "sage1", params["W1"], neighbors)
    h = LAYER_EXPORTS["sage"](builder, h, "sage2", params["W2"], neighbors)
    h = LAYER_EXPORTS["flatten"](builder, h, "flatten")
    LAYER_EXPORTS["dense"](builder, h, "mlp", params["Wm"], params["bm"], output=OUTPUT_NAME)
    return _finish(builder, spec, metadata)


def build_model(spec: ArchSpec, params: Dict[str, np.ndarray],
                metadata: Optional[Dict[str, str]] = None) -> ModelGraph:
    if spec.kind is ArchKind.GCN2:
        return build_gcn2(spec, params, metadata)
    return build_sage2(spec, params, metadata)
