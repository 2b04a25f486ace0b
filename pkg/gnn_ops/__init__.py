"""
GNN 算子模块
GCN 对称归一化传播、GraphSAGE 均值聚合更新以及邻接矩阵预处理
"""

from .topology import GraphTopology, NeighborSet, gcn_normalize, topology_tensor
from .kernels import (
    ACTIVATION_NONE,
    ACTIVATION_RELU,
    GCN_OP_TYPE,
    SAGE_OP_TYPE,
    GcnOpKernel,
    SageMeanOpKernel,
    gcn_layer,
    mean_aggregate,
    register_gnn_ops,
    sage_round,
)

__all__ = [
    "GraphTopology",
    "NeighborSet",
    "gcn_normalize",
    "topology_tensor",
    "ACTIVATION_NONE",
    "ACTIVATION_RELU",
    "GCN_OP_TYPE",
    "SAGE_OP_TYPE",
    "GcnOpKernel",
    "SageMeanOpKernel",
    "gcn_layer",
    "mean_aggregate",
    "register_gnn_ops",
    "sage_round",
]
