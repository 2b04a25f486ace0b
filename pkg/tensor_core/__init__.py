"""
张量核心模块
稠密行主序张量及所有图节点最终归约到的基础运算
"""

from .tensor import Tensor, FLOAT32, FLOAT64
from .ops import (
    matmul,
    add,
    add_bias,
    relu,
    concat_cols,
    slice_cols,
    reshape,
    flatten,
    row_mean,
    split_batch,
    concat_batch,
)

__all__ = [
    "Tensor",
    "FLOAT32",
    "FLOAT64",
    "matmul",
    "add",
    "add_bias",
    "relu",
    "concat_cols",
    "slice_cols",
    "reshape",
    "flatten",
    "row_mean",
    "split_batch",
    "concat_batch",
]
