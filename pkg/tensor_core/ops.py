"""
基础张量运算
所有运算都是纯函数，不做隐式广播：
批量维只允许出现在最前面，并且每个运算单独声明其支持的秩。
"""

from typing import List, Sequence

import numpy as np

from errors import EmptyAggregationError, ShapeMismatchError
from .tensor import Tensor


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """矩阵乘法

    支持 [m×p]·[p×q]，带批量维的 [B×m×p]·[p×q]（右乘权重），
    以及 [m×p]·[B×p×q]（左乘固定矩阵，如归一化邻接矩阵）。
    """
    if a.rank not in (2, 3) or b.rank not in (2, 3) or (a.rank == 3 and b.rank == 3):
        raise ShapeMismatchError("matmul", a.shape, b.shape, detail="不支持的秩组合")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeMismatchError("matmul", a.shape, b.shape)
    return Tensor.wrap(np.matmul(a.numpy(), b.numpy()), "matmul")


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeMismatchError("add", a.shape, b.shape)
    return Tensor.wrap(a.numpy() + b.numpy(), "add")


def add_bias(a: Tensor, bias: Tensor) -> Tensor:
    """按行加偏置：a [m×q] + bias [1×q]"""
    if a.rank != 2 or bias.shape != (1, a.shape[1]):
        raise ShapeMismatchError("add_bias", a.shape, bias.shape)
    return Tensor.wrap(a.numpy() + bias.numpy(), "add_bias")


def relu(a: Tensor) -> Tensor:
    return Tensor.wrap(np.maximum(a.numpy(), a.numpy().dtype.type(0)), "relu")


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    """沿最后一维拼接，前面各维必须一致"""
    if a.rank != b.rank or a.shape[:-1] != b.shape[:-1]:
        raise ShapeMismatchError("concat_cols", a.shape, b.shape)
    return Tensor.wrap(np.concatenate([a.numpy(), b.numpy()], axis=-1), "concat_cols")


def slice_cols(a: Tensor, start: int, stop: int) -> Tensor:
    if not 0 <= start <= stop <= a.shape[-1]:
        raise ShapeMismatchError("slice_cols", a.shape, detail=f"列范围 [{start}, {stop}) 越界")
    return Tensor.wrap(np.array(a.numpy()[..., start:stop]), "slice_cols")


def reshape(a: Tensor, new_shape: Sequence[int]) -> Tensor:
    new_shape = tuple(int(s) for s in new_shape)
    if int(np.prod(new_shape, dtype=np.int64)) != a.size:
        raise ShapeMismatchError("reshape", a.shape, new_shape)
    return Tensor.wrap(a.numpy().reshape(new_shape), "reshape")


def flatten(a: Tensor, axis: int = 1) -> Tensor:
    """与 ONNX Flatten 相同：[d0..d(axis-1)] × [d(axis)..]"""
    if not 0 <= axis <= a.rank:
        raise ShapeMismatchError("flatten", a.shape, detail=f"axis={axis}")
    outer = int(np.prod(a.shape[:axis], dtype=np.int64))
    inner = int(np.prod(a.shape[axis:], dtype=np.int64))
    return reshape(a, (outer, inner))


def row_mean(a: Tensor) -> Tensor:
    """行均值 [m×p] -> [1×p]，按行顺序累加"""
    if a.rank != 2:
        raise ShapeMismatchError("row_mean", a.shape, detail="需要二维张量")
    rows = a.shape[0]
    if rows == 0:
        raise EmptyAggregationError("row_mean: 行数为 0，均值无定义")
    array = a.numpy()
    acc = np.zeros((1, a.shape[1]), dtype=array.dtype)
    for i in range(rows):
        acc += array[i]
    return Tensor.wrap(acc / array.dtype.type(rows), "row_mean")


def split_batch(a: Tensor) -> List[Tensor]:
    """把 [B×...] 拆成 B 个 [1×...]"""
    if a.rank == 0:
        raise ShapeMismatchError("split_batch", a.shape, detail="标量没有批量维")
    array = a.numpy()
    return [Tensor.wrap(np.array(array[i : i + 1]), "split_batch") for i in range(a.shape[0])]


def concat_batch(parts: Sequence[Tensor]) -> Tensor:
    """按输入顺序沿批量维拼接"""
    if not parts:
        raise EmptyAggregationError("concat_batch: 没有可拼接的张量")
    tail = parts[0].shape[1:]
    for part in parts:
        if part.shape[1:] != tail:
            raise ShapeMismatchError("concat_batch", parts[0].shape, part.shape)
    return Tensor.wrap(np.concatenate([p.numpy() for p in parts], axis=0), "concat_batch")
