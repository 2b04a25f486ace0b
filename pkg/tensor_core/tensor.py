"""
张量值类型
"""

from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from errors import NonFiniteError, ShapeMismatchError

FLOAT32 = "float32"
FLOAT64 = "float64"

_DTYPES = {FLOAT32: np.float32, FLOAT64: np.float64}


class Tensor:
    """不可变的稠密行主序张量

    训练侧使用 float64，序列化和推理侧使用 float32。
    构造完成后底层数组被设为只读，可在线程间共享。
    """

    __slots__ = ("_array",)

    def __init__(self, values: Any, dtype: str = FLOAT64, shape: Optional[Sequence[int]] = None):
        if dtype not in _DTYPES:
            raise ValueError(f"不支持的 dtype: {dtype}")
        array = np.array(values, dtype=_DTYPES[dtype], order="C", copy=True)
        if shape is not None:
            shape = tuple(int(s) for s in shape)
            if int(np.prod(shape, dtype=np.int64)) != array.size:
                raise ShapeMismatchError("Tensor", array.shape, shape, detail="元素个数不一致")
            array = array.reshape(shape)
        self._array = _freeze(array, "Tensor")

    @classmethod
    def wrap(cls, array: np.ndarray, where: str = "Tensor") -> "Tensor":
        """包装运算结果（不拷贝），同时做有限值检查"""
        if array.dtype not in (np.float32, np.float64):
            array = array.astype(np.float64)
        tensor = cls.__new__(cls)
        tensor._array = _freeze(np.ascontiguousarray(array), where)
        return tensor

    @classmethod
    def zeros(cls, shape: Sequence[int], dtype: str = FLOAT64) -> "Tensor":
        return cls.wrap(np.zeros(tuple(shape), dtype=_DTYPES[dtype]))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self._array.shape

    @property
    def rank(self) -> int:
        return self._array.ndim

    @property
    def dtype(self) -> str:
        return FLOAT32 if self._array.dtype == np.float32 else FLOAT64

    @property
    def size(self) -> int:
        return int(self._array.size)

    @property
    def data(self) -> np.ndarray:
        """扁平行主序数据（只读视图）"""
        return self._array.reshape(-1)

    def numpy(self) -> np.ndarray:
        """只读 ndarray 视图"""
        return self._array

    def astype(self, dtype: str) -> "Tensor":
        if dtype == self.dtype:
            return self
        return Tensor.wrap(self._array.astype(_DTYPES[dtype]))

    def tolist(self) -> List[Any]:
        return self._array.tolist()

    def to_bytes(self) -> bytes:
        """小端序 float32 原始字节"""
        return self._array.astype("<f4", copy=False).tobytes(order="C")

    @classmethod
    def from_bytes(cls, raw: bytes, shape: Sequence[int]) -> "Tensor":
        array = np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(tuple(shape))
        return cls.wrap(array)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Tensor):
            return NotImplemented
        return (
            self.dtype == other.dtype
            and self.shape == other.shape
            and self._array.tobytes() == other._array.tobytes()
        )

    def __hash__(self) -> int:
        return hash((self.dtype, self.shape, self._array.tobytes()))

    def __repr__(self) -> str:
        return f"Tensor(shape={list(self.shape)}, dtype={self.dtype})"


def _freeze(array: np.ndarray, where: str) -> np.ndarray:
    if array.size and not np.isfinite(array).all():
        raise NonFiniteError(where)
    array.setflags(write=False)
    return array
