"""
算子注册表
op_type -> OpKernel，预置内置算子；自定义算子通过 register_op 注册
"""

import threading
from typing import Dict, Iterable, List

from errors import OperatorConflictError, RegistryFrozenError, UnknownOperatorError
from services.log_manager import get_logger
from .base import OpKernel
from .builtin_ops import builtin_kernels

logger = get_logger(__name__)


class OperatorRegistry:
    """算子注册表

    冻结之后只读，可被多个推理会话共享；冻结前允许注册。
    """

    def __init__(self, include_builtins: bool = True):
        self._kernels: Dict[str, OpKernel] = {}
        self._frozen = False
        self._lock = threading.Lock()
        if include_builtins:
            for kernel in builtin_kernels():
                self.register_op(kernel)

    @property
    def frozen(self) -> bool:
        return self._frozen

    def register_op(self, kernel: OpKernel) -> "OperatorRegistry":
        """注册算子内核，重复注册抛出 OperatorConflictError"""
        with self._lock:
            if self._frozen:
                raise RegistryFrozenError(f"注册表已冻结，无法注册 '{kernel.op_type}'")
            if kernel.op_type in self._kernels:
                raise OperatorConflictError(kernel.op_type)
            self._kernels[kernel.op_type] = kernel
        logger.debug("算子已注册", op_type=kernel.op_type)
        return self

    def freeze(self) -> "OperatorRegistry":
        self._frozen = True
        return self

    def has(self, op_type: str) -> bool:
        return op_type in self._kernels

    def lookup(self, op_type: str) -> OpKernel:
        kernel = self._kernels.get(op_type)
        if kernel is None:
            raise UnknownOperatorError([op_type])
        return kernel

    def missing(self, op_types: Iterable[str]) -> List[str]:
        """返回注册表无法解析的算子类型"""
        return sorted({op for op in op_types if op not in self._kernels})

    def op_types(self) -> List[str]:
        return sorted(self._kernels)

    def __contains__(self, op_type: str) -> bool:
        return self.has(op_type)

    def __len__(self) -> int:
        return len(self._kernels)


def register_op(registry: OperatorRegistry, kernel: OpKernel) -> OperatorRegistry:
    """注册算子（函数形式）"""
    return registry.register_op(kernel)


def create_registry(with_gnn_ops: bool = True) -> OperatorRegistry:
    """创建预置内置算子的注册表，可选附带 GNN 自定义算子"""
    registry = OperatorRegistry()
    if with_gnn_ops:
        from gnn_ops.kernels import register_gnn_ops
        register_gnn_ops(registry)
    return registry
