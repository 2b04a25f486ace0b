"""
计算图执行器

Batched:    对整个批次按节点顺序执行一遍。
Serialized: 把带批量维的输入拆成 B 个单样本切片，逐个执行整张图，
            再按输入顺序沿批量维拼接输出。
"""

from enum import Enum
from typing import Dict, List, Mapping, Union

from errors import (
    EdgeGnnError,
    InvalidModelError,
    MissingFeedError,
    NodeExecutionError,
    ShapeMismatchError,
    UnknownOperatorError,
)
from tensor_core import Tensor, concat_batch, reshape, split_batch
from .base import OpKernel
from .model_graph import InvalidAttribute, ModelGraph, validate
from .registry import OperatorRegistry


class ExecutionMode(str, Enum):
    BATCHED = "batched"
    SERIALIZED = "serialized"


class InferenceSession:
    """推理会话

    构造时校验模型、解析全部内核并冻结注册表；之后 run() 可重入，
    多个线程可以共享同一个会话。
    """

    def __init__(self, model: ModelGraph, registry: OperatorRegistry):
        violations = validate(model)
        if violations:
            raise InvalidModelError(violations)
        missing = registry.missing(model.op_types())
        if missing:
            raise UnknownOperatorError(missing)

        registry.freeze()
        self.model = model
        self._kernels: List[OpKernel] = [registry.lookup(node.op_type) for node in model.nodes]

        schema_problems = []
        for index, (node, kernel) in enumerate(zip(model.nodes, self._kernels)):
            for problem in kernel.schema.check_node(node.inputs, node.outputs, node.attributes):
                schema_problems.append(InvalidAttribute(problem, node.display_name(index)))
        if schema_problems:
            raise InvalidModelError(schema_problems)

    def run(self, feeds: Mapping[str, Tensor],
            mode: Union[ExecutionMode, str] = ExecutionMode.BATCHED) -> Dict[str, Tensor]:
        mode = ExecutionMode(mode)
        prepared = self._prepare_feeds(feeds)

        batched_names = [i.name for i in self.model.inputs if i.batched]
        if mode is ExecutionMode.BATCHED or not batched_names:
            return self._run_once(prepared)

        batch = prepared[batched_names[0]].shape[0]
        slices = {name: split_batch(prepared[name]) for name in batched_names}
        per_sample: List[Dict[str, Tensor]] = []
        for i in range(batch):
            sample_feeds = dict(prepared)
            for name in batched_names:
                sample_feeds[name] = slices[name][i]
            per_sample.append(self._run_once(sample_feeds))
        return {
            name: concat_batch([outputs[name] for outputs in per_sample])
            for name in self.model.outputs
        }

    def _prepare_feeds(self, feeds: Mapping[str, Tensor]) -> Dict[str, Tensor]:
        missing = [i.name for i in self.model.inputs if i.name not in feeds]
        if missing:
            raise MissingFeedError(missing)

        prepared: Dict[str, Tensor] = {}
        batch_sizes = set()
        for info in self.model.inputs:
            tensor = feeds[info.name].astype(info.dtype)
            declared = tuple(info.shape)
            if info.batched:
                # 不带批量维的输入视为 B = 1
                if tensor.shape == declared:
                    tensor = reshape(tensor, (1,) + declared)
                if tensor.rank != len(declared) + 1 or tensor.shape[1:] != declared:
                    raise ShapeMismatchError(f"输入 {info.name}", tensor.shape, ("B",) + declared)
                if tensor.shape[0] < 1:
                    raise ShapeMismatchError(f"输入 {info.name}", tensor.shape, detail="批量大小必须 ≥ 1")
                batch_sizes.add(tensor.shape[0])
            elif tensor.shape != declared:
                raise ShapeMismatchError(f"输入 {info.name}", tensor.shape, declared)
            prepared[info.name] = tensor
        if len(batch_sizes) > 1:
            raise ShapeMismatchError("批量输入", *[(b,) for b in sorted(batch_sizes)],
                                     detail="各输入的批量大小不一致")
        return prepared

    def _run_once(self, feeds: Dict[str, Tensor]) -> Dict[str, Tensor]:
        env: Dict[str, Tensor] = dict(self.model.initializers)
        env.update(feeds)
        for index, (node, kernel) in enumerate(zip(self.model.nodes, self._kernels)):
            label = node.display_name(index)
            try:
                args = [env[name] for name in node.inputs]
                results = kernel.evaluate(args, node.attributes)
            except KeyError as e:
                raise NodeExecutionError(label, node.op_type, MissingFeedError([str(e)])) from e
            except EdgeGnnError as e:
                raise NodeExecutionError(label, node.op_type, e) from e
            if len(results) != len(node.outputs):
                raise NodeExecutionError(
                    label, node.op_type,
                    ValueError(f"内核返回 {len(results)} 个输出，节点声明 {len(node.outputs)} 个"),
                )
            for name, value in zip(node.outputs, results):
                env[name] = value
        return {name: env[name] for name in self.model.outputs}


def execute(model: ModelGraph, registry: OperatorRegistry, feeds: Mapping[str, Tensor],
            mode: Union[ExecutionMode, str] = ExecutionMode.BATCHED) -> Dict[str, Tensor]:
    """执行模型图"""
    return InferenceSession(model, registry).run(feeds, mode)
