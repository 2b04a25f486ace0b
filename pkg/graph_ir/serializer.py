"""
.egir 模型文件格式

布局（全部小端序）:
    magic    4 字节  b"EGIR"
    version  u32     当前为 1
    length   u64     manifest 字节数
    manifest UTF-8 JSON（输入、输出、节点、属性、张量描述及偏移）
    tensors  行主序 float32 原始数据，按 manifest 中的顺序紧密排列

同一个模型两次序列化得到逐字节相同的结果。
"""

import json
import struct
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from errors import (
    BadMagicError,
    InvalidModelError,
    ManifestInconsistencyError,
    ModelFormatError,
    TruncatedTensorError,
    UnsupportedVersionError,
)
from services.log_manager import get_logger
from tensor_core import FLOAT32, Tensor
from .base import attribute_kind
from .model_graph import IR_VERSION, GraphNode, ModelGraph, ValueInfo, validate

logger = get_logger(__name__)

MAGIC = b"EGIR"
SUPPORTED_VERSIONS = (IR_VERSION,)
_HEADER = struct.Struct("<4sIQ")


def serialize(model: ModelGraph) -> bytes:
    """序列化为 .egir 字节串（模型必须先通过校验）"""
    violations = validate(model)
    if violations:
        raise InvalidModelError(violations)

    tensors = []
    chunks = []
    offset = 0
    for name, tensor in model.initializers.items():
        raw = tensor.astype(FLOAT32).to_bytes()
        tensors.append({
            "name": name,
            "shape": list(tensor.shape),
            "dtype": FLOAT32,
            "offset": offset,
            "nbytes": len(raw),
        })
        chunks.append(raw)
        offset += len(raw)

    manifest = {
        "version": model.version,
        "inputs": [
            {"name": i.name, "shape": list(i.shape), "dtype": i.dtype, "batched": i.batched}
            for i in model.inputs
        ],
        "outputs": list(model.outputs),
        "nodes": [_encode_node(node) for node in model.nodes],
        "tensors": tensors,
        "metadata": dict(model.metadata),
    }
    try:
        manifest_bytes = json.dumps(
            manifest, ensure_ascii=False, separators=(",", ":"), allow_nan=False
        ).encode("utf-8")
    except ValueError as e:
        raise ModelFormatError(f"manifest 无法编码: {e}") from e

    header = _HEADER.pack(MAGIC, model.version, len(manifest_bytes))
    return header + manifest_bytes + b"".join(chunks)


def deserialize(data: bytes) -> ModelGraph:
    """从 .egir 字节串恢复模型，任何不一致都不会返回部分模型"""
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError(f"不是 EGIR 文件（magic={data[:4]!r}）")
    if len(data) < _HEADER.size:
        raise ManifestInconsistencyError("文件头不完整")
    _, version, manifest_len = _HEADER.unpack_from(data, 0)
    if version not in SUPPORTED_VERSIONS:
        raise UnsupportedVersionError(f"不支持的版本: {version}")

    manifest_end = _HEADER.size + manifest_len
    if manifest_end > len(data):
        raise ManifestInconsistencyError(
            f"manifest 长度 {manifest_len} 超出文件大小 {len(data)}"
        )
    try:
        manifest = json.loads(data[_HEADER.size:manifest_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ManifestInconsistencyError(f"manifest 解析失败: {e}") from e

    if manifest.get("version") != version:
        raise ManifestInconsistencyError(
            f"manifest 版本 {manifest.get('version')} 与文件头版本 {version} 不一致"
        )

    region = data[manifest_end:]
    try:
        initializers = _decode_tensors(manifest["tensors"], region)
        model = ModelGraph(
            version=version,
            inputs=[
                ValueInfo(
                    name=i["name"],
                    shape=tuple(int(s) for s in i["shape"]),
                    dtype=i["dtype"],
                    batched=bool(i["batched"]),
                )
                for i in manifest["inputs"]
            ],
            outputs=[str(o) for o in manifest["outputs"]],
            nodes=[_decode_node(n) for n in manifest["nodes"]],
            initializers=initializers,
            metadata={str(k): str(v) for k, v in manifest["metadata"].items()},
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ManifestInconsistencyError(f"manifest 字段缺失或类型错误: {e}") from e
    return model


def _encode_node(node: GraphNode) -> Dict[str, Any]:
    attributes = []
    for name, value in node.attributes.items():
        kind = attribute_kind(value)
        if kind is None:
            raise ModelFormatError(f"属性 '{name}' 的类型不受支持")
        attributes.append({
            "name": name,
            "type": kind,
            "value": list(value) if kind == "ints" else value,
        })
    return {
        "name": node.name,
        "op_type": node.op_type,
        "inputs": list(node.inputs),
        "outputs": list(node.outputs),
        "attributes": attributes,
    }


def _decode_node(entry: Dict[str, Any]) -> GraphNode:
    attributes: Dict[str, Any] = {}
    for attr in entry["attributes"]:
        kind, value = attr["type"], attr["value"]
        if kind == "int":
            value = int(value)
        elif kind == "float":
            value = float(value)
        elif kind == "ints":
            value = [int(v) for v in value]
        elif kind == "string":
            value = str(value)
        else:
            raise ManifestInconsistencyError(f"未知属性类型: {kind}")
        attributes[attr["name"]] = value
    return GraphNode(
        op_type=entry["op_type"],
        inputs=list(entry["inputs"]),
        outputs=list(entry["outputs"]),
        attributes=attributes,
        name=entry.get("name", ""),
    )


def _decode_tensors(descriptors: List[Dict[str, Any]], region: bytes) -> Dict[str, Tensor]:
    tensors: Dict[str, Tensor] = {}
    expected_offset = 0
    for desc in descriptors:
        name = desc["name"]
        shape = tuple(int(s) for s in desc["shape"])
        if desc.get("dtype") != FLOAT32:
            raise ManifestInconsistencyError(f"张量 {name} 的 dtype 不是 float32")
        nbytes = int(desc["nbytes"])
        if nbytes != int(np.prod(shape, dtype=np.int64)) * 4:
            raise ManifestInconsistencyError(f"张量 {name} 的字节数与形状 {list(shape)} 不符")
        if int(desc["offset"]) != expected_offset:
            raise ManifestInconsistencyError(
                f"张量 {name} 偏移 {desc['offset']}，应为 {expected_offset}"
            )
        end = expected_offset + nbytes
        if end > len(region):
            raise TruncatedTensorError(f"张量 {name} 需要到 {end} 字节，数据区只有 {len(region)} 字节")
        if name in tensors:
            raise ManifestInconsistencyError(f"张量名重复: {name}")
        tensors[name] = Tensor.from_bytes(region[expected_offset:end], shape)
        expected_offset = end
    if expected_offset != len(region):
        raise ManifestInconsistencyError(
            f"数据区有 {len(region) - expected_offset} 字节未被任何张量引用"
        )
    return tensors


def save_model(model: ModelGraph, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(serialize(model))
    logger.info("模型已保存", path=str(path), nodes=len(model.nodes))
    return path


def load_model(path: Union[str, Path], registry: Optional[Any] = None) -> ModelGraph:
    """读取模型文件

    含未注册算子的模型照常加载，只记录警告；执行时才会失败。
    """
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ModelFormatError(f"无法读取模型文件 {path}: {e}") from e
    model = deserialize(data)
    if registry is not None:
        missing = registry.missing(model.op_types())
        if missing:
            logger.warning("模型包含未注册的算子", path=str(path), missing=missing)
    return model


def inspect_model(model: ModelGraph, registry: Optional[Any] = None) -> Dict[str, Any]:
    """加载时检查：节点数、初始化张量、元数据和未注册算子"""
    return {
        "version": model.version,
        "inputs": [
            {"name": i.name, "shape": list(i.shape), "batched": i.batched} for i in model.inputs
        ],
        "outputs": list(model.outputs),
        "node_count": len(model.nodes),
        "op_types": model.op_types(),
        "initializer_count": len(model.initializers),
        "parameter_count": sum(t.size for t in model.initializers.values()),
        "metadata": dict(model.metadata),
        "missing_ops": registry.missing(model.op_types()) if registry is not None else [],
        "violations": [str(v) for v in validate(model)],
    }
