"""
训练检查点（.npz）
float64 参数 + JSON 头（架构、归一化参数、容量、训练来源）
"""

import json
from pathlib import Path
from typing import Union

import numpy as np

from errors import ModelFormatError
from services.log_manager import get_logger
from .arch import ArchSpec, NormStats, TrainedModel

logger = get_logger(__name__)

_HEADER_KEY = "__header__"


def save_checkpoint(model: TrainedModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "spec": model.spec.to_dict(),
        "norm_mean": model.norm_stats.mean.tolist(),
        "norm_scale": model.norm_stats.scale.tolist(),
        "capacities": model.capacities,
        "provenance": model.provenance,
    }
    header_bytes = np.frombuffer(json.dumps(header).encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as f:
        np.savez(f, **{_HEADER_KEY: header_bytes}, **model.params)
    logger.info("检查点已保存", path=str(path), arch=model.spec.kind.value)
    return path


def load_checkpoint(path: Union[str, Path]) -> TrainedModel:
    try:
        with np.load(Path(path), allow_pickle=False) as archive:
            header = json.loads(archive[_HEADER_KEY].tobytes().decode("utf-8"))
            params = {name: archive[name] for name in archive.files if name != _HEADER_KEY}
    except (OSError, KeyError, ValueError) as e:
        raise ModelFormatError(f"无法读取检查点 {path}: {e}") from e
    return TrainedModel(
        spec=ArchSpec.from_dict(header["spec"]),
        params=params,
        norm_stats=NormStats(header["norm_mean"], header["norm_scale"]),
        capacities=header.get("capacities"),
        provenance=header.get("provenance", {}),
    )
