"""
架构描述与训练后的模型
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from errors import ArchSpecError
from gnn_ops import GraphTopology, NeighborSet

# 默认值：一天 96 个 15 分钟样本作输入，预测 24 小时后的单点
DEFAULT_K = 96
DEFAULT_H = 96
DEFAULT_HIDDEN_DIM = 64
DEFAULT_N_STATIONS = 3


class ArchKind(str, Enum):
    GCN2 = "gcn2"
    SAGE2 = "sage2"


class ArchSpec(BaseModel):
    """两种固定预测架构的描述"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: ArchKind
    n_stations: int = Field(DEFAULT_N_STATIONS, ge=1)
    k: int = Field(DEFAULT_K, ge=1, description="输入窗口长度")
    h: int = Field(DEFAULT_H, ge=1, description="预测步长")
    hidden_dim: int = Field(DEFAULT_HIDDEN_DIM, ge=1)
    topology: GraphTopology

    @model_validator(mode="after")
    def _check_topology(self) -> "ArchSpec":
        if self.topology.n_nodes != self.n_stations:
            raise ValueError(
                f"拓扑节点数 {self.topology.n_nodes} 与站点数 {self.n_stations} 不一致"
            )
        return self

    @classmethod
    def create(cls, kind: Any, n_stations: int = DEFAULT_N_STATIONS, k: int = DEFAULT_K,
               h: int = DEFAULT_H, hidden_dim: int = DEFAULT_HIDDEN_DIM,
               topology: Optional[GraphTopology] = None) -> "ArchSpec":
        """默认使用全连接拓扑"""
        try:
            return cls(
                kind=ArchKind(kind),
                n_stations=n_stations,
                k=k,
                h=h,
                hidden_dim=hidden_dim,
                topology=topology or GraphTopology.fully_connected(n_stations),
            )
        except ValueError as e:
            raise ArchSpecError(str(e)) from e

    def neighbors(self) -> NeighborSet:
        return NeighborSet.from_topology(self.topology)

    def param_shapes(self) -> Dict[str, tuple]:
        n, k, d = self.n_stations, self.k, self.hidden_dim
        if self.kind is ArchKind.GCN2:
            first, second = (k, d), (d, d)
        else:
            first, second = (2 * k, d), (2 * d, d)
        return {"W1": first, "W2": second, "Wm": (n * d, n), "bm": (1, n)}

    def check_params(self, params: Dict[str, np.ndarray]):
        expected = self.param_shapes()
        if set(params) != set(expected):
            raise ArchSpecError(f"参数名应为 {sorted(expected)}，实际 {sorted(params)}")
        for name, shape in expected.items():
            if tuple(np.shape(params[name])) != shape:
                raise ArchSpecError(
                    f"参数 {name} 形状应为 {list(shape)}，实际 {list(np.shape(params[name]))}"
                )
        if self.kind is ArchKind.SAGE2:
            self.neighbors().require_nonempty()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "n_stations": self.n_stations,
            "k": self.k,
            "h": self.h,
            "hidden_dim": self.hidden_dim,
            "edges": [list(e) for e in self.topology.edges()],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ArchSpec":
        n = int(data["n_stations"])
        return cls.create(
            data["kind"], n_stations=n, k=int(data["k"]), h=int(data["h"]),
            hidden_dim=int(data["hidden_dim"]),
            topology=GraphTopology.from_edges(n, [tuple(e) for e in data["edges"]]),
        )


@dataclass
class NormStats:
    """每个站点的 z-score 归一化参数"""
    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.scale = np.asarray(self.scale, dtype=np.float64)
        if self.mean.shape != self.scale.shape:
            raise ArchSpecError("归一化均值与尺度的长度不一致")
        if np.any(self.scale <= 0):
            raise ArchSpecError("归一化尺度必须 > 0")

    @classmethod
    def identity(cls, n: int) -> "NormStats":
        return cls(np.zeros(n), np.ones(n))

    def normalize_x(self, x: np.ndarray) -> np.ndarray:
        """x: [..., n, k]"""
        return (x - self.mean[:, None]) / self.scale[:, None]

    def normalize_y(self, y: np.ndarray) -> np.ndarray:
        """y: [..., n]"""
        return (y - self.mean) / self.scale

    def denormalize_y(self, y: np.ndarray) -> np.ndarray:
        return y * self.scale + self.mean


@dataclass
class TrainedModel:
    """架构描述 + 参数 + 归一化参数，可转换为 ModelGraph"""
    spec: ArchSpec
    params: Dict[str, np.ndarray]
    norm_stats: NormStats
    capacities: Optional[List[float]] = None
    provenance: Dict[str, str] = field(default_factory=dict)
    version: int = 0

    def __post_init__(self):
        self.params = {name: np.array(value, dtype=np.float64) for name, value in self.params.items()}
        self.spec.check_params(self.params)
        if self.norm_stats.mean.shape != (self.spec.n_stations,):
            raise ArchSpecError("归一化参数的站点数与架构不一致")
        if self.capacities is not None and len(self.capacities) != self.spec.n_stations:
            raise ArchSpecError("容量个数与站点数不一致")

    def copy(self) -> "TrainedModel":
        return TrainedModel(
            spec=self.spec,
            params={name: value.copy() for name, value in self.params.items()},
            norm_stats=NormStats(self.norm_stats.mean.copy(), self.norm_stats.scale.copy()),
            capacities=list(self.capacities) if self.capacities is not None else None,
            provenance=dict(self.provenance),
        )

    def metadata(self) -> Dict[str, str]:
        """写入模型图的元数据，评估流程依赖这些键"""
        spec = self.spec
        meta = {
            "arch": spec.kind.value,
            "n_stations": str(spec.n_stations),
            "k": str(spec.k),
            "h": str(spec.h),
            "hidden_dim": str(spec.hidden_dim),
            "hidden_activation": "relu",
            "mlp_head": f"linear {spec.n_stations * spec.hidden_dim}->{spec.n_stations}",
            "edges": ";".join(f"{u}-{v}" for u, v in spec.topology.edges()),
        }
        for i in range(spec.n_stations):
            meta[f"norm_mean_{i}"] = repr(float(self.norm_stats.mean[i]))
            meta[f"norm_scale_{i}"] = repr(float(self.norm_stats.scale[i]))
            if self.capacities is not None:
                meta[f"capacity_{i}"] = repr(float(self.capacities[i]))
        for key, value in self.provenance.items():
            meta[f"train_{key}"] = str(value)
        return meta

    def to_graph(self):
        from .builders import build_model
        return build_model(self.spec, self.params, metadata=self.metadata())


def metadata_int(metadata: Dict[str, str], key: str) -> int:
    """读取整数型元数据；缺失或格式错误时抛 ArchSpecError"""
    try:
        return int(metadata[key])
    except KeyError:
        raise ArchSpecError(f"模型元数据缺少 '{key}'，该模型不是由 train/export 导出的") from None
    except ValueError:
        raise ArchSpecError(f"模型元数据 '{key}' 不是整数: {metadata[key]!r}") from None


def norm_stats_from_metadata(metadata: Dict[str, str]) -> NormStats:
    n = metadata_int(metadata, "n_stations")
    try:
        return NormStats(
            [float(metadata[f"norm_mean_{i}"]) for i in range(n)],
            [float(metadata[f"norm_scale_{i}"]) for i in range(n)],
        )
    except KeyError as e:
        raise ArchSpecError(f"模型元数据缺少 {e}") from e
    except ValueError as e:
        raise ArchSpecError(f"模型元数据中的归一化参数无效: {e}") from e


def capacities_from_metadata(metadata: Dict[str, str]) -> Optional[List[float]]:
    n = metadata_int(metadata, "n_stations") if "n_stations" in metadata else 0
    keys = [f"capacity_{i}" for i in range(n)]
    if not all(key in metadata for key in keys):
        return None
    return [float(metadata[key]) for key in keys]
