"""
两种架构的前向、MSE 损失和解析反向传播（float64）

GCN2:  Z1 = (Â X) W1, H1 = relu(Z1); Z2 = (Â H1) W2, H2 = relu(Z2)
SAGE2: C1 = [X, M X],  Z1 = C1 W1;   C2 = [H1, M H1], Z2 = C2 W2
头部:  ŷ = flatten(H2) Wm + bm
其中 Â 为对称归一化邻接矩阵，M 为邻居均值矩阵。
"""

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from errors import NonFiniteError, ShapeMismatchError, StaleCacheError
from models.arch import ArchKind, ArchSpec, TrainedModel


def glorot_uniform(shape: Tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """Glorot 均匀初始化 U(-√(6/(fan_in+fan_out)), +√(6/(fan_in+fan_out)))"""
    fan_in, fan_out = shape
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def init_params(spec: ArchSpec, rng: np.random.Generator) -> Dict[str, np.ndarray]:
    params = {}
    for name, shape in spec.param_shapes().items():
        params[name] = np.zeros(shape) if name == "bm" else glorot_uniform(shape, rng)
    return params


@dataclass
class GradientSet:
    """与参数同形状的梯度"""
    grads: Dict[str, np.ndarray]

    def __post_init__(self):
        for name, grad in self.grads.items():
            if not np.isfinite(grad).all():
                raise NonFiniteError(f"梯度 {name}")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.grads[name]

    def items(self):
        return self.grads.items()

    def check_against(self, params: Dict[str, np.ndarray]):
        for name, value in params.items():
            if name not in self.grads or self.grads[name].shape != value.shape:
                raise ShapeMismatchError(f"梯度 {name}", value.shape,
                                         self.grads.get(name, np.empty(0)).shape)


@dataclass
class ForwardCache:
    model_id: int
    version: int
    kind: ArchKind
    y: np.ndarray
    y_hat: np.ndarray
    acts: Dict[str, np.ndarray] = field(default_factory=dict)


def _check_finite(array: np.ndarray, layer: str) -> np.ndarray:
    if not np.isfinite(array).all():
        raise NonFiniteError(layer)
    return array


def graph_matrix_for(spec: ArchSpec) -> np.ndarray:
    if spec.kind is ArchKind.GCN2:
        return spec.topology.a_hat
    return spec.neighbors().require_nonempty().mean_matrix()


def forward(spec: ArchSpec, params: Dict[str, np.ndarray], x: np.ndarray,
            graph_matrix: np.ndarray = None) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
    """x: [B, n, k] -> ŷ: [B, n]，同时返回反向所需的中间量"""
    n, k = spec.n_stations, spec.k
    if x.ndim != 3 or x.shape[1:] != (n, k):
        raise ShapeMismatchError("forward", x.shape, ("B", n, k))
    g = graph_matrix_for(spec) if graph_matrix is None else graph_matrix
    batch = x.shape[0]
    acts: Dict[str, np.ndarray] = {"x": x, "g": g}

    if spec.kind is ArchKind.GCN2:
        p0 = np.matmul(g, x)
        z1 = _check_finite(np.matmul(p0, params["W1"]), "gcn1")
        h1 = np.maximum(z1, 0.0)
        p1 = np.matmul(g, h1)
        z2 = _check_finite(np.matmul(p1, params["W2"]), "gcn2")
        acts.update(p0=p0, z1=z1, h1=h1, p1=p1, z2=z2)
    else:
        c1 = np.concatenate([x, np.matmul(g, x)], axis=-1)
        z1 = _check_finite(np.matmul(c1, params["W1"]), "sage1")
        h1 = np.maximum(z1, 0.0)
        c2 = np.concatenate([h1, np.matmul(g, h1)], axis=-1)
        z2 = _check_finite(np.matmul(c2, params["W2"]), "sage2")
        acts.update(c1=c1, z1=z1, h1=h1, c2=c2, z2=z2)

    h2 = np.maximum(acts["z2"], 0.0)
    flat = h2.reshape(batch, -1)
    y_hat = _check_finite(flat @ params["Wm"] + params["bm"], "mlp")
    acts.update(flat=flat)
    return y_hat, acts


def forward_loss(model: TrainedModel, batch: Tuple[np.ndarray, np.ndarray],
                 graph_matrix: np.ndarray = None) -> Tuple[float, ForwardCache]:
    """MSE = mean over B·n of (ŷ − y)²，输入应已归一化"""
    x, y = batch
    y = np.asarray(y, dtype=np.float64)
    y_hat, acts = forward(model.spec, model.params, np.asarray(x, dtype=np.float64), graph_matrix)
    if y.shape != y_hat.shape:
        raise ShapeMismatchError("forward_loss", y_hat.shape, y.shape)
    loss = float(np.mean((y_hat - y) ** 2))
    cache = ForwardCache(id(model), model.version, model.spec.kind, y, y_hat, acts)
    return loss, cache


def backward(model: TrainedModel, cache: ForwardCache) -> GradientSet:
    """损失对所有参数的解析梯度"""
    if cache.model_id != id(model) or cache.version != model.version:
        raise StaleCacheError("前向缓存与当前模型参数不匹配，需要重新前向")
    params, acts = model.params, cache.acts
    g = acts["g"]
    batch, n = cache.y.shape
    d = model.spec.hidden_dim

    dy = 2.0 * (cache.y_hat - cache.y) / (batch * n)
    grads = {
        "Wm": acts["flat"].T @ dy,
        "bm": dy.sum(axis=0, keepdims=True),
    }
    dh2 = (dy @ params["Wm"].T).reshape(batch, n, d)
    dz2 = dh2 * (acts["z2"] > 0)

    if cache.kind is ArchKind.GCN2:
        grads["W2"] = acts["p1"].reshape(-1, d).T @ dz2.reshape(-1, d)
        # Â 对称，Âᵀ = Â
        dh1 = np.matmul(g, dz2 @ params["W2"].T)
        dz1 = dh1 * (acts["z1"] > 0)
        grads["W1"] = acts["p0"].reshape(-1, acts["p0"].shape[-1]).T @ dz1.reshape(-1, d)
    else:
        c2 = acts["c2"]
        grads["W2"] = c2.reshape(-1, c2.shape[-1]).T @ dz2.reshape(-1, d)
        dc2 = dz2 @ params["W2"].T
        dh1 = dc2[..., :d] + np.matmul(g.T, dc2[..., d:])
        dz1 = dh1 * (acts["z1"] > 0)
        c1 = acts["c1"]
        grads["W1"] = c1.reshape(-1, c1.shape[-1]).T @ dz1.reshape(-1, d)

    result = GradientSet(grads)
    result.check_against(params)
    return result


def predict(model: TrainedModel, x: np.ndarray) -> np.ndarray:
    """训练侧原生前向（归一化空间）"""
    y_hat, _ = forward(model.spec, model.params, np.asarray(x, dtype=np.float64))
    return y_hat
