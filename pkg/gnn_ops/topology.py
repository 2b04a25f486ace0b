"""
图拓扑与邻接矩阵预处理
"""

from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from errors import AggregationError, TopologyError
from tensor_core import FLOAT64, Tensor


@dataclass(frozen=True, eq=False)
class GraphTopology:
    """站点拓扑：对称、0/1、对角为 0 的邻接矩阵"""
    adjacency: np.ndarray

    def __post_init__(self):
        _check_adjacency(self.adjacency)
        array = np.array(self.adjacency, dtype=np.float64)
        array.setflags(write=False)
        object.__setattr__(self, "adjacency", array)

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Iterable[Tuple[int, int]]) -> "GraphTopology":
        adjacency = np.zeros((n_nodes, n_nodes))
        for u, v in edges:
            if u == v:
                raise TopologyError(f"不允许自环边 ({u}, {v})")
            adjacency[u, v] = adjacency[v, u] = 1.0
        return cls(adjacency)

    @classmethod
    def fully_connected(cls, n_nodes: int) -> "GraphTopology":
        return cls(np.ones((n_nodes, n_nodes)) - np.eye(n_nodes))

    @classmethod
    def path(cls, n_nodes: int) -> "GraphTopology":
        return cls.from_edges(n_nodes, [(i, i + 1) for i in range(n_nodes - 1)])

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def a_tilde(self) -> np.ndarray:
        """Ã = A + I"""
        return self.adjacency + np.eye(self.n_nodes)

    @property
    def degrees(self) -> np.ndarray:
        """D̃ 的对角元素，自环保证 ≥ 1"""
        return self.a_tilde.sum(axis=1)

    @property
    def a_hat(self) -> np.ndarray:
        return _normalize(self.a_tilde)

    def edges(self) -> List[Tuple[int, int]]:
        rows, cols = np.nonzero(np.triu(self.adjacency, 1))
        return [(int(u), int(v)) for u, v in zip(rows, cols)]

    def permute(self, perm: Sequence[int]) -> "GraphTopology":
        """按 perm 重排节点：新节点 i 对应旧节点 perm[i]"""
        perm = np.asarray(perm)
        return GraphTopology(self.adjacency[np.ix_(perm, perm)])


@dataclass(frozen=True)
class NeighborSet:
    """每个节点排好序的邻居列表（不含自身）"""
    lists: Tuple[Tuple[int, ...], ...]

    @classmethod
    def from_topology(cls, topology: GraphTopology) -> "NeighborSet":
        return cls(tuple(
            tuple(int(u) for u in np.nonzero(row)[0]) for row in topology.adjacency
        ))

    @classmethod
    def from_lists(cls, lists: Sequence[Sequence[int]]) -> "NeighborSet":
        n = len(lists)
        normalized = []
        for v, neighbors in enumerate(lists):
            ordered = tuple(sorted(int(u) for u in neighbors))
            if ordered and (ordered[0] < 0 or ordered[-1] >= n):
                raise TopologyError(f"节点 {v} 的邻居索引越界，应在 [0, {n}) 内: {list(ordered)}")
            if v in ordered:
                raise TopologyError(f"节点 {v} 的邻居列表包含自身")
            normalized.append(ordered)
        return cls(tuple(normalized))

    @property
    def n_nodes(self) -> int:
        return len(self.lists)

    def require_nonempty(self) -> "NeighborSet":
        """SAGE 构建模型时拒绝孤立节点"""
        for v, neighbors in enumerate(self.lists):
            if not neighbors:
                raise AggregationError(v)
        return self

    def to_csr(self) -> List[int]:
        """编码为 [N, off_0 … off_N, idx …]"""
        offsets = [0]
        indices: List[int] = []
        for neighbors in self.lists:
            indices.extend(neighbors)
            offsets.append(len(indices))
        return [self.n_nodes] + offsets + indices

    @classmethod
    def from_csr(cls, encoded: Sequence[int]) -> "NeighborSet":
        if not encoded:
            raise TopologyError("neighbor_lists 为空")
        n = int(encoded[0])
        offsets = list(encoded[1:n + 2])
        indices = list(encoded[n + 2:])
        if len(offsets) != n + 1 or offsets[0] != 0 or offsets[-1] != len(indices) \
                or any(a > b for a, b in zip(offsets, offsets[1:])):
            raise TopologyError("neighbor_lists 的 CSR 编码不一致")
        return cls.from_lists([indices[offsets[v]:offsets[v + 1]] for v in range(n)])

    def mean_matrix(self) -> np.ndarray:
        """均值聚合矩阵 M：M[v, u] = 1/|N(v)|（训练时使用）"""
        matrix = np.zeros((self.n_nodes, self.n_nodes))
        for v, neighbors in enumerate(self.lists):
            if neighbors:
                matrix[v, list(neighbors)] = 1.0 / len(neighbors)
        return matrix

    def permute(self, perm: Sequence[int]) -> "NeighborSet":
        inverse = {int(old): new for new, old in enumerate(perm)}
        return NeighborSet.from_lists(
            [[inverse[u] for u in self.lists[old]] for old in perm]
        )


def gcn_normalize(adjacency: Tensor) -> Tensor:
    """A_hat = D̃^{-1/2} (A + I) D̃^{-1/2}"""
    array = adjacency.numpy().astype(np.float64)
    _check_adjacency(array)
    a_tilde = array + np.eye(array.shape[0])
    return Tensor.wrap(_normalize(a_tilde), "gcn_normalize")


def _normalize(a_tilde: np.ndarray) -> np.ndarray:
    degrees = a_tilde.sum(axis=1)
    # 外积逐元素相乘保证结果严格对称
    return a_tilde / np.sqrt(np.outer(degrees, degrees))


def _check_adjacency(array: np.ndarray):
    array = np.asarray(array)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise TopologyError(f"邻接矩阵必须是方阵，实际形状 {list(array.shape)}")
    if not np.isin(array, (0.0, 1.0)).all():
        raise TopologyError("邻接矩阵只能包含 0 和 1")
    if not np.array_equal(array, array.T):
        raise TopologyError("邻接矩阵必须对称")
    if np.any(np.diag(array) != 0):
        raise TopologyError("邻接矩阵对角线必须为 0")


def topology_tensor(topology: GraphTopology) -> Tensor:
    return Tensor(topology.adjacency, FLOAT64)
