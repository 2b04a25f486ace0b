"""
优化器
"""

from abc import ABC, abstractmethod
from typing import Dict

import numpy as np

from .config import OptimizerKind, TrainConfig
from .networks import GradientSet


class Optimizer(ABC):
    """优化器基础接口：原地更新参数"""

    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    @abstractmethod
    def step(self, params: Dict[str, np.ndarray], grads: GradientSet):
        pass


class SGD(Optimizer):
    def step(self, params: Dict[str, np.ndarray], grads: GradientSet):
        for name, grad in grads.items():
            params[name] -= self.learning_rate * grad


class Adam(Optimizer):
    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999,
                 epsilon: float = 1e-8):
        super().__init__(learning_rate)
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}

    def step(self, params: Dict[str, np.ndarray], grads: GradientSet):
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        # 固定按参数名排序更新
        for name in sorted(params):
            grad = grads[name]
            m = self.m.setdefault(name, np.zeros_like(grad))
            v = self.v.setdefault(name, np.zeros_like(grad))
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            m_hat = m / correction1
            v_hat = v / correction2
            params[name] -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)


def create_optimizer(config: TrainConfig) -> Optimizer:
    if config.optimizer is OptimizerKind.SGD:
        return SGD(config.learning_rate)
    return Adam(config.learning_rate, config.beta1, config.beta2, config.epsilon)
