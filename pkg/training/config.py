"""
训练配置
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field


class OptimizerKind(str, Enum):
    SGD = "sgd"
    ADAM = "adam"


class TrainConfig(BaseModel):
    learning_rate: float = Field(1e-3, gt=0, description="学习率")
    epochs: int = Field(200, ge=1, description="最大训练轮数")
    batch_size: int = Field(32, ge=1, description="批量大小 B")
    seed: int = Field(42, ge=0, description="随机种子")
    optimizer: OptimizerKind = OptimizerKind.ADAM
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    epsilon: float = Field(1e-8, gt=0)
    patience: Optional[int] = Field(20, ge=1, description="验证损失不再下降的容忍轮数，None 表示不早停")
    train_fraction: float = Field(0.70, gt=0, lt=1)
    val_fraction: float = Field(0.15, ge=0, lt=1)
