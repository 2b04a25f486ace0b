#!/usr/bin/env python3
"""
配置管理器
优先级（低 → 高）: 字段默认值 < config.json < .env < 环境变量 EDGE_GNN_* < 命令行参数
"""

import json
from pathlib import Path
from typing import Any, ClassVar, Dict, List, Optional, Tuple, Type

from pydantic import Field
from pydantic.fields import FieldInfo
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict

from errors import ConfigError
from pipeline.ingest import GapPolicy
from training.config import OptimizerKind, TrainConfig

DEFAULT_CONFIG_FILE = "config.json"


class JsonConfigSource(PydanticBaseSettingsSource):
    """从 config.json 读取配置，文件不存在时为空"""

    def __init__(self, settings_cls: Type[BaseSettings], json_file: Optional[str]):
        super().__init__(settings_cls)
        self.json_file = Path(json_file) if json_file else None
        self.data = self._load()

    def _load(self) -> Dict[str, Any]:
        if self.json_file is None or not self.json_file.exists():
            return {}
        try:
            with open(self.json_file, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"加载配置文件失败 {self.json_file}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"配置文件 {self.json_file} 顶层必须是对象")
        return data

    def get_field_value(self, field: FieldInfo, field_name: str) -> Tuple[Any, str, bool]:
        return self.data.get(field_name), field_name, False

    def __call__(self) -> Dict[str, Any]:
        return {name: value for name, value in self.data.items() if name in self.settings_cls.model_fields}


class EdgeGnnSettings(BaseSettings):
    """运行配置"""

    model_config = SettingsConfigDict(
        env_prefix="EDGE_GNN_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    config_file: ClassVar[Optional[str]] = DEFAULT_CONFIG_FILE

    # 模型
    k: int = Field(96, ge=1, description="输入窗口长度")
    h: int = Field(96, ge=1, description="预测步长")
    hidden_dim: int = Field(64, ge=1)

    # 合成数据
    n_stations: int = Field(3, ge=1)
    days: int = Field(150, ge=2)
    capacities_kw: List[float] = Field(default_factory=lambda: [5.0, 8.0, 10.0])

    # 训练
    seed: int = Field(42, ge=0)
    learning_rate: float = Field(1e-3, gt=0)
    epochs: int = Field(200, ge=1)
    batch_size: int = Field(32, ge=1)
    optimizer: OptimizerKind = OptimizerKind.ADAM
    patience: Optional[int] = Field(20, ge=1)
    train_fraction: float = Field(0.70, gt=0, lt=1)
    val_fraction: float = Field(0.15, ge=0, lt=1)

    # 数据读取
    gap_policy: GapPolicy = GapPolicy.REJECT
    power_tolerance: float = Field(0.05, ge=0)

    # 推理与基准测试
    threads: int = Field(1, ge=1)
    memory_sample_interval_ms: float = Field(10.0, gt=0)
    latency_samples: int = Field(200, ge=0)

    # 日志与导出
    log_level: str = "INFO"
    log_dir: str = "./logs"
    export_path: str = "./exports"

    @classmethod
    def settings_customise_sources(cls, settings_cls: Type[BaseSettings],
                                   init_settings: PydanticBaseSettingsSource,
                                   env_settings: PydanticBaseSettingsSource,
                                   dotenv_settings: PydanticBaseSettingsSource,
                                   file_secret_settings: PydanticBaseSettingsSource):
        # 越靠前优先级越高
        return (
            init_settings,
            env_settings,
            dotenv_settings,
            JsonConfigSource(settings_cls, cls.config_file),
        )

    @classmethod
    def load(cls, config_file: Optional[str] = DEFAULT_CONFIG_FILE, **overrides) -> "EdgeGnnSettings":
        """按指定配置文件加载，overrides 为命令行覆盖值"""
        bound = type(cls.__name__, (cls,), {"config_file": config_file})
        return bound(**overrides)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            optimizer=self.optimizer,
            patience=self.patience,
            train_fraction=self.train_fraction,
            val_fraction=self.val_fraction,
        )


class ConfigManager:
    """配置管理器"""

    def __init__(self, config_file: Optional[str] = DEFAULT_CONFIG_FILE):
        self.config_file = config_file
        self.overrides: Dict[str, Any] = {}
        self.settings = self._load()

    def _load(self) -> EdgeGnnSettings:
        try:
            return EdgeGnnSettings.load(self.config_file, **self.overrides)
        except ValueError as e:
            raise ConfigError(f"配置不合法: {e}") from e

    def update(self, config_dict: Dict[str, Any]) -> EdgeGnnSettings:
        """批量覆盖配置（None 值忽略），覆盖值优先级最高"""
        self.overrides.update({k: v for k, v in config_dict.items() if v is not None})
        self.settings = self._load()
        return self.settings

    def get_all(self) -> Dict[str, Any]:
        """获取所有配置"""
        return self.settings.model_dump(mode="json")


# 全局配置管理器实例 - 延迟初始化
config_manager: Optional[ConfigManager] = None


def get_config_manager(config_file: Optional[str] = None) -> ConfigManager:
    """获取配置管理器，指定配置文件时重新创建"""
    global config_manager
    if config_file is not None or config_manager is None:
        config_manager = ConfigManager(config_file or DEFAULT_CONFIG_FILE)
    return config_manager

