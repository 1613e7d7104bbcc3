from pathlib import Path
from typing import List
import os

from pydantic_settings import BaseSettings, SettingsConfigDict

# 内置 schema 目录
SCHEMA_DIR = Path(__file__).resolve().parent / "schemas"


class Settings(BaseSettings):
    """应用配置类"""

    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")

    # 版本
    APP_NAME: str = "sdoh-forge"
    APP_VERSION: str = "0.1.0"

    # 运行配置
    SDOH_FORGE_THREADS: int = 0  # 0 = 自动（cpu_count）
    LOG_LEVEL: str = "INFO"
    DEFAULT_SEED: int = 13

    # Schema 配置
    DEFAULT_SCHEMA_PATH: str = str(SCHEMA_DIR / "default_schema.json")

    # 章节提取配置
    SOCIAL_HISTORY_ALIASES: List[str] = [
        "social history",
        "sh",
        "social hx",
        "social",
        "soc hx",
    ]

    # TF-IDF 配置: raw | lognorm
    TF_MODE: str = "raw"

    # 主动学习查询配置（默认 sum / maximum / 0.1）
    SELECT_ALPHA: float = 0.1
    SELECT_SIMILARITY: str = "maximum"
    SELECT_UNCERTAINTY: str = "sum"


# 创建全局设置实例
settings = Settings()


def get_thread_count() -> int:
    """解析 SDOH_FORGE_THREADS，0 表示自动"""
    if settings.SDOH_FORGE_THREADS > 0:
        return settings.SDOH_FORGE_THREADS
    return os.cpu_count() or 1
