"""
运行清单（manifest）数据模型
"""

from typing import Dict, Optional

from pydantic import BaseModel, Field


class RunManifest(BaseModel):
    """一次命令运行的可复现记录"""
    subcommand: str = Field(..., description="子命令名称")
    config_digest: str = Field(..., description="配置内容的 sha256")
    input_digests: Dict[str, str] = Field(default_factory=dict, description="输入路径 -> sha256")
    seed: Optional[int] = Field(default=None, description="随机种子")
    tool_version: str = Field(..., description="工具版本")
    started_at: str = Field(..., description="开始时间 (ISO 8601, UTC)")
    finished_at: Optional[str] = Field(default=None, description="结束时间")
    status: str = Field(default="running", description="running | ok | failed")
    error: Optional[str] = Field(default=None, description="失败原因")
