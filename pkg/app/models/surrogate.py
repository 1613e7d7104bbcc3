"""
代理分类器数据模型
样本级标签、概率分布（ProbProfile）与训练配置
"""

import math
from typing import Dict, List

from pydantic import BaseModel, ConfigDict, Field, field_validator

MULTIPLE = "multiple"
ABSENT = "absent"


class SurrogateLabel(BaseModel):
    """某事件类型的样本级标签"""
    model_config = ConfigDict(frozen=True)

    event_type: str
    label: str = Field(..., description="显著论元子类型、multiple 或 absent")


class ProbProfile(BaseModel):
    """一个样本在每个事件类型上的类别分布（按配置顺序）"""
    sample_id: str
    distributions: Dict[str, List[float]] = Field(..., description="event_type -> 概率向量")

    @field_validator("distributions")
    @classmethod
    def check_normalized(cls, value: Dict[str, List[float]]) -> Dict[str, List[float]]:
        for event_type, dist in value.items():
            if not dist or any(p < 0 for p in dist) or not math.isclose(sum(dist), 1.0, abs_tol=1e-9):
                raise ValueError(f"{event_type}: 概率向量必须非负且和为 1")
        return value

    @property
    def event_types(self) -> List[str]:
        return list(self.distributions.keys())


class TrainConfig(BaseModel):
    """SGD 训练配置（代理分类器与抽取器共用）"""
    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(default=0.05, gt=0)
    epochs: int = Field(default=50, ge=0)
    batch_size: int = Field(default=8, ge=1, description="mini-batch 大小（代理分类器按样本，抽取器按句子）")
    momentum: float = Field(default=0.0, ge=0.0, lt=1.0)
    seed: int = Field(default=13)
