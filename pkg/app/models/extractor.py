"""
事件抽取器预测结果模型
"""

from typing import Dict, List

from pydantic import BaseModel, Field, model_validator


class LabeledArgPrediction(BaseModel):
    """单个 labeled argument 头的输出"""
    labels: List[str] = Field(..., description="子类型集合")
    distribution: List[float] = Field(..., description="子类型概率")
    span_token: int = Field(..., ge=0, description="注意力最大的 token（句内序号）")

    @property
    def subtype(self) -> str:
        best = max(range(len(self.distribution)), key=lambda i: (self.distribution[i], -i))
        return self.labels[best]


class SentencePrediction(BaseModel):
    """一个句子的完整预测，token 序号均相对句首"""
    offset: int = Field(..., ge=0, description="句首在样本中的 token 序号")
    length: int = Field(..., ge=1, description="句子 token 数")
    presence: Dict[str, float] = Field(default_factory=dict, description="event_type -> P(present)")
    trigger_token: Dict[str, int] = Field(default_factory=dict, description="event_type -> 注意力最大的 token")
    labeled: Dict[str, Dict[str, LabeledArgPrediction]] = Field(default_factory=dict, description="event_type -> arg_type -> 预测")
    tags: Dict[str, List[str]] = Field(default_factory=dict, description="event_type -> BIO 标签序列")

    @model_validator(mode="after")
    def check_lengths(self) -> "SentencePrediction":
        for event_type, token in self.trigger_token.items():
            if not 0 <= token < self.length:
                raise ValueError(f"{event_type}: trigger token {token} 超出句长 {self.length}")
        for event_type, tags in self.tags.items():
            if len(tags) != self.length:
                raise ValueError(f"{event_type}: 标签序列长度 {len(tags)} != 句长 {self.length}")
        return self
