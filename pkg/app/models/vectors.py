"""
样本向量相关数据模型
"""

import math
from typing import Dict

from pydantic import BaseModel, Field


class SourceIdf(BaseModel):
    """单个语料来源的 IDF 表"""
    n_documents: int = Field(..., ge=0, description="文档数 N")
    df: Dict[str, int] = Field(default_factory=dict, description="token -> 文档频率")
    idf: Dict[str, float] = Field(default_factory=dict, description="token -> ln((1+N)/(1+df)) + 1")

    def weight(self, token: str) -> float:
        """未见过的 token 按 df = 0 计算"""
        value = self.idf.get(token)
        if value is None:
            return math.log(1.0 + self.n_documents) + 1.0
        return value


class TfidfModel(BaseModel):
    """按来源分别拟合的 TF-IDF 权重"""
    tf_mode: str = Field(default="raw", pattern="^(raw|lognorm)$", description="词频形式")
    sources: Dict[str, SourceIdf] = Field(default_factory=dict)
