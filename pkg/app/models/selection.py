"""
批量查询数据模型
"""

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.config import settings


class SelectionConfig(BaseModel):
    """贪心批量选择配置"""
    model_config = ConfigDict(extra="forbid")

    batch_size: int = Field(default=10, ge=1, description="批大小 N")
    alpha: float = Field(default=settings.SELECT_ALPHA, gt=0, description="多样性权重")
    similarity_mode: Literal["average", "maximum"] = Field(default=settings.SELECT_SIMILARITY)
    uncertainty_mode: Literal["sum", "loop"] = Field(default=settings.SELECT_UNCERTAINTY)
    seed: int = Field(default=settings.DEFAULT_SEED)
    rescore_final_batch: bool = Field(default=False, description="为 True 时每个成员的 s_i 相对最终批次重算")


class BatchStep(BaseModel):
    """一次选择的诊断信息"""
    rank: int = Field(..., ge=1)
    sample_id: str
    uncertainty: Optional[float] = Field(default=None, description="u(i)")
    similarity: Optional[float] = Field(default=None, description="选中时的 s_i")
    q_marginal: Optional[float] = Field(default=None, description="Q(B ∪ i) - Q(B)")
    q_total: Optional[float] = Field(default=None, description="选中后的 Q(B)")


class Batch(BaseModel):
    """有序的选中样本"""
    sample_ids: List[str] = Field(default_factory=list)
    steps: List[BatchStep] = Field(default_factory=list)
    strategy: str = Field(default="active", description="active | random")

    @model_validator(mode="after")
    def unique_ids(self) -> "Batch":
        if len(set(self.sample_ids)) != len(self.sample_ids):
            raise ValueError("批次中存在重复样本")
        return self

    def csv_rows(self) -> List[Dict[str, Any]]:
        return [
            {
                "rank": step.rank,
                "sample_id": step.sample_id,
                "u": "" if step.uncertainty is None else repr(step.uncertainty),
                "s": "" if step.similarity is None else repr(step.similarity),
                "q_marginal": "" if step.q_marginal is None else repr(step.q_marginal),
            }
            for step in self.steps
        ]
