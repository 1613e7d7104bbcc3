"""
评估结果数据模型
TP/FP/FN 统计、P/R/F1 报告、Cohen's kappa 报告
"""

from typing import Any, Dict, List, Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field, computed_field


def _ratio(numerator: int, denominator: int) -> float:
    """0/0 记为 0"""
    return numerator / denominator if denominator else 0.0


class Tally(BaseModel):
    """TP / FP / FN 计数"""
    model_config = ConfigDict(frozen=True)

    tp: int = Field(default=0, ge=0)
    fp: int = Field(default=0, ge=0)
    fn: int = Field(default=0, ge=0)

    def __add__(self, other: "Tally") -> "Tally":
        return Tally(tp=self.tp + other.tp, fp=self.fp + other.fp, fn=self.fn + other.fn)

    @computed_field
    @property
    def precision(self) -> float:
        return _ratio(self.tp, self.tp + self.fp)

    @computed_field
    @property
    def recall(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    @computed_field
    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if (p + r) > 0 else 0.0


class ScoreEntry(BaseModel):
    """单个 key 的评估结果，key 为 (event_type[, arg_type[, subtype]])"""
    key: Tuple[str, ...] = Field(..., description="统计 key")
    tally: Tally = Field(default_factory=Tally)

    @property
    def precision(self) -> float:
        return self.tally.precision

    @property
    def recall(self) -> float:
        return self.tally.recall

    @property
    def f1(self) -> float:
        return self.tally.f1


class ScoreReport(BaseModel):
    """某一粒度（trigger / labeled / span_only）的评估报告"""
    level: str = Field(..., description="trigger | labeled | span_only | overall")
    entries: List[ScoreEntry] = Field(default_factory=list, description="按 key 排序的结果")
    micro: ScoreEntry = Field(..., description="micro 平均")

    def get(self, *key: str) -> ScoreEntry:
        """按 key 查询，不存在时返回全零结果"""
        for entry in self.entries:
            if entry.key == tuple(key):
                return entry
        return ScoreEntry(key=tuple(key))

    def tallies(self) -> Dict[Tuple[str, ...], Tally]:
        return {entry.key: entry.tally for entry in self.entries}

    def csv_rows(self) -> List[Dict[str, Any]]:
        """扁平化为 CSV 行"""
        rows = []
        for entry in self.entries + [self.micro]:
            padded = list(entry.key) + [""] * (3 - len(entry.key))
            rows.append({
                "level": self.level,
                "event_type": padded[0],
                "arg_type": padded[1],
                "subtype": padded[2],
                "tp": entry.tally.tp,
                "fp": entry.tally.fp,
                "fn": entry.tally.fn,
                "precision": round(entry.precision, 6),
                "recall": round(entry.recall, 6),
                "f1": round(entry.f1, 6),
            })
        return rows


class AlignedPair(BaseModel):
    """对齐的 trigger 对"""
    model_config = ConfigDict(frozen=True)

    gold_event_index: int
    pred_event_index: int
    event_type: str
    center_distance: float = Field(..., ge=0.0)


class KappaReport(BaseModel):
    """单个事件类型的 trigger Cohen's kappa"""
    event_type: str
    n00: int = Field(default=0, ge=0, description="两者都未标注")
    n01: int = Field(default=0, ge=0, description="A 无 B 有")
    n10: int = Field(default=0, ge=0, description="A 有 B 无")
    n11: int = Field(default=0, ge=0, description="两者都有")
    p_o: float
    p_e: float
    kappa: float
    coverage_fraction: float = Field(..., ge=0.0, le=1.0, description="纳入计算的句子比例")
    excluded_sentences: int = Field(default=0, ge=0)


class AgreementReport(BaseModel):
    """标注一致性报告：kappa + 完整事件结构 F1"""
    kappa: Dict[str, Optional[KappaReport]] = Field(default_factory=dict)
    f1: Dict[str, ScoreReport] = Field(default_factory=dict)
