"""
模拟实验数据模型
合成语料规格、主动学习循环配置与运行指标
"""

import math
import re
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.event import EventSchema
from app.models.selection import SelectionConfig
from app.models.surrogate import ABSENT, MULTIPLE, TrainConfig


def slug(text: str) -> str:
    """小写字母数字形式，用于生成合成词"""
    return re.sub(r"[^a-z0-9]", "", text.lower())


class ClassSpec(BaseModel):
    """某事件类型的一个样本级类别"""
    model_config = ConfigDict(extra="forbid")

    prevalence: float = Field(..., ge=0.0, le=1.0, description="出现概率")
    cues: List[str] = Field(default_factory=list, description="提示词")
    noise: float = Field(default=0.0, ge=0.0, le=1.0, description="提示词被替换为歧义词的概率")


class EventTypeSynth(BaseModel):
    """单个事件类型的合成规则"""
    model_config = ConfigDict(extra="forbid")

    trigger_cues: List[str] = Field(..., min_length=1)
    classes: Dict[str, ClassSpec] = Field(..., description="显著论元子类型 / multiple / absent -> 规格")
    arg_cues: Dict[str, Dict[str, List[str]]] = Field(default_factory=dict, description="其他 labeled 论元 -> 子类型 -> 提示词")
    span_cues: Dict[str, List[str]] = Field(default_factory=dict, description="span-only 论元 -> 词")
    span_rate: float = Field(default=0.5, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def check_classes(self) -> "EventTypeSynth":
        total = sum(c.prevalence for c in self.classes.values())
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise ValueError(f"类别出现概率之和必须为 1，实际 {total}")
        for name, spec in self.classes.items():
            if name not in (ABSENT, MULTIPLE) and not spec.cues:
                raise ValueError(f"类别 {name} 至少需要一个提示词")
        return self


class SyntheticSpec(BaseModel):
    """合成语料规格"""
    model_config = ConfigDict(extra="forbid")

    event_types: Dict[str, EventTypeSynth]
    n_samples: int = Field(default=200, ge=1)
    filler_vocab_size: int = Field(default=200, ge=1)
    filler_per_sentence: Tuple[int, int] = Field(default=(2, 6))
    extra_sentences: Tuple[int, int] = Field(default=(0, 2), description="每个样本额外的无事件句子数范围")
    ambiguous_word: str = Field(default="unclear")
    embedding_dim: int = Field(default=16, ge=1)
    source: str = Field(default="synthetic")
    seed: int = Field(default=13)

    @classmethod
    def default(
        cls,
        schema: EventSchema,
        n_samples: int = 200,
        rare_rate: float = 0.1,
        rare_noise: float = 0.5,
        absent_rate: float = 0.5,
        seed: int = 13,
    ) -> "SyntheticSpec":
        """
        每个事件类型：absent 占 absent_rate，显著论元最后一个子类型为稀有类
        （出现率 rare_rate，提示词噪声 rare_noise），其余子类型平分剩余概率
        """
        event_types = {}
        for event_type, type_spec in schema.event_types.items():
            et = slug(event_type)
            salient = type_spec.labeled_args.get(type_spec.salient_arg)
            labels = list(salient.labels) if salient else []
            classes = {ABSENT: ClassSpec(prevalence=absent_rate if labels else 1.0)}
            if labels:
                rare = labels[-1]
                common = labels[:-1]
                rest = 1.0 - absent_rate - (rare_rate if common else 0.0)
                for label in common:
                    classes[label] = ClassSpec(prevalence=rest / len(common), cues=[f"{et}{slug(label)}"])
                classes[rare] = ClassSpec(
                    prevalence=rare_rate if common else 1.0 - absent_rate,
                    cues=[f"{et}{slug(rare)}"],
                    noise=rare_noise,
                )
            arg_cues = {
                arg: {label: [f"{et}{slug(arg)}{slug(label)}"] for label in arg_spec.labels}
                for arg, arg_spec in type_spec.labeled_args.items()
                if arg != type_spec.salient_arg
            }
            span_cues = {arg: [f"{et}{slug(arg)}"] for arg in type_spec.span_args}
            event_types[event_type] = EventTypeSynth(
                trigger_cues=[f"{et}trig"],
                classes=classes,
                arg_cues=arg_cues,
                span_cues=span_cues,
            )
        return cls(event_types=event_types, n_samples=n_samples, seed=seed)


class CycleConfig(BaseModel):
    """主动学习循环配置"""
    model_config = ConfigDict(extra="forbid")

    seed_size: int = Field(default=100, ge=1, description="初始随机标注集大小")
    rounds: int = Field(default=1, ge=0)
    batch_size: int = Field(default=100, ge=1, description="每轮选择的样本数")
    eval_size: int = Field(default=100, ge=1, description="留出评估集大小")
    selection: SelectionConfig = Field(default_factory=SelectionConfig)
    surrogate: TrainConfig = Field(default_factory=TrainConfig)
    extractor: Optional[TrainConfig] = Field(default=None, description="设置后每轮在 L 上训练抽取器并在评估集上打分")
    seed: int = Field(default=13)


class RoundMetrics(BaseModel):
    """一轮结束后的指标"""
    round: int = Field(..., ge=0)
    n_labeled: int
    selected_ids: List[str] = Field(default_factory=list)
    surrogate_f1: float = Field(..., description="评估集上非 absent 类别的 micro F1")
    surrogate_f1_by_type: Dict[str, float] = Field(default_factory=dict)
    extractor_f1: Optional[float] = Field(default=None, description="抽取器在评估集上的总体 micro F1")
    extractor_f1_by_level: Dict[str, float] = Field(default_factory=dict, description="trigger / labeled / span_only / overall")
    truncated: bool = Field(default=False, description="样本池不足，本轮批次被截断")


class RunMetrics(BaseModel):
    """一条实验轨道（active 或 random）的完整记录"""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    strategy: str
    seed: int
    eval_size: int
    rounds: List[RoundMetrics] = Field(default_factory=list)
    selected_label_frequency: Dict[str, float] = Field(default_factory=dict, description="选中样本的每样本标签频率")
    truncated: bool = False

    @property
    def final_f1(self) -> float:
        return self.rounds[-1].surrogate_f1 if self.rounds else 0.0


class WelchSummary(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    t: float
    df: float
    p_two_sided: float


class ExperimentReport(BaseModel):
    """多种子配对实验：active vs random"""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    seeds: List[int]
    active_f1: List[float]
    random_f1: List[float]
    active_wins: int = Field(..., description="active F1 >= random F1 的种子数")
    welch: Optional[WelchSummary] = None
    enrichment: List[Dict[str, float]] = Field(default_factory=list, description="每个种子的富集比表")
    runs: List[RunMetrics] = Field(default_factory=list)
