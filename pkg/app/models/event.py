"""
事件数据模型
Trigger + labeled arguments + span-only arguments，以及事件 schema
"""

from typing import Dict, FrozenSet, List, Tuple
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def _check_contiguous(span: List[int]) -> List[int]:
    if not span:
        raise ValueError("token_span 不能为空")
    for a, b in zip(span, span[1:]):
        if b != a + 1:
            raise ValueError(f"token_span 必须连续且递增: {span}")
    if span[0] < 0:
        raise ValueError(f"token_span 包含负数: {span}")
    return span


class Trigger(BaseModel):
    """触发词：事件类型 + token 区间"""
    model_config = ConfigDict(frozen=True)

    event_type: str = Field(..., description="事件类型，如 Drug")
    token_span: List[int] = Field(..., description="连续的 token 序号")

    @field_validator("token_span")
    @classmethod
    def check_span(cls, value: List[int]) -> List[int]:
        return _check_contiguous(value)

    @property
    def center(self) -> float:
        return (self.token_span[0] + self.token_span[-1]) / 2.0


class LabeledArgument(BaseModel):
    """带子类型的论元，如 Status=current"""
    model_config = ConfigDict(frozen=True)

    arg_type: str = Field(..., description="论元类型")
    token_span: List[int] = Field(..., description="连续的 token 序号")
    subtype: str = Field(..., description="子类型标签")

    @field_validator("token_span")
    @classmethod
    def check_span(cls, value: List[int]) -> List[int]:
        return _check_contiguous(value)


class SpanOnlyArgument(BaseModel):
    """仅有区间的论元，如 Amount"""
    model_config = ConfigDict(frozen=True)

    arg_type: str = Field(..., description="论元类型")
    token_span: List[int] = Field(..., description="连续的 token 序号")

    @field_validator("token_span")
    @classmethod
    def check_span(cls, value: List[int]) -> List[int]:
        return _check_contiguous(value)


class Event(BaseModel):
    """事件"""
    model_config = ConfigDict(frozen=True)

    trigger: Trigger
    labeled_args: List[LabeledArgument] = Field(default_factory=list)
    span_args: List[SpanOnlyArgument] = Field(default_factory=list)

    @model_validator(mode="after")
    def unique_labeled(self) -> "Event":
        seen = set()
        for arg in self.labeled_args:
            if arg.arg_type in seen:
                raise ValueError(f"事件 {self.trigger.event_type} 中重复的 labeled argument: {arg.arg_type}")
            seen.add(arg.arg_type)
        return self

    @property
    def event_type(self) -> str:
        return self.trigger.event_type

    def max_token(self) -> int:
        spans = [self.trigger.token_span] + [a.token_span for a in self.labeled_args] + [a.token_span for a in self.span_args]
        return max(span[-1] for span in spans)


class SlotRecord(BaseModel):
    """事件的 slot 视图（用于 slot filling 评估）"""
    model_config = ConfigDict(frozen=True)

    event_type: str
    labeled: Dict[str, str] = Field(default_factory=dict, description="arg_type -> subtype")
    span_only: List[Tuple[str, FrozenSet[int]]] = Field(default_factory=list, description="每个 span-only 论元实例的 token 集合")


# sample_id -> events
AnnotationSet = Dict[str, List[Event]]


class LabeledArgSpec(BaseModel):
    """labeled argument 定义"""
    labels: List[str] = Field(..., min_length=1, description="子类型集合 y_l")
    required: bool = Field(default=False, description="是否必填")


class EventTypeSpec(BaseModel):
    """单个事件类型的定义"""
    labeled_args: Dict[str, LabeledArgSpec] = Field(default_factory=dict)
    span_args: List[str] = Field(default_factory=list)
    salient_arg: str = Field(default="Status", description="代理分类器使用的显著论元")

    @model_validator(mode="after")
    def check_salient(self) -> "EventTypeSpec":
        if self.labeled_args and self.salient_arg not in self.labeled_args:
            raise ValueError(f"salient_arg {self.salient_arg} 不是 labeled argument")
        return self


class EventSchema(BaseModel):
    """事件 schema（事件类型、论元类型、标签集合）"""
    event_types: Dict[str, EventTypeSpec] = Field(..., min_length=1)

    @property
    def type_names(self) -> List[str]:
        """按配置顺序排列的事件类型"""
        return list(self.event_types.keys())

    def labeled_heads(self) -> List[Tuple[str, str]]:
        """所有 (event_type, arg_type) labeled argument 组合，按配置顺序"""
        return [
            (event_type, arg_type)
            for event_type, spec in self.event_types.items()
            for arg_type in spec.labeled_args
        ]

    def label_set(self, event_type: str, arg_type: str) -> List[str]:
        return self.event_types[event_type].labeled_args[arg_type].labels
