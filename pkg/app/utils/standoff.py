"""
standoff（brat 风格）标注读写

记录格式:
    T<id>\t<Label> <charStart> <charEnd>\t<text>
    E<id>\t<TriggerLabel>:T<id> (<ArgName><序号?>:T<id>)*
    A<id>\t<AttrName> T<id> <value>

labeled argument 的子类型挂在论元 text-bound 上的 A 记录里。
关系、归一化和注释记录会被忽略。
"""
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from app.core.config import settings
from app.core.exceptions import AnnotationParseError, SchemaError, SpanRangeError
from app.models.corpus import Sample
from app.models.event import (
    Event,
    EventSchema,
    LabeledArgument,
    SlotRecord,
    SpanOnlyArgument,
    Trigger,
)

logger = logging.getLogger(__name__)

_TEXTBOUND = re.compile(r"^(T\d+)\t(\S+) (\d+) (\d+)\t?(.*)$")
_EVENT = re.compile(r"^(E\d+)\t(.+)$")
_ATTRIBUTE = re.compile(r"^(A\d+)\t(\S+) ([TE]\d+)(?: (\S+))?$")
_ROLE = re.compile(r"^([A-Za-z_\-]+?)(\d*):([TE]\d+)$")
_IGNORED_PREFIXES = ("R", "N", "#", "*", "M")


@dataclass
class _TextBound:
    label: str
    start: int
    end: int
    line_no: int


@dataclass
class _EventRecord:
    trigger_label: str
    trigger_id: str
    roles: List[Tuple[str, str]] = field(default_factory=list)
    line_no: int = 0


def load_schema(path: Optional[Union[str, Path]] = None) -> EventSchema:
    """加载事件 schema JSON（默认使用内置 schema）"""
    schema_path = Path(path or settings.DEFAULT_SCHEMA_PATH)
    return EventSchema.model_validate_json(schema_path.read_text(encoding="utf-8"))


def char_span_to_tokens(sample: Sample, char_start: int, char_end: int) -> List[int]:
    """字符区间映射到所有与之重叠的 token"""
    if char_start < 0 or char_end > len(sample.text) or char_start >= char_end:
        raise SpanRangeError(
            f"{sample.id}: 区间 [{char_start}, {char_end}) 超出文本长度 {len(sample.text)}"
        )
    covered = [
        token.index for token in sample.tokens
        if token.char_start < char_end and token.char_end > char_start
    ]
    if not covered:
        raise SpanRangeError(f"{sample.id}: 区间 [{char_start}, {char_end}) 未覆盖任何 token")
    return covered


def _parse_records(ann_text: str):
    textbounds: Dict[str, _TextBound] = {}
    events: List[_EventRecord] = []
    attributes: Dict[str, Tuple[str, Optional[str], int]] = {}

    for line_no, raw in enumerate(ann_text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        if line.startswith("T"):
            fields = line.split("\t")
            if len(fields) > 1 and ";" in fields[1]:
                raise AnnotationParseError("不支持不连续区间", line_no)
            m = _TEXTBOUND.match(line)
            if m is None:
                raise AnnotationParseError(f"text-bound 记录格式错误: {line!r}", line_no)
            tb_id, label, start, end = m.group(1), m.group(2), int(m.group(3)), int(m.group(4))
            if tb_id in textbounds:
                raise AnnotationParseError(f"重复的记录 ID {tb_id}", line_no)
            textbounds[tb_id] = _TextBound(label, start, end, line_no)
        elif line.startswith("E"):
            m = _EVENT.match(line)
            if m is None:
                raise AnnotationParseError(f"事件记录格式错误: {line!r}", line_no)
            parts = m.group(2).split()
            roles = []
            for part in parts:
                role = _ROLE.match(part)
                if role is None:
                    raise AnnotationParseError(f"事件角色格式错误 {part!r}", line_no)
                roles.append((role.group(1), role.group(3)))
            if not roles:
                raise AnnotationParseError("事件记录缺少 trigger", line_no)
            trigger_label, trigger_id = roles[0]
            events.append(_EventRecord(trigger_label, trigger_id, roles[1:], line_no))
        elif line.startswith("A"):
            m = _ATTRIBUTE.match(line)
            if m is None:
                raise AnnotationParseError(f"属性记录格式错误: {line!r}", line_no)
            if m.group(3) in attributes:
                raise AnnotationParseError(f"{m.group(3)} 上有重复的属性", line_no)
            attributes[m.group(3)] = (m.group(2), m.group(4), line_no)
        elif line.startswith(_IGNORED_PREFIXES):
            logger.warning(f"第 {line_no} 行: 忽略不支持的记录 {line.split()[0]}")
        else:
            raise AnnotationParseError(f"未知的记录类型: {line!r}", line_no)

    return textbounds, events, attributes


def parse_standoff(ann_text: str, sample: Sample, schema: EventSchema) -> List[Event]:
    """将单个样本的 standoff 记录解析为符合 schema 的事件"""
    textbounds, records, attributes = _parse_records(ann_text)

    def tokens_of(tb_id: str, line_no: int) -> List[int]:
        if tb_id not in textbounds:
            raise AnnotationParseError(f"引用了不存在的 text-bound {tb_id}", line_no)
        tb = textbounds[tb_id]
        return char_span_to_tokens(sample, tb.start, tb.end)

    events: List[Event] = []
    for record in records:
        event_type = record.trigger_label
        if event_type not in schema.event_types:
            raise SchemaError(f"第 {record.line_no} 行: 未知的事件类型 {event_type}")
        type_spec = schema.event_types[event_type]

        trigger = Trigger(event_type=event_type, token_span=tokens_of(record.trigger_id, record.line_no))
        labeled: List[LabeledArgument] = []
        span_only: List[SpanOnlyArgument] = []
        for arg_type, tb_id in record.roles:
            span = tokens_of(tb_id, record.line_no)
            attribute = attributes.get(tb_id)
            if arg_type in type_spec.labeled_args:
                if attribute is None or attribute[1] is None:
                    raise SchemaError(f"第 {record.line_no} 行: {event_type}.{arg_type} 缺少子类型")
                subtype = attribute[1]
                if subtype not in type_spec.labeled_args[arg_type].labels:
                    raise SchemaError(f"第 {record.line_no} 行: {event_type}.{arg_type} 的子类型 {subtype!r} 未定义")
                if any(a.arg_type == arg_type for a in labeled):
                    raise SchemaError(f"第 {record.line_no} 行: 重复的 {event_type}.{arg_type}")
                labeled.append(LabeledArgument(arg_type=arg_type, token_span=span, subtype=subtype))
            elif arg_type in type_spec.span_args:
                if attribute is not None:
                    raise SchemaError(f"第 {record.line_no} 行: {event_type}.{arg_type} 不接受子类型")
                span_only.append(SpanOnlyArgument(arg_type=arg_type, token_span=span))
            else:
                raise SchemaError(f"第 {record.line_no} 行: {event_type} 没有论元 {arg_type}")

        missing = [a for a, spec in type_spec.labeled_args.items() if spec.required and a not in {x.arg_type for x in labeled}]
        if missing:
            logger.warning(f"{sample.id} 第 {record.line_no} 行: {event_type} 缺少必填论元 {missing}")
        events.append(Event(trigger=trigger, labeled_args=labeled, span_args=span_only))

    return events


def _textbound_line(tb_num: int, label: str, sample: Sample, span: List[int]) -> str:
    if span[-1] >= sample.n_tokens:
        raise SpanRangeError(f"{sample.id}: token {span[-1]} 越界（共 {sample.n_tokens} 个 token）")
    start = sample.tokens[span[0]].char_start
    end = sample.tokens[span[-1]].char_end
    text = " ".join(sample.text[start:end].split())
    return f"T{tb_num}\t{label} {start} {end}\t{text}"


def _role_name(arg_type: str, seen: Counter) -> str:
    """重复的论元名加序号后缀: Type, Type2, ..."""
    seen[arg_type] += 1
    return arg_type if seen[arg_type] == 1 else f"{arg_type}{seen[arg_type]}"


def serialize_standoff(events: List[Event], sample: Sample) -> str:
    """序列化事件，记录 ID 从 1 重新编号"""
    lines: List[str] = []
    tb_num = attr_num = 0
    for event_num, event in enumerate(events, start=1):
        tb_num += 1
        lines.append(_textbound_line(tb_num, event.event_type, sample, event.trigger.token_span))
        roles = [f"{event.event_type}:T{tb_num}"]
        attr_lines = []
        seen: Counter = Counter()

        for arg in event.labeled_args:
            tb_num += 1
            attr_num += 1
            lines.append(_textbound_line(tb_num, arg.arg_type, sample, arg.token_span))
            roles.append(f"{_role_name(arg.arg_type, seen)}:T{tb_num}")
            attr_lines.append(f"A{attr_num}\t{arg.arg_type}Val T{tb_num} {arg.subtype}")
        for arg in event.span_args:
            tb_num += 1
            lines.append(_textbound_line(tb_num, arg.arg_type, sample, arg.token_span))
            roles.append(f"{_role_name(arg.arg_type, seen)}:T{tb_num}")
        lines.append(f"E{event_num}\t{' '.join(roles)}")
        lines.extend(attr_lines)
    return "\n".join(lines) + ("\n" if lines else "")


def events_to_slots(event: Event) -> SlotRecord:
    """事件的规范 slot 视图"""
    return SlotRecord(
        event_type=event.event_type,
        labeled={arg.arg_type: arg.subtype for arg in event.labeled_args},
        span_only=[(arg.arg_type, frozenset(arg.token_span)) for arg in event.span_args],
    )
