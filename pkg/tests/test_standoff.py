"""
standoff 标注读写测试
"""
import logging

import numpy as np
import pytest

from app.core.exceptions import AnnotationParseError, SchemaError, SpanRangeError
from app.models.event import Event, LabeledArgument, SpanOnlyArgument, Trigger
from app.services.corpus_service import build_sample
from app.utils.standoff import char_span_to_tokens, events_to_slots, parse_standoff, serialize_standoff


def _chars(sample, first, last=None):
    """覆盖 first..last 个 token 的字符区间"""
    last = first if last is None else last
    return sample.tokens[first].char_start, sample.tokens[last].char_end


def _drug_event():
    return Event(
        trigger=Trigger(event_type="Drug", token_span=[8]),
        labeled_args=[LabeledArgument(arg_type="Status", token_span=[9], subtype="current")],
        span_args=[SpanOnlyArgument(arg_type="Type", token_span=[7])],
    )


def test_parse_drug_event(example_sample, schema):
    """trigger、labeled Status 与 span-only Type 映射为 token 区间"""
    t1, t2, t3 = _chars(example_sample, 8), _chars(example_sample, 9), _chars(example_sample, 7)
    ann = (
        f"T1\tDrug {t1[0]} {t1[1]}\tcocaine\n"
        f"T2\tStatus {t2[0]} {t2[1]}\tuse\n"
        f"T3\tType {t3[0]} {t3[1]}\tIV\n"
        "E1\tDrug:T1 Status:T2 Type:T3\n"
        "A1\tStatusVal T2 current\n"
    )
    assert parse_standoff(ann, example_sample, schema) == [_drug_event()]


def test_parse_empty_file(example_sample, schema):
    assert parse_standoff("", example_sample, schema) == []


def test_char_span_covering_two_tokens(example_sample):
    start, end = _chars(example_sample, 8, 9)
    assert char_span_to_tokens(example_sample, start, end) == [8, 9]


def test_partial_character_overlap_selects_token(example_sample):
    start, end = _chars(example_sample, 8)
    assert char_span_to_tokens(example_sample, start + 1, end - 1) == [8]


def test_span_outside_text(example_sample):
    with pytest.raises(SpanRangeError):
        char_span_to_tokens(example_sample, 0, len(example_sample.text) + 5)


def test_serialize_empty(example_sample):
    assert serialize_standoff([], example_sample) == ""


def test_serialize_trigger_only(example_sample, schema):
    """只有 trigger 的事件写出一条 T 记录和一条 E 记录"""
    event = Event(trigger=Trigger(event_type="Alcohol", token_span=[1]))
    text = serialize_standoff([event], example_sample)
    lines = text.splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("T1\tAlcohol ")
    assert lines[1] == "E1\tAlcohol:T1"
    assert parse_standoff(text, example_sample, schema) == [event]


def test_serialize_round_trip(example_sample, schema):
    """labeled argument 生成 T+E+A 记录，往返后不变"""
    events = [
        _drug_event(),
        Event(
            trigger=Trigger(event_type="Tobacco", token_span=[5]),
            labeled_args=[LabeledArgument(arg_type="Status", token_span=[4], subtype="past")],
        ),
    ]
    text = serialize_standoff(events, example_sample)
    assert sum(line.startswith("A") for line in text.splitlines()) == 2
    assert parse_standoff(text, example_sample, schema) == events


def test_repeated_span_arguments_round_trip(example_sample, schema):
    event = Event(
        trigger=Trigger(event_type="Drug", token_span=[8]),
        labeled_args=[LabeledArgument(arg_type="Status", token_span=[9], subtype="current")],
        span_args=[
            SpanOnlyArgument(arg_type="Type", token_span=[7]),
            SpanOnlyArgument(arg_type="Type", token_span=[1]),
        ],
    )
    text = serialize_standoff([event], example_sample)
    assert "Type2:T" in text
    assert parse_standoff(text, example_sample, schema) == [event]


def test_unknown_event_type(example_sample, schema):
    ann = "T1\tGambling 0 6\tDenies\nE1\tGambling:T1\n"
    with pytest.raises(SchemaError):
        parse_standoff(ann, example_sample, schema)


def test_unknown_subtype(example_sample, schema):
    ann = "T1\tDrug 38 45\tcocaine\nT2\tStatus 46 49\tuse\nE1\tDrug:T1 Status:T2\nA1\tStatusVal T2 often\n"
    with pytest.raises(SchemaError):
        parse_standoff(ann, example_sample, schema)


def test_labeled_argument_without_subtype(example_sample, schema):
    ann = "T1\tDrug 38 45\tcocaine\nT2\tStatus 46 49\tuse\nE1\tDrug:T1 Status:T2\n"
    with pytest.raises(SchemaError):
        parse_standoff(ann, example_sample, schema)


def test_discontinuous_span_reports_line(example_sample, schema):
    ann = "T1\tDrug 0 6\tDenies\nT2\tType 0 3;7 9\tx\n"
    with pytest.raises(AnnotationParseError) as exc:
        parse_standoff(ann, example_sample, schema)
    assert exc.value.line_no == 2


def test_reference_to_missing_textbound(example_sample, schema):
    ann = "T1\tDrug 38 45\tcocaine\nE1\tDrug:T1 Status:T9\n"
    with pytest.raises(AnnotationParseError):
        parse_standoff(ann, example_sample, schema)


def test_event_record_without_roles(example_sample, schema):
    """E 记录只有空白时报告行号，而不是索引越界"""
    ann = "T1\tTobacco 27 33\tsmoker\nE1\t \n"
    with pytest.raises(AnnotationParseError) as exc:
        parse_standoff(ann, example_sample, schema)
    assert exc.value.line_no == 2


def test_duplicate_attribute_on_same_target(example_sample, schema):
    ann = (
        "T1\tDrug 38 45\tcocaine\nT2\tStatus 46 49\tuse\nE1\tDrug:T1 Status:T2\n"
        "A1\tStatusVal T2 current\nA2\tStatusVal T2 past\n"
    )
    with pytest.raises(AnnotationParseError) as exc:
        parse_standoff(ann, example_sample, schema)
    assert exc.value.line_no == 5


def _random_span(rng, n_tokens):
    start = int(rng.integers(0, n_tokens - 1))
    return list(range(start, start + int(rng.integers(1, 3))))


def _random_events(rng, schema, n_tokens):
    """符合 schema 的随机事件：每个 labeled argument 都有子类型，span-only 论元 0-2 个且可重复"""
    events = []
    for _ in range(int(rng.integers(0, 4))):
        event_type = schema.type_names[int(rng.integers(len(schema.type_names)))]
        spec = schema.event_types[event_type]
        labeled = [
            LabeledArgument(
                arg_type=arg_type,
                token_span=_random_span(rng, n_tokens),
                subtype=arg_spec.labels[int(rng.integers(len(arg_spec.labels)))],
            )
            for arg_type, arg_spec in spec.labeled_args.items()
        ]
        span_args = [
            SpanOnlyArgument(
                arg_type=spec.span_args[int(rng.integers(len(spec.span_args)))],
                token_span=_random_span(rng, n_tokens),
            )
            for _ in range(int(rng.integers(0, 3)))
        ]
        events.append(Event(
            trigger=Trigger(event_type=event_type, token_span=_random_span(rng, n_tokens)),
            labeled_args=labeled,
            span_args=span_args,
        ))
    return events


def test_random_events_round_trip(schema):
    """随机生成的合法事件经写出再解析后保持不变"""
    sample = build_sample("note2#0", " ".join(["word"] * 30))
    rng = np.random.default_rng(11)
    for _ in range(200):
        events = _random_events(rng, schema, sample.n_tokens)
        text = serialize_standoff(events, sample)
        assert parse_standoff(text, sample, schema) == events


def test_ignored_records_are_logged(example_sample, schema, caplog):
    """关系与注释记录被跳过并记录警告"""
    ann = "T1\tAlcohol 7 14\talcohol\nE1\tAlcohol:T1\nR1\tRel Arg1:T1 Arg2:T1\n#1\tNote T1\tfree text\n"
    with caplog.at_level(logging.WARNING):
        events = parse_standoff(ann, example_sample, schema)
    assert len(events) == 1
    assert "忽略" in caplog.text


def test_events_to_slots():
    slots = events_to_slots(_drug_event())
    assert slots.event_type == "Drug"
    assert slots.labeled == {"Status": "current"}
    assert slots.span_only == [("Type", frozenset({7}))]

    bare = events_to_slots(Event(trigger=Trigger(event_type="Drug", token_span=[8])))
    assert bare.labeled == {} and bare.span_only == []


def test_events_to_slots_keeps_instances_separate():
    event = Event(
        trigger=Trigger(event_type="Drug", token_span=[8]),
        span_args=[
            SpanOnlyArgument(arg_type="Type", token_span=[7]),
            SpanOnlyArgument(arg_type="Type", token_span=[1, 2]),
        ],
    )
    assert events_to_slots(event).span_only == [("Type", frozenset({7})), ("Type", frozenset({1, 2}))]


if __name__ == "__main__":
    pytest.main([__file__])
