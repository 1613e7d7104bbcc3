"""
slot filling 评估

同一事件类型的 trigger 在样本内按区间中心最近原则对齐；对齐事件的 labeled
argument 按 (arg_type, subtype) 匹配；span-only 论元按 token 集合比较。
计数均为整数且可结合，样本级评估的顺序不影响结果。
"""
import logging
from collections import defaultdict
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from app.core.exceptions import UndefinedKappaError
from app.models.corpus import Sample
from app.models.event import AnnotationSet, Event, EventSchema
from app.models.score import (
    AgreementReport,
    AlignedPair,
    KappaReport,
    ScoreEntry,
    ScoreReport,
    Tally,
)

logger = logging.getLogger(__name__)

Key = Tuple[str, ...]


def align_triggers(gold: Sequence[Event], pred: Sequence[Event], event_type: str) -> List[AlignedPair]:
    """按 (中心距离, gold 起点, pred 起点) 贪心一对一匹配"""
    candidates = []
    for gi, g in enumerate(gold):
        if g.event_type != event_type:
            continue
        for pi, p in enumerate(pred):
            if p.event_type != event_type:
                continue
            distance = abs(g.trigger.center - p.trigger.center)
            candidates.append((distance, g.trigger.token_span[0], p.trigger.token_span[0], gi, pi))
    candidates.sort()

    used_gold: Set[int] = set()
    used_pred: Set[int] = set()
    pairs: List[AlignedPair] = []
    for distance, _, _, gi, pi in candidates:
        if gi in used_gold or pi in used_pred:
            continue
        used_gold.add(gi)
        used_pred.add(pi)
        pairs.append(AlignedPair(gold_event_index=gi, pred_event_index=pi, event_type=event_type, center_distance=distance))
    return pairs


def align_sample(gold: Sequence[Event], pred: Sequence[Event]) -> List[AlignedPair]:
    """对任一侧出现的每个事件类型做对齐"""
    types = sorted({e.event_type for e in gold} | {e.event_type for e in pred})
    return [pair for event_type in types for pair in align_triggers(gold, pred, event_type)]


def _sample_ids(gold: AnnotationSet, pred: AnnotationSet) -> List[str]:
    return sorted(set(gold) | set(pred))


def _bump(tallies: Dict[Key, Tally], key: Key, tp: int = 0, fp: int = 0, fn: int = 0) -> None:
    if tp or fp or fn:
        tallies[key] = tallies.get(key, Tally()) + Tally(tp=tp, fp=fp, fn=fn)


def micro_average(tallies: Mapping[Key, Tally], level: str = "overall") -> ScoreReport:
    """跨 key 累加计数并重新计算 P/R/F1"""
    total = Tally()
    for tally in tallies.values():
        total = total + tally
    entries = [ScoreEntry(key=key, tally=tallies[key]) for key in sorted(tallies)]
    return ScoreReport(level=level, entries=entries, micro=ScoreEntry(key=("micro",), tally=total))


def score_triggers(gold: AnnotationSet, pred: AnnotationSet) -> ScoreReport:
    tallies: Dict[Key, Tally] = {}
    for sample_id in _sample_ids(gold, pred):
        g_events, p_events = gold.get(sample_id, []), pred.get(sample_id, [])
        pairs = align_sample(g_events, p_events)
        matched_gold = {pair.gold_event_index for pair in pairs}
        matched_pred = {pair.pred_event_index for pair in pairs}
        for pair in pairs:
            _bump(tallies, (pair.event_type,), tp=1)
        for gi, event in enumerate(g_events):
            if gi not in matched_gold:
                _bump(tallies, (event.event_type,), fn=1)
        for pi, event in enumerate(p_events):
            if pi not in matched_pred:
                _bump(tallies, (event.event_type,), fp=1)
    return micro_average(tallies, level="trigger")


def _labeled_map(event: Event) -> Dict[str, str]:
    return {arg.arg_type: arg.subtype for arg in event.labeled_args}


def score_labeled_args(gold: AnnotationSet, pred: AnnotationSet) -> ScoreReport:
    """labeled argument：trigger 已对齐且 (arg_type, subtype) 相同记为 TP，不看区间"""
    tallies: Dict[Key, Tally] = {}
    for sample_id in _sample_ids(gold, pred):
        g_events, p_events = gold.get(sample_id, []), pred.get(sample_id, [])
        pairs = align_sample(g_events, p_events)

        for pair in pairs:
            g_args = _labeled_map(g_events[pair.gold_event_index])
            p_args = _labeled_map(p_events[pair.pred_event_index])
            for arg_type in sorted(set(g_args) | set(p_args)):
                g_sub, p_sub = g_args.get(arg_type), p_args.get(arg_type)
                if g_sub is not None and g_sub == p_sub:
                    _bump(tallies, (pair.event_type, arg_type, g_sub), tp=1)
                    continue
                if g_sub is not None:
                    _bump(tallies, (pair.event_type, arg_type, g_sub), fn=1)
                if p_sub is not None:
                    _bump(tallies, (pair.event_type, arg_type, p_sub), fp=1)

        matched_gold = {pair.gold_event_index for pair in pairs}
        matched_pred = {pair.pred_event_index for pair in pairs}
        for gi, event in enumerate(g_events):
            if gi not in matched_gold:
                for arg in event.labeled_args:
                    _bump(tallies, (event.event_type, arg.arg_type, arg.subtype), fn=1)
        for pi, event in enumerate(p_events):
            if pi not in matched_pred:
                for arg in event.labeled_args:
                    _bump(tallies, (event.event_type, arg.arg_type, arg.subtype), fp=1)
    return micro_average(tallies, level="labeled")


def _span_tokens(event: Event) -> Dict[str, Set[int]]:
    """每个 span-only arg_type 的 token 集合并集"""
    tokens: Dict[str, Set[int]] = defaultdict(set)
    for arg in event.span_args:
        tokens[arg.arg_type].update(arg.token_span)
    return tokens


def score_span_args(gold: AnnotationSet, pred: AnnotationSet) -> ScoreReport:
    """span-only 论元按 token 级别计分"""
    tallies: Dict[Key, Tally] = {}
    for sample_id in _sample_ids(gold, pred):
        g_events, p_events = gold.get(sample_id, []), pred.get(sample_id, [])
        pairs = align_sample(g_events, p_events)

        for pair in pairs:
            g_tokens = _span_tokens(g_events[pair.gold_event_index])
            p_tokens = _span_tokens(p_events[pair.pred_event_index])
            for arg_type in sorted(set(g_tokens) | set(p_tokens)):
                G, P = g_tokens.get(arg_type, set()), p_tokens.get(arg_type, set())
                _bump(tallies, (pair.event_type, arg_type), tp=len(G & P), fp=len(P - G), fn=len(G - P))

        matched_gold = {pair.gold_event_index for pair in pairs}
        matched_pred = {pair.pred_event_index for pair in pairs}
        for gi, event in enumerate(g_events):
            if gi not in matched_gold:
                for arg_type, tokens in _span_tokens(event).items():
                    _bump(tallies, (event.event_type, arg_type), fn=len(tokens))
        for pi, event in enumerate(p_events):
            if pi not in matched_pred:
                for arg_type, tokens in _span_tokens(event).items():
                    _bump(tallies, (event.event_type, arg_type), fp=len(tokens))
    return micro_average(tallies, level="span_only")


def score_all(gold: AnnotationSet, pred: AnnotationSet) -> Dict[str, ScoreReport]:
    """trigger / labeled / span_only 三级报告及总体 micro 汇总"""
    reports = {
        "trigger": score_triggers(gold, pred),
        "labeled": score_labeled_args(gold, pred),
        "span_only": score_span_args(gold, pred),
    }
    reports["overall"] = micro_average({(level,): report.micro.tally for level, report in reports.items()})
    return reports


def kappa_from_counts(n00: int, n01: int, n10: int, n11: int) -> Tuple[float, float, float]:
    """
    由 2x2 存在性列联表计算 Cohen's kappa

    n01: A 无 B 有；n10: A 有 B 无。
    返回 (p_o, p_e, kappa)；p_e = 1 时 kappa 记为 1
    """
    n = n00 + n01 + n10 + n11
    if n == 0:
        raise UndefinedKappaError("没有句子，kappa 无定义")
    p_o = (n00 + n11) / n
    a_yes = (n10 + n11) / n
    b_yes = (n01 + n11) / n
    p_e = a_yes * b_yes + (1.0 - a_yes) * (1.0 - b_yes)
    if p_e >= 1.0:
        return p_o, p_e, 1.0
    return p_o, p_e, (p_o - p_e) / (1.0 - p_e)


def _sentence_counts(sample: Sample, events: Iterable[Event], event_type: str) -> List[int]:
    counts = [0] * len(sample.sentence_bounds)
    for event in events:
        if event.event_type == event_type:
            counts[sample.sentence_of(event.trigger.token_span[0])] += 1
    return counts


def cohens_kappa(annA: AnnotationSet, annB: AnnotationSet, samples: Sequence[Sample], event_type: str) -> KappaReport:
    """
    句子级 trigger 存在性 kappa

    任一侧在句中有两个及以上该类型 trigger 的句子被排除，保留比例记为
    coverage_fraction
    """
    n00 = n01 = n10 = n11 = 0
    total = excluded = 0
    for sample in samples:
        counts_a = _sentence_counts(sample, annA.get(sample.id, []), event_type)
        counts_b = _sentence_counts(sample, annB.get(sample.id, []), event_type)
        for a, b in zip(counts_a, counts_b):
            total += 1
            if a >= 2 or b >= 2:
                excluded += 1
                continue
            if a and b:
                n11 += 1
            elif a:
                n10 += 1
            elif b:
                n01 += 1
            else:
                n00 += 1

    if total == excluded:
        raise UndefinedKappaError(f"{event_type}: 没有可用的句子")
    p_o, p_e, kappa = kappa_from_counts(n00, n01, n10, n11)
    return KappaReport(
        event_type=event_type,
        n00=n00, n01=n01, n10=n10, n11=n11,
        p_o=p_o, p_e=p_e, kappa=kappa,
        coverage_fraction=(total - excluded) / total,
        excluded_sentences=excluded,
    )


def agreement_report(
    annA: AnnotationSet,
    annB: AnnotationSet,
    samples: Sequence[Sample],
    schema: EventSchema,
) -> AgreementReport:
    """每个事件类型的 trigger kappa，以及以 A 为参照的完整结构 F1"""
    kappas: Dict[str, Optional[KappaReport]] = {}
    for event_type in schema.type_names:
        try:
            kappas[event_type] = cohens_kappa(annA, annB, samples, event_type)
        except UndefinedKappaError as e:
            logger.warning(f"{e}")
            kappas[event_type] = None
    return AgreementReport(kappa=kappas, f1=score_all(annA, annB))
