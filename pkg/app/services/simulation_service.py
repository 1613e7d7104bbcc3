"""
模拟实验服务

合成语料生成、主动学习循环（annotate -> train -> select）以及
active / random 两条轨道的配对比较。
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import ForgeError, SchemaError
from app.models.corpus import Sample
from app.models.event import AnnotationSet, Event, EventSchema, LabeledArgument, SpanOnlyArgument, Trigger
from app.models.simulation import (
    CycleConfig,
    ExperimentReport,
    RoundMetrics,
    RunMetrics,
    SyntheticSpec,
    WelchSummary,
)
from app.models.surrogate import ABSENT, MULTIPLE
from app.services.corpus_service import build_sample
from app.services.embedding_service import EmbeddingTable, random_embeddings
from app.services.extractor_service import predict_annotations, train_extractor
from app.services.scoring_service import score_all
from app.services.selection_service import greedy_select, random_select
from app.services.surrogate_service import (
    LabelTable,
    labels_from_annotations,
    predict_profiles,
    surrogate_classes,
    surrogate_f1,
    train_surrogate,
)
from app.services.vector_service import SampleVector, fit_tfidf, vectorize_samples
from app.utils.stats import enrichment, label_frequencies, welch_t

logger = logging.getLogger(__name__)

SUBSTANCE_TYPES = ("Alcohol", "Drug", "Tobacco")
POSITIVE_STATUS = ("current", "past")


@dataclass
class SyntheticCorpus:
    samples: List[Sample]
    annotations: AnnotationSet
    labels: LabelTable
    embeddings: EmbeddingTable

    def by_id(self) -> Dict[str, Sample]:
        return {s.id: s for s in self.samples}


class _SampleBuilder:
    """逐词拼接样本文本，同时记录 token 序号"""

    def __init__(self):
        self.words: List[str] = []

    def add(self, words: Sequence[str]) -> List[int]:
        start = len(self.words)
        self.words.extend(words)
        return list(range(start, len(self.words)))


def _fillers(spec: SyntheticSpec, rng: np.random.Generator) -> List[str]:
    low, high = spec.filler_per_sentence
    count = int(rng.integers(low, high + 1))
    return [f"w{int(i)}" for i in rng.integers(0, spec.filler_vocab_size, size=count)]


def _plant_event(
    builder: _SampleBuilder,
    event_type: str,
    subtype: str,
    spec: SyntheticSpec,
    schema: EventSchema,
    rng: np.random.Generator,
    noisy: bool,
) -> Event:
    """写入一个含事件的句子并返回对应的 gold 事件"""
    synth = spec.event_types[event_type]
    type_spec = schema.event_types[event_type]

    builder.add(_fillers(spec, rng))
    trigger = builder.add([synth.trigger_cues[int(rng.integers(len(synth.trigger_cues)))]])

    labeled = []
    salient_cues = synth.classes[subtype].cues
    cue = spec.ambiguous_word if noisy else salient_cues[int(rng.integers(len(salient_cues)))]
    labeled.append(LabeledArgument(arg_type=type_spec.salient_arg, token_span=builder.add([cue]), subtype=subtype))
    for arg, by_label in synth.arg_cues.items():
        label = sorted(by_label)[int(rng.integers(len(by_label)))]
        words = by_label[label]
        labeled.append(LabeledArgument(
            arg_type=arg,
            token_span=builder.add([words[int(rng.integers(len(words)))]]),
            subtype=label,
        ))

    span_args = []
    if synth.span_cues and rng.random() < synth.span_rate:
        arg = sorted(synth.span_cues)[int(rng.integers(len(synth.span_cues)))]
        length = int(rng.integers(1, 3))
        span_args.append(SpanOnlyArgument(arg_type=arg, token_span=builder.add([synth.span_cues[arg][0]] * length)))

    builder.add(_fillers(spec, rng) + ["."])
    return Event(trigger=Trigger(event_type=event_type, token_span=trigger), labeled_args=labeled, span_args=span_args)


def generate_corpus(spec: SyntheticSpec, schema: EventSchema) -> SyntheticCorpus:
    """
    生成合成语料

    每个样本按各事件类型的类别出现概率抽取类别并植入提示词；gold 事件与代理标签
    同步生成。给定种子结果确定。
    """
    rng = np.random.default_rng(spec.seed)
    for event_type, synth in spec.event_types.items():
        if event_type not in schema.event_types:
            raise SchemaError(f"合成规格中的未知事件类型: {event_type}")
        allowed = set(surrogate_classes(schema, event_type))
        unknown = set(synth.classes) - allowed
        if unknown:
            raise SchemaError(f"{event_type}: 未知类别 {sorted(unknown)}")

    samples: List[Sample] = []
    annotations: AnnotationSet = {}
    for k in range(spec.n_samples):
        sample_id = f"syn{k:05d}"
        builder = _SampleBuilder()
        events: List[Event] = []
        # 先决定所有句子，再打乱句子顺序
        plans: List[Tuple[str, str, bool]] = []
        for event_type, synth in spec.event_types.items():
            names = list(synth.classes)
            probs = np.array([synth.classes[n].prevalence for n in names])
            choice = names[int(rng.choice(len(names), p=probs / probs.sum()))]
            if choice == ABSENT:
                continue
            if choice == MULTIPLE:
                concrete = [n for n in names if n not in (ABSENT, MULTIPLE)]
                for _ in range(2):
                    label = concrete[int(rng.integers(len(concrete)))]
                    plans.append((event_type, label, rng.random() < synth.classes[label].noise))
            else:
                plans.append((event_type, choice, rng.random() < synth.classes[choice].noise))

        low, high = spec.extra_sentences
        n_extra = int(rng.integers(low, high + 1))
        slots: List[Optional[Tuple[str, str, bool]]] = list(plans) + [None] * n_extra
        if not slots:
            slots = [None]
        for idx in rng.permutation(len(slots)):
            plan = slots[int(idx)]
            if plan is None:
                builder.add(_fillers(spec, rng) + ["."])
            else:
                events.append(_plant_event(builder, plan[0], plan[1], spec, schema, rng, plan[2]))

        samples.append(build_sample(sample_id, " ".join(builder.words), source=spec.source))
        annotations[sample_id] = events

    vocabulary = sorted({token.text.lower() for sample in samples for token in sample.tokens})
    embeddings = random_embeddings(vocabulary, spec.embedding_dim, np.random.default_rng(spec.seed + 1))
    labels = labels_from_annotations(annotations, samples, schema)
    n_events = sum(len(v) for v in annotations.values())
    logger.info(f"合成语料: {len(samples)} 个样本, {n_events} 个事件, 词表 {len(vocabulary)}")
    return SyntheticCorpus(samples=samples, annotations=annotations, labels=labels, embeddings=embeddings)


def enrichment_labels(events: Sequence[Event]) -> List[str]:
    """每个事件的 EventType.Arg=subtype 标签，以及物质使用阳性标签"""
    labels = []
    for event in events:
        for arg in event.labeled_args:
            labels.append(f"{event.event_type}.{arg.arg_type}={arg.subtype}")
            if event.event_type in SUBSTANCE_TYPES and arg.arg_type == "Status" and arg.subtype in POSITIVE_STATUS:
                labels.append("SubstanceUse=positive")
    return labels


def split_corpus(corpus: SyntheticCorpus, config: CycleConfig) -> Tuple[List[str], List[str], List[str]]:
    """(eval, seed, pool)，三者互不相交，由 config.seed 决定"""
    ids = sorted(s.id for s in corpus.samples)
    order = np.random.default_rng(config.seed).permutation(len(ids))
    shuffled = [ids[int(i)] for i in order]
    if config.eval_size + config.seed_size > len(shuffled):
        raise ForgeError(f"语料只有 {len(ids)} 个样本，不足以划分评估集与初始集")
    eval_ids = shuffled[:config.eval_size]
    seed_ids = shuffled[config.eval_size:config.eval_size + config.seed_size]
    pool_ids = shuffled[config.eval_size + config.seed_size:]
    return eval_ids, seed_ids, pool_ids


def run_cycle(
    corpus: SyntheticCorpus,
    config: CycleConfig,
    strategy: str,
    schema: EventSchema,
    vectors: Optional[Dict[str, SampleVector]] = None,
) -> RunMetrics:
    """
    主动学习循环

    每轮：在 L 上训练代理分类器 -> 对 U 预测 -> 选择批次（greedy 或均匀随机）->
    揭示 gold 标签 -> L <- L ∪ B。两种策略共享评估集与初始集。
    配置了 extractor 时每轮同时在 L 上训练抽取器并记录评估集 F1，不影响选择。
    """
    if strategy not in ("active", "random"):
        raise ForgeError(f"未知策略: {strategy}")

    by_id = corpus.by_id()
    eval_ids, labeled_ids, pool_ids = split_corpus(corpus, config)
    eval_samples = [by_id[i] for i in eval_ids]
    if vectors is None:
        vectors = vectorize_samples(corpus.samples, corpus.embeddings, fit_tfidf(corpus.samples))
    arm_rng = np.random.default_rng([config.seed, 0 if strategy == "active" else 1])

    eval_gold = {i: corpus.annotations[i] for i in eval_ids}

    def fit_and_score(ids: List[str]):
        samples = [by_id[i] for i in ids]
        model = train_surrogate(samples, corpus.labels, schema, corpus.embeddings, config.surrogate)
        report = surrogate_f1(model, eval_samples, corpus.labels)
        scores = {
            "surrogate_f1": report.micro.f1,
            "surrogate_f1_by_type": {entry.key[0]: entry.f1 for entry in report.entries},
        }
        if config.extractor is not None:
            extractor = train_extractor(samples, corpus.annotations, schema, corpus.embeddings, config.extractor)
            reports = score_all(eval_gold, predict_annotations(extractor, eval_samples))
            scores["extractor_f1"] = reports["overall"].micro.f1
            scores["extractor_f1_by_level"] = {level: r.micro.f1 for level, r in reports.items()}
        return model, scores

    labeled = list(labeled_ids)
    unlabeled = list(pool_ids)
    model, scores = fit_and_score(labeled)
    metrics = RunMetrics(strategy=strategy, seed=config.seed, eval_size=len(eval_ids))
    metrics.rounds.append(RoundMetrics(round=0, n_labeled=len(labeled), **scores))
    selected: List[str] = []

    for round_no in range(1, config.rounds + 1):
        if not unlabeled:
            logger.warning(f"[{strategy}] 第 {round_no} 轮: 样本池已耗尽")
            metrics.truncated = True
            break
        n = min(config.batch_size, len(unlabeled))
        truncated = n < config.batch_size
        if truncated:
            logger.warning(f"[{strategy}] 第 {round_no} 轮: 样本池不足，批次截断为 {n}")
            metrics.truncated = True

        if strategy == "active":
            pool_samples = [by_id[i] for i in unlabeled]
            profiles = predict_profiles(model, pool_samples)
            selection = config.selection.model_copy(update={"batch_size": n})
            batch = greedy_select(unlabeled, profiles, vectors, selection, event_types=schema.type_names)
        else:
            batch = random_select(unlabeled, n, arm_rng)

        chosen = set(batch.sample_ids)
        labeled.extend(batch.sample_ids)
        unlabeled = [i for i in unlabeled if i not in chosen]
        selected.extend(batch.sample_ids)

        model, scores = fit_and_score(labeled)
        metrics.rounds.append(RoundMetrics(
            round=round_no,
            n_labeled=len(labeled),
            selected_ids=batch.sample_ids,
            truncated=truncated,
            **scores,
        ))
        logger.info(f"[{strategy}] 第 {round_no} 轮: |L|={len(labeled)}, F1={scores['surrogate_f1']:.4f}")

    if selected:
        metrics.selected_label_frequency = dict(sorted(label_frequencies(
            [enrichment_labels(corpus.annotations[i]) for i in selected]
        ).items()))
    return metrics


def run_experiment(
    spec: SyntheticSpec,
    cycle: CycleConfig,
    schema: EventSchema,
    seeds: Sequence[int],
) -> ExperimentReport:
    """每个种子生成语料并运行配对的 active / random 轨道，汇总 F1、富集比与 Welch t 检验"""
    active_f1: List[float] = []
    random_f1: List[float] = []
    tables: List[Dict[str, float]] = []
    runs: List[RunMetrics] = []

    for seed in seeds:
        corpus = generate_corpus(spec.model_copy(update={"seed": seed}), schema)
        seeded = cycle.model_copy(update={"seed": seed})
        vectors = vectorize_samples(corpus.samples, corpus.embeddings, fit_tfidf(corpus.samples))
        active = run_cycle(corpus, seeded, "active", schema, vectors)
        baseline = run_cycle(corpus, seeded, "random", schema, vectors)
        runs.extend([active, baseline])
        active_f1.append(active.final_f1)
        random_f1.append(baseline.final_f1)

        chosen = [r.selected_ids for r in active.rounds[1:]]
        reference = [r.selected_ids for r in baseline.rounds[1:]]
        active_ids = [i for ids in chosen for i in ids]
        random_ids = [i for ids in reference for i in ids]
        if active_ids and random_ids:
            tables.append(enrichment(
                [enrichment_labels(corpus.annotations[i]) for i in active_ids],
                [enrichment_labels(corpus.annotations[i]) for i in random_ids],
            ))
        logger.info(f"种子 {seed}: active F1={active.final_f1:.4f}, random F1={baseline.final_f1:.4f}")

    welch = None
    if len(seeds) >= 2:
        result = welch_t(active_f1, random_f1)
        welch = WelchSummary(t=result.t, df=result.df, p_two_sided=result.p_two_sided)

    return ExperimentReport(
        seeds=list(seeds),
        active_f1=active_f1,
        random_f1=random_f1,
        active_wins=sum(a >= r for a, r in zip(active_f1, random_f1)),
        welch=welch,
        enrichment=tables,
        runs=runs,
    )
