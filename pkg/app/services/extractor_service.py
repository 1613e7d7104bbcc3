"""
事件抽取器服务

句子级多任务模型：
- 每个事件类型一个自注意力二分类 trigger 头，输出 P^t (m x 2)
- 每个 labeled argument 一个自注意力 softmax 头，输入 [flatten(P^t), 注意力上下文]
- 每个事件类型一个线性链 CRF，发射特征为 [token 词向量, flatten(P^s)]，BIO 标注 span-only 论元

梯度全部手工推导：CRF 的梯度经 P^s 回传到 labeled 头，labeled 头的梯度经 P^t
回传到 trigger 头。
"""

import json
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import TrainingDataError
from app.models.corpus import Sample
from app.models.event import (
    AnnotationSet,
    Event,
    EventSchema,
    LabeledArgument,
    SpanOnlyArgument,
    Trigger,
)
from app.models.extractor import LabeledArgPrediction, SentencePrediction
from app.models.surrogate import TrainConfig
from app.services.corpus_service import events_by_sentence
from app.services.embedding_service import EmbeddingTable
from app.utils.crf import (
    bio_masks,
    build_bio_labels,
    crf_nll_and_grad,
    crf_viterbi,
    spans_to_tags,
    tags_to_spans,
)
from app.utils.numerics import (
    ParamStore,
    attention_pool,
    attention_pool_backward,
    cross_entropy,
    sgd_step,
    softmax,
    softmax_xent_grad,
)
from app.utils.parallel import parallel_map

logger = logging.getLogger(__name__)

DETECTION_THRESHOLD = 0.5
ABSENT, PRESENT = 0, 1


@dataclass
class SentenceGold:
    """一个句子的训练目标"""
    presence: Dict[str, int]
    labeled: Dict[Tuple[str, str], int]  # 仅包含 gold 中存在的 (event_type, arg_type)
    tags: Dict[str, List[int]]


@dataclass
class _Forward:
    trigger_att: list
    trigger_probs: List[np.ndarray]
    pt: np.ndarray
    arg_att: list
    arg_feats: List[np.ndarray]
    arg_probs: List[np.ndarray]
    ps: np.ndarray
    crf_inputs: np.ndarray
    emissions: Dict[str, np.ndarray]


class ExtractorModel:
    """trigger 头 + labeled argument 头 + 每类型 CRF"""

    def __init__(self, schema: EventSchema, embeddings: EmbeddingTable, seed: int = 13, init: str = "uniform"):
        self.schema = schema
        self.embeddings = embeddings
        self.event_types = schema.type_names
        self.heads = schema.labeled_heads()
        self.crf_labels = {et: build_bio_labels(schema.event_types[et].span_args) for et in self.event_types}
        self.crf_masks = {et: bio_masks(labels) for et, labels in self.crf_labels.items()}
        self.params = ParamStore(seed=seed)
        self.loss_history: List[float] = []

        for name, shape in self.expected_shapes().items():
            zero = name.endswith(".b") or name.endswith(".T")
            self.params.add(name, tuple(shape), init="zeros" if zero else init)

    @property
    def dim(self) -> int:
        return self.embeddings.dim

    @property
    def pt_dim(self) -> int:
        return 2 * len(self.event_types)

    @property
    def ps_dim(self) -> int:
        return sum(len(self.schema.label_set(et, arg)) for et, arg in self.heads)

    def expected_shapes(self) -> Dict[str, List[int]]:
        d = self.dim
        shapes: Dict[str, List[int]] = {}
        for et in self.event_types:
            shapes[f"trigger.{et}.y"] = [d]
            shapes[f"trigger.{et}.W"] = [2, d]
            shapes[f"trigger.{et}.b"] = [2]
        for et, arg in self.heads:
            n_labels = len(self.schema.label_set(et, arg))
            shapes[f"arg.{et}.{arg}.y"] = [d]
            shapes[f"arg.{et}.{arg}.W"] = [n_labels, self.pt_dim + d]
            shapes[f"arg.{et}.{arg}.b"] = [n_labels]
        for et, labels in self.crf_labels.items():
            shapes[f"crf.{et}.E"] = [len(labels), d + self.ps_dim]
            shapes[f"crf.{et}.b"] = [len(labels)]
            shapes[f"crf.{et}.T"] = [len(labels), len(labels)]
        return shapes

    def encode(self, sample: Sample, start: int, end: int) -> np.ndarray:
        """句子的词向量矩阵，OOV 为零行"""
        V, _ = self.embeddings.lookup(sample.token_texts()[start:end])
        return V

    # ---- 前向 ----

    def trigger_forward(self, V: np.ndarray):
        attentions, probs = [], []
        for et in self.event_types:
            att = attention_pool(V, self.params[f"trigger.{et}.y"])
            attentions.append(att)
            probs.append(softmax(self.params[f"trigger.{et}.W"] @ att.context + self.params[f"trigger.{et}.b"]))
        return attentions, probs

    def labeled_arg_forward(self, V: np.ndarray, pt: np.ndarray):
        attentions, feats, probs = [], [], []
        for et, arg in self.heads:
            att = attention_pool(V, self.params[f"arg.{et}.{arg}.y"])
            feat = np.concatenate([pt, att.context])
            attentions.append(att)
            feats.append(feat)
            probs.append(softmax(self.params[f"arg.{et}.{arg}.W"] @ feat + self.params[f"arg.{et}.{arg}.b"]))
        return attentions, feats, probs

    def crf_emissions(self, V: np.ndarray, ps: np.ndarray) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        X = np.hstack([V, np.tile(ps, (V.shape[0], 1))])
        emissions = {et: X @ self.params[f"crf.{et}.E"].T + self.params[f"crf.{et}.b"] for et in self.event_types}
        return X, emissions

    def _forward(self, V: np.ndarray) -> _Forward:
        trigger_att, trigger_probs = self.trigger_forward(V)
        pt = np.concatenate(trigger_probs)
        arg_att, arg_feats, arg_probs = self.labeled_arg_forward(V, pt)
        ps = np.concatenate(arg_probs) if arg_probs else np.zeros(0)
        X, emissions = self.crf_emissions(V, ps)
        return _Forward(trigger_att, trigger_probs, pt, arg_att, arg_feats, arg_probs, ps, X, emissions)

    def predict_sentence(self, V: np.ndarray, offset: int = 0) -> SentencePrediction:
        fwd = self._forward(V)
        labeled: Dict[str, Dict[str, LabeledArgPrediction]] = {}
        for (et, arg), att, probs in zip(self.heads, fwd.arg_att, fwd.arg_probs):
            labeled.setdefault(et, {})[arg] = LabeledArgPrediction(
                labels=list(self.schema.label_set(et, arg)),
                distribution=probs.tolist(),
                span_token=att.argmax,
            )
        tags = {}
        for et in self.event_types:
            transition_mask, start_mask = self.crf_masks[et]
            path = crf_viterbi(fwd.emissions[et], self.params[f"crf.{et}.T"], transition_mask, start_mask)
            tags[et] = [self.crf_labels[et][i] for i in path]
        return SentencePrediction(
            offset=offset,
            length=V.shape[0],
            presence={et: float(p[PRESENT]) for et, p in zip(self.event_types, fwd.trigger_probs)},
            trigger_token={et: att.argmax for et, att in zip(self.event_types, fwd.trigger_att)},
            labeled=labeled,
            tags=tags,
        )

    # ---- 损失与反向 ----

    def accumulate(self, V: np.ndarray, gold: SentenceGold, scale: float = 1.0) -> float:
        """联合损失 = trigger CE + labeled CE（仅 gold 存在时）+ CRF NLL；梯度乘 scale 后累加"""
        fwd = self._forward(V)
        grads = self.params.grads
        d = self.dim
        loss = 0.0

        # CRF -> d_ps
        d_ps = np.zeros(self.ps_dim)
        for et in self.event_types:
            transition_mask, start_mask = self.crf_masks[et]
            nll, d_em, d_trans = crf_nll_and_grad(
                fwd.emissions[et], self.params[f"crf.{et}.T"], gold.tags[et], transition_mask, start_mask
            )
            loss += nll
            d_em *= scale
            grads[f"crf.{et}.E"] += d_em.T @ fwd.crf_inputs
            grads[f"crf.{et}.b"] += d_em.sum(axis=0)
            grads[f"crf.{et}.T"] += d_trans * scale
            d_ps += (d_em @ self.params[f"crf.{et}.E"])[:, d:].sum(axis=0)

        # labeled heads -> d_pt
        d_pt = np.zeros(self.pt_dim)
        cursor = 0
        for (et, arg), att, feat, probs in zip(self.heads, fwd.arg_att, fwd.arg_feats, fwd.arg_probs):
            width = probs.shape[0]
            d_probs = d_ps[cursor:cursor + width]
            cursor += width
            d_logits = probs * (d_probs - probs @ d_probs)
            target = gold.labeled.get((et, arg))
            if target is not None:
                loss += cross_entropy(probs, target)
                d_logits = d_logits + softmax_xent_grad(probs, target) * scale

            W = self.params[f"arg.{et}.{arg}.W"]
            grads[f"arg.{et}.{arg}.W"] += np.outer(d_logits, feat)
            grads[f"arg.{et}.{arg}.b"] += d_logits
            d_feat = W.T @ d_logits
            d_pt += d_feat[:self.pt_dim]
            grads[f"arg.{et}.{arg}.y"] += attention_pool_backward(V, att.weights, d_feat[self.pt_dim:])

        # trigger heads
        for k, (et, att, probs) in enumerate(zip(self.event_types, fwd.trigger_att, fwd.trigger_probs)):
            target = gold.presence[et]
            loss += cross_entropy(probs, target)
            d_probs = d_pt[2 * k:2 * k + 2]
            d_logits = probs * (d_probs - probs @ d_probs) + softmax_xent_grad(probs, target) * scale

            W = self.params[f"trigger.{et}.W"]
            grads[f"trigger.{et}.W"] += np.outer(d_logits, att.context)
            grads[f"trigger.{et}.b"] += d_logits
            grads[f"trigger.{et}.y"] += attention_pool_backward(V, att.weights, W.T @ d_logits)

        return loss

    # ---- checkpoint ----

    def to_json(self) -> str:
        return self.params.to_json(meta={"kind": "extractor", "dim": self.dim, "schema": self.schema.model_dump()})

    @classmethod
    def from_json(cls, text: str, embeddings: EmbeddingTable) -> "ExtractorModel":
        payload = json.loads(text)
        meta = payload.get("meta", {})
        if meta.get("kind") != "extractor":
            raise TrainingDataError("不是抽取器 checkpoint")
        model = cls(EventSchema.model_validate(meta["schema"]), embeddings, init="zeros")
        model.params = ParamStore.from_dict(payload["params"], expected_shapes=model.expected_shapes())
        return model


def trigger_forward(model: ExtractorModel, V: np.ndarray) -> Tuple[np.ndarray, List[int]]:
    """(P^t: m x 2, 每个类型注意力最大的 token)"""
    attentions, probs = model.trigger_forward(V)
    return np.vstack(probs), [att.argmax for att in attentions]


def labeled_arg_forward(model: ExtractorModel, V: np.ndarray, pt: np.ndarray) -> Tuple[List[np.ndarray], List[int]]:
    """P^s 分布列表（按 schema.labeled_heads 顺序）及每个头的 span token"""
    attentions, _, probs = model.labeled_arg_forward(V, np.asarray(pt, dtype=np.float64).ravel())
    return probs, [att.argmax for att in attentions]


def assemble_events(pred: SentencePrediction, schema: EventSchema) -> List[Event]:
    """
    把句子预测组装为事件

    每个 P(present) > 0.5 的类型生成一个事件：trigger 为注意力最大的 token，
    labeled 论元取概率最大的子类型，CRF 的 BIO 片段成为 span-only 论元。
    """
    events = []
    for event_type in schema.type_names:
        if pred.presence.get(event_type, 0.0) <= DETECTION_THRESHOLD:
            continue
        spec = schema.event_types[event_type]
        trigger = Trigger(event_type=event_type, token_span=[pred.offset + pred.trigger_token[event_type]])
        labeled = [
            LabeledArgument(arg_type=arg, token_span=[pred.offset + head.span_token], subtype=head.subtype)
            for arg, head in pred.labeled.get(event_type, {}).items()
            if arg in spec.labeled_args
        ]
        span_args = [
            SpanOnlyArgument(arg_type=arg_type, token_span=[pred.offset + i for i in span])
            for arg_type, span in tags_to_spans(pred.tags.get(event_type, []))
            if arg_type in spec.span_args
        ]
        events.append(Event(trigger=trigger, labeled_args=labeled, span_args=span_args))
    return events


def sentence_gold(
    model: ExtractorModel,
    sample: Sample,
    start: int,
    end: int,
    events: Sequence[Event],
) -> SentenceGold:
    """由事件推导句子级目标：类型存在性、labeled 子类型、BIO 序列"""
    presence = {et: ABSENT for et in model.event_types}
    labeled: Dict[Tuple[str, str], int] = {}
    spans: Dict[str, List[Tuple[str, List[int]]]] = {et: [] for et in model.event_types}

    for event in sorted(events, key=lambda e: e.trigger.token_span[0]):
        et = event.event_type
        if et not in presence:
            raise TrainingDataError(f"{sample.id}: 未知事件类型 {et}")
        first_of_type = presence[et] == ABSENT
        presence[et] = PRESENT
        if first_of_type:
            for arg in event.labeled_args:
                labels = model.schema.label_set(et, arg.arg_type)
                labeled[(et, arg.arg_type)] = labels.index(arg.subtype)
        for arg in event.span_args:
            if arg.token_span[0] < start or arg.token_span[-1] >= end:
                logger.warning(f"{sample.id}: {et}.{arg.arg_type} 跨出 trigger 所在句子，已忽略")
                continue
            spans[et].append((arg.arg_type, [i - start for i in arg.token_span]))

    tags = {}
    for et in model.event_types:
        try:
            tags[et] = spans_to_tags(end - start, spans[et], model.crf_labels[et])
        except TrainingDataError as e:
            raise TrainingDataError(f"{sample.id} 句子 [{start}, {end}) {et}: {e}") from e
    return SentenceGold(presence=presence, labeled=labeled, tags=tags)


def encode_training_set(
    model: ExtractorModel,
    samples: Sequence[Sample],
    annotations: AnnotationSet,
) -> List[Tuple[np.ndarray, SentenceGold]]:
    encoded = []
    for sample in samples:
        grouped = events_by_sentence(sample, annotations.get(sample.id, []))
        for (start, end), events in zip(sample.sentence_bounds, grouped):
            encoded.append((model.encode(sample, start, end), sentence_gold(model, sample, start, end, events)))
    return encoded


def train_extractor(
    samples: Sequence[Sample],
    annotations: AnnotationSet,
    schema: EventSchema,
    embeddings: EmbeddingTable,
    config: Optional[TrainConfig] = None,
) -> ExtractorModel:
    """联合损失的 mini-batch SGD，句子顺序每个 epoch 按种子打乱"""
    config = config or TrainConfig()
    model = ExtractorModel(schema, embeddings, seed=config.seed)
    encoded = encode_training_set(model, samples, annotations)
    if not encoded:
        raise TrainingDataError("训练集为空")

    rng = np.random.default_rng(config.seed)
    for epoch in range(config.epochs):
        order = rng.permutation(len(encoded))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            for idx in batch:
                V, gold = encoded[idx]
                epoch_loss += model.accumulate(V, gold, scale=1.0 / len(batch))
            sgd_step(model.params, config.learning_rate, config.momentum)
        model.loss_history.append(epoch_loss / len(encoded))
        logger.debug(f"抽取器 epoch {epoch + 1}/{config.epochs}: loss={model.loss_history[-1]:.6f}")

    logger.info(f"抽取器训练完成: {len(encoded)} 个句子")
    return model


def predict_sample(model: ExtractorModel, sample: Sample) -> List[Event]:
    events: List[Event] = []
    for start, end in sample.sentence_bounds:
        prediction = model.predict_sentence(model.encode(sample, start, end), offset=start)
        events.extend(assemble_events(prediction, model.schema))
    return events


def predict_annotations(model: ExtractorModel, samples: Sequence[Sample], threads: Optional[int] = None) -> AnnotationSet:
    results = parallel_map(lambda s: (s.id, predict_sample(model, s)), list(samples), threads)
    return dict(results)
