"""
代理分类器服务

每个事件类型一个自注意力 softmax 头，输入为样本 token 词向量，输出样本级
类别分布（显著论元子类型 ∪ {multiple, absent}）。分布的熵作为不确定性来源。
"""

import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.exceptions import ForgeError, MissingInputError, TrainingDataError
from app.models.corpus import Sample
from app.models.event import AnnotationSet, Event, EventSchema
from app.models.score import ScoreReport, Tally
from app.models.surrogate import ABSENT, MULTIPLE, ProbProfile, SurrogateLabel, TrainConfig
from app.services.embedding_service import EmbeddingTable
from app.services.scoring_service import micro_average
from app.utils.numerics import (
    ParamStore,
    attention_pool,
    attention_pool_backward,
    cross_entropy,
    entropy,
    sgd_step,
    softmax,
    softmax_xent_grad,
)
from app.utils.parallel import parallel_map

logger = logging.getLogger(__name__)

# sample_id -> event_type -> class
LabelTable = Dict[str, Dict[str, str]]


def surrogate_classes(schema: EventSchema, event_type: str) -> List[str]:
    """y_c = y_l ∪ {multiple, absent}"""
    spec = schema.event_types[event_type]
    labels = list(spec.labeled_args[spec.salient_arg].labels) if spec.labeled_args else []
    return labels + [MULTIPLE, ABSENT]


def derive_sample_label(events: Sequence[Event], event_type: str, salient_arg: str) -> SurrogateLabel:
    """
    样本级标签

    无该类型事件 -> absent；恰好一个 -> 其显著论元子类型；两个及以上 -> multiple
    """
    matching = [e for e in events if e.event_type == event_type]
    if not matching:
        return SurrogateLabel(event_type=event_type, label=ABSENT)
    if len(matching) > 1:
        return SurrogateLabel(event_type=event_type, label=MULTIPLE)
    for arg in matching[0].labeled_args:
        if arg.arg_type == salient_arg:
            return SurrogateLabel(event_type=event_type, label=arg.subtype)
    logger.warning(f"{event_type} 事件缺少显著论元 {salient_arg}，标签记为 absent")
    return SurrogateLabel(event_type=event_type, label=ABSENT)


def labels_from_annotations(annotations: AnnotationSet, samples: Sequence[Sample], schema: EventSchema) -> LabelTable:
    table: LabelTable = {}
    for sample in samples:
        events = annotations.get(sample.id, [])
        table[sample.id] = {
            event_type: derive_sample_label(events, event_type, spec.salient_arg).label
            for event_type, spec in schema.event_types.items()
        }
    return table


class SurrogateModel:
    """每个事件类型一个头：注意力向量 y、输出矩阵 W、偏置 b"""

    def __init__(self, classes: Mapping[str, List[str]], embeddings: EmbeddingTable, seed: int = 13, init: str = "uniform"):
        self.classes: Dict[str, List[str]] = {et: list(labels) for et, labels in classes.items()}
        self.embeddings = embeddings
        self.params = ParamStore(seed=seed)
        self.loss_history: List[float] = []
        for event_type, labels in self.classes.items():
            self.params.add(f"{event_type}.y", (embeddings.dim,), init=init)
            self.params.add(f"{event_type}.W", (len(labels), embeddings.dim), init=init)
            self.params.add(f"{event_type}.b", (len(labels),), init="zeros")

    @classmethod
    def for_schema(cls, schema: EventSchema, embeddings: EmbeddingTable, seed: int = 13, init: str = "uniform") -> "SurrogateModel":
        classes = {et: surrogate_classes(schema, et) for et in schema.type_names}
        return cls(classes, embeddings, seed=seed, init=init)

    @property
    def event_types(self) -> List[str]:
        return list(self.classes.keys())

    def expected_shapes(self) -> Dict[str, List[int]]:
        shapes = {}
        for event_type, labels in self.classes.items():
            shapes[f"{event_type}.y"] = [self.embeddings.dim]
            shapes[f"{event_type}.W"] = [len(labels), self.embeddings.dim]
            shapes[f"{event_type}.b"] = [len(labels)]
        return shapes

    def encode(self, sample: Sample) -> np.ndarray:
        """词表内 token 的词向量矩阵（OOV 丢弃）"""
        V, known = self.embeddings.lookup(sample.token_texts())
        return V[known]

    def head(self, V: np.ndarray, event_type: str):
        attention = attention_pool(V, self.params[f"{event_type}.y"])
        logits = self.params[f"{event_type}.W"] @ attention.context + self.params[f"{event_type}.b"]
        return attention, softmax(logits)

    def distributions(self, V: np.ndarray) -> Dict[str, List[float]]:
        if V.shape[0] == 0:
            return {et: [1.0 / len(labels)] * len(labels) for et, labels in self.classes.items()}
        return {et: self.head(V, et)[1].tolist() for et in self.classes}

    def forward(self, sample: Sample) -> ProbProfile:
        return ProbProfile(sample_id=sample.id, distributions=self.distributions(self.encode(sample)))

    def targets(self, labels: Mapping[str, str]) -> Dict[str, int]:
        indices = {}
        for event_type, classes in self.classes.items():
            if event_type not in labels:
                raise TrainingDataError(f"缺少事件类型 {event_type} 的标签")
            if labels[event_type] not in classes:
                raise TrainingDataError(f"{event_type}: 未知类别 {labels[event_type]!r}")
            indices[event_type] = classes.index(labels[event_type])
        return indices

    def accumulate(self, V: np.ndarray, targets: Mapping[str, int], scale: float = 1.0) -> float:
        """前向 + 反向，梯度乘以 scale 后累加；返回各头交叉熵之和"""
        if V.shape[0] == 0:
            return sum(math.log(len(labels)) for labels in self.classes.values())

        loss = 0.0
        for event_type in self.classes:
            attention, probs = self.head(V, event_type)
            gold = targets[event_type]
            loss += cross_entropy(probs, gold)

            d_logits = softmax_xent_grad(probs, gold) * scale
            W = self.params[f"{event_type}.W"]
            self.params.grads[f"{event_type}.W"] += np.outer(d_logits, attention.context)
            self.params.grads[f"{event_type}.b"] += d_logits
            self.params.grads[f"{event_type}.y"] += attention_pool_backward(V, attention.weights, W.T @ d_logits)
        return loss

    def to_json(self) -> str:
        return self.params.to_json(meta={"kind": "surrogate", "dim": self.embeddings.dim, "classes": self.classes})

    @classmethod
    def from_json(cls, text: str, embeddings: EmbeddingTable) -> "SurrogateModel":
        payload = json.loads(text)
        meta = payload.get("meta", {})
        if meta.get("kind") != "surrogate":
            raise TrainingDataError("不是代理分类器 checkpoint")
        model = cls(meta["classes"], embeddings, init="zeros")
        model.params = ParamStore.from_dict(payload["params"], expected_shapes=model.expected_shapes())
        return model


def surrogate_forward(model: SurrogateModel, sample: Sample) -> ProbProfile:
    return model.forward(sample)


def _encode_training_set(model: SurrogateModel, samples: Sequence[Sample], labels: Mapping[str, Mapping[str, str]]):
    encoded = []
    for sample in samples:
        if sample.id not in labels:
            raise MissingInputError(f"样本 {sample.id} 没有标签")
        encoded.append((model.encode(sample), model.targets(labels[sample.id])))
    return encoded


def dataset_loss(model: SurrogateModel, samples: Sequence[Sample], labels: Mapping[str, Mapping[str, str]]) -> float:
    """训练集上的平均损失（不更新参数）"""
    encoded = _encode_training_set(model, samples, labels)
    total = 0.0
    for V, targets in encoded:
        total += model.accumulate(V, targets)
    model.params.zero_grad()
    return total / max(len(encoded), 1)


def train_surrogate(
    samples: Sequence[Sample],
    labels: Mapping[str, Mapping[str, str]],
    schema: EventSchema,
    embeddings: EmbeddingTable,
    config: Optional[TrainConfig] = None,
    model: Optional[SurrogateModel] = None,
) -> SurrogateModel:
    """mini-batch SGD 最小化各头交叉熵之和的平均值；给定种子结果确定"""
    config = config or TrainConfig()
    if not samples:
        raise TrainingDataError("训练集为空")

    model = model or SurrogateModel.for_schema(schema, embeddings, seed=config.seed)
    encoded = _encode_training_set(model, samples, labels)
    rng = np.random.default_rng(config.seed)

    for epoch in range(config.epochs):
        order = rng.permutation(len(encoded))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            for idx in batch:
                V, targets = encoded[idx]
                epoch_loss += model.accumulate(V, targets, scale=1.0 / len(batch))
            sgd_step(model.params, config.learning_rate, config.momentum)
        model.loss_history.append(epoch_loss / len(encoded))
        logger.debug(f"代理分类器 epoch {epoch + 1}/{config.epochs}: loss={model.loss_history[-1]:.6f}")

    if model.loss_history:
        logger.info(f"代理分类器训练完成: {len(encoded)} 个样本, 最终 loss={model.loss_history[-1]:.4f}")
    return model


def predict_profiles(model: SurrogateModel, samples: Sequence[Sample], threads: Optional[int] = None) -> Dict[str, ProbProfile]:
    profiles = parallel_map(model.forward, list(samples), threads)
    return {profile.sample_id: profile for profile in profiles}


def sample_uncertainty(profile: ProbProfile, mode: str = "sum", slot: int = 0, event_types: Optional[Sequence[str]] = None) -> float:
    """
    sum: 各事件类型熵之和（忽略 slot）
    loop: 第 slot mod K 个事件类型的熵
    """
    types = list(event_types or profile.event_types)
    if mode == "sum":
        return sum(entropy(profile.distributions[et]) for et in types)
    if mode == "loop":
        return entropy(profile.distributions[types[slot % len(types)]])
    raise ForgeError(f"未知的不确定性模式: {mode}")


def entropy_matrix(profiles: Mapping[str, ProbProfile], ids: Sequence[str], event_types: Optional[Sequence[str]] = None) -> Tuple[np.ndarray, List[str]]:
    """(len(ids), K) 熵矩阵，列按事件类型顺序"""
    if not ids:
        return np.zeros((0, 0)), []
    for sample_id in ids:
        if sample_id not in profiles:
            raise MissingInputError(f"缺少概率分布: {sample_id}")
    types = list(event_types or profiles[ids[0]].event_types)
    matrix = np.array([[entropy(profiles[sid].distributions[et]) for et in types] for sid in ids], dtype=np.float64)
    return matrix, types


def _predicted_labels(model: SurrogateModel, samples: Sequence[Sample]) -> Dict[str, Dict[str, str]]:
    predictions = {}
    for sample_id, profile in predict_profiles(model, samples).items():
        predictions[sample_id] = {
            et: model.classes[et][int(np.argmax(dist))] for et, dist in profile.distributions.items()
        }
    return predictions


def surrogate_accuracy(model: SurrogateModel, samples: Sequence[Sample], labels: Mapping[str, Mapping[str, str]]) -> Dict[str, float]:
    """每个头的准确率"""
    predictions = _predicted_labels(model, samples)
    accuracy = {}
    for event_type in model.event_types:
        hits = sum(predictions[s.id][event_type] == labels[s.id][event_type] for s in samples)
        accuracy[event_type] = hits / len(samples) if samples else 0.0
    return accuracy


def surrogate_f1(model: SurrogateModel, samples: Sequence[Sample], labels: Mapping[str, Mapping[str, str]]) -> ScoreReport:
    """非 absent 类别上的 micro F1，按事件类型统计"""
    predictions = _predicted_labels(model, samples)
    tallies: Dict[Tuple[str, ...], Tally] = {}
    for sample in samples:
        for event_type in model.event_types:
            gold = labels[sample.id][event_type]
            pred = predictions[sample.id][event_type]
            tally = Tally(
                tp=int(gold == pred and gold != ABSENT),
                fp=int(pred != gold and pred != ABSENT),
                fn=int(pred != gold and gold != ABSENT),
            )
            tallies[(event_type,)] = tallies.get((event_type,), Tally()) + tally
    return micro_average(tallies, level="surrogate")


def save_labels(labels: LabelTable, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(labels, indent=2, sort_keys=True), encoding="utf-8")


def load_labels(path: Union[str, Path]) -> LabelTable:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def profiles_to_json(profiles: Mapping[str, ProbProfile]) -> str:
    payload = [profiles[sample_id].model_dump() for sample_id in sorted(profiles)]
    return json.dumps(payload, indent=2) + "\n"


def save_profiles(profiles: Mapping[str, ProbProfile], path: Union[str, Path]) -> None:
    Path(path).write_text(profiles_to_json(profiles), encoding="utf-8")


def load_profiles(path: Union[str, Path]) -> Dict[str, ProbProfile]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    profiles = [ProbProfile.model_validate(item) for item in payload]
    return {profile.sample_id: profile for profile in profiles}
