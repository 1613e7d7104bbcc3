"""
线性链 CRF（BIO 标注）
前向算法、前向-后向梯度与 Viterbi 解码，均在对数空间中计算

非法转移（O->I-x、B-x->I-y、I-x->I-y (x != y)、起始 I-x）以 -inf 掩码表示。
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from app.core.exceptions import DimensionMismatchError, TrainingDataError

logger = logging.getLogger(__name__)

OUTSIDE = "O"


def build_bio_labels(arg_types: Sequence[str]) -> List[str]:
    """O 固定为 0 号标签，其后为每个论元类型的 B-x、I-x"""
    labels = [OUTSIDE]
    for arg_type in arg_types:
        labels.extend([f"B-{arg_type}", f"I-{arg_type}"])
    return labels


def bio_masks(labels: Sequence[str]) -> Tuple[np.ndarray, np.ndarray]:
    """
    返回 (transition_mask, start_mask)，合法为 0，非法为 -inf

    transition_mask[i, j] 对应 labels[i] -> labels[j]
    """
    k = len(labels)
    transition_mask = np.zeros((k, k), dtype=np.float64)
    start_mask = np.zeros(k, dtype=np.float64)
    for j, target in enumerate(labels):
        if not target.startswith("I-"):
            continue
        start_mask[j] = -np.inf
        inside = target[2:]
        for i, source in enumerate(labels):
            if source not in (f"B-{inside}", f"I-{inside}"):
                transition_mask[i, j] = -np.inf
    return transition_mask, start_mask


def _effective(transitions: np.ndarray, transition_mask: Optional[np.ndarray], start_mask: Optional[np.ndarray]):
    k = transitions.shape[0]
    trans = transitions if transition_mask is None else transitions + transition_mask
    start = np.zeros(k) if start_mask is None else start_mask
    return trans, start


def _check_shapes(emissions: np.ndarray, transitions: np.ndarray) -> None:
    if emissions.ndim != 2 or emissions.shape[0] < 1:
        raise DimensionMismatchError(f"emissions 必须为 n x K 且 n >= 1，实际 {emissions.shape}")
    if transitions.shape != (emissions.shape[1], emissions.shape[1]):
        raise DimensionMismatchError(f"transitions 形状 {transitions.shape} 与标签数 {emissions.shape[1]} 不符")


def _forward(emissions: np.ndarray, trans: np.ndarray, start: np.ndarray) -> np.ndarray:
    n, k = emissions.shape
    alpha = np.empty((n, k), dtype=np.float64)
    alpha[0] = start + emissions[0]
    for t in range(1, n):
        alpha[t] = logsumexp(alpha[t - 1][:, None] + trans, axis=0) + emissions[t]
    return alpha


def _backward(emissions: np.ndarray, trans: np.ndarray) -> np.ndarray:
    n, k = emissions.shape
    beta = np.zeros((n, k), dtype=np.float64)
    for t in range(n - 2, -1, -1):
        beta[t] = logsumexp(trans + (emissions[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta


def crf_log_partition(
    emissions: np.ndarray,
    transitions: np.ndarray,
    transition_mask: Optional[np.ndarray] = None,
    start_mask: Optional[np.ndarray] = None,
) -> float:
    """log Σ exp(score(path))，对所有合法路径求和"""
    _check_shapes(emissions, transitions)
    trans, start = _effective(transitions, transition_mask, start_mask)
    return float(logsumexp(_forward(emissions, trans, start)[-1]))


def crf_path_score(
    emissions: np.ndarray,
    transitions: np.ndarray,
    tags: Sequence[int],
    transition_mask: Optional[np.ndarray] = None,
    start_mask: Optional[np.ndarray] = None,
) -> float:
    """单条路径的得分；非法路径为 -inf"""
    trans, start = _effective(transitions, transition_mask, start_mask)
    score = start[tags[0]] + emissions[0, tags[0]]
    for t in range(1, len(tags)):
        score += trans[tags[t - 1], tags[t]] + emissions[t, tags[t]]
    return float(score)


def crf_nll_and_grad(
    emissions: np.ndarray,
    transitions: np.ndarray,
    tags: Sequence[int],
    transition_mask: Optional[np.ndarray] = None,
    start_mask: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    负对数似然及其梯度

    Returns:
        (loss, d_emissions, d_transitions)，梯度 = 期望计数 - 观测计数
    """
    _check_shapes(emissions, transitions)
    n, k = emissions.shape
    if len(tags) != n:
        raise DimensionMismatchError(f"标签序列长度 {len(tags)} != 序列长度 {n}")

    trans, start = _effective(transitions, transition_mask, start_mask)
    gold_score = crf_path_score(emissions, transitions, tags, transition_mask, start_mask)
    if not np.isfinite(gold_score):
        raise TrainingDataError(f"标签序列违反 BIO 约束: {list(tags)}")

    alpha = _forward(emissions, trans, start)
    beta = _backward(emissions, trans)
    log_z = float(logsumexp(alpha[-1]))

    d_emissions = np.exp(alpha + beta - log_z)
    d_transitions = np.zeros((k, k), dtype=np.float64)
    for t in range(1, n):
        pair = alpha[t - 1][:, None] + trans + (emissions[t] + beta[t])[None, :] - log_z
        d_transitions += np.exp(pair)

    d_emissions[np.arange(n), list(tags)] -= 1.0
    for t in range(1, n):
        d_transitions[tags[t - 1], tags[t]] -= 1.0

    return log_z - gold_score, d_emissions, d_transitions


def crf_viterbi(
    emissions: np.ndarray,
    transitions: np.ndarray,
    transition_mask: Optional[np.ndarray] = None,
    start_mask: Optional[np.ndarray] = None,
) -> List[int]:
    """最大得分合法路径；得分相同时取较小的标签序号"""
    _check_shapes(emissions, transitions)
    n, k = emissions.shape
    trans, start = _effective(transitions, transition_mask, start_mask)

    delta = start + emissions[0]
    backpointers = np.zeros((n, k), dtype=np.int64)
    for t in range(1, n):
        candidates = delta[:, None] + trans
        backpointers[t] = np.argmax(candidates, axis=0)
        delta = candidates[backpointers[t], np.arange(k)] + emissions[t]

    best = [int(np.argmax(delta))]
    for t in range(n - 1, 0, -1):
        best.append(int(backpointers[t, best[-1]]))
    return best[::-1]


def tags_to_spans(tag_labels: Sequence[str]) -> List[Tuple[str, List[int]]]:
    """把 BIO 标签字符串序列解码为 (arg_type, token 序号列表)；孤立的 I-x 视为新片段开始"""
    spans: List[Tuple[str, List[int]]] = []
    current: Optional[Tuple[str, List[int]]] = None
    for position, label in enumerate(tag_labels):
        if label == OUTSIDE:
            current = None
            continue
        prefix, arg_type = label[:2], label[2:]
        if prefix == "I-" and current is not None and current[0] == arg_type:
            current[1].append(position)
        else:
            current = (arg_type, [position])
            spans.append(current)
    return spans


def spans_to_tags(n: int, spans: Sequence[Tuple[str, Sequence[int]]], labels: Sequence[str]) -> List[int]:
    """把 (arg_type, token 序号) 列表编码为 BIO 标签序列；区间重叠时报错"""
    index = {label: i for i, label in enumerate(labels)}
    tags = [index[OUTSIDE]] * n
    taken = [False] * n
    for arg_type, span in spans:
        for offset, position in enumerate(span):
            if taken[position]:
                raise TrainingDataError(f"span-only 论元区间重叠: token {position}")
            taken[position] = True
            tags[position] = index[f"{'B' if offset == 0 else 'I'}-{arg_type}"]
    return tags
