"""
批量主动学习查询

Q(B) = Σ_{i∈B} (1 - s_i)^α · u(i)，s_i 为样本与批次其他成员余弦相似度的
平均值或最大值。贪心地逐个加入使 Q(B ∪ i) 最大的样本。
"""

import logging
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
from sklearn.metrics.pairwise import cosine_similarity

from app.core.exceptions import DimensionMismatchError, ForgeError, MissingInputError
from app.models.selection import Batch, BatchStep, SelectionConfig
from app.models.surrogate import ProbProfile
from app.services.embedding_service import cosine
from app.services.surrogate_service import entropy_matrix
from app.services.vector_service import SampleVector, as_matrix

logger = logging.getLogger(__name__)

VectorLike = Union[SampleVector, np.ndarray, Sequence[float]]


def _as_array(value: VectorLike) -> np.ndarray:
    return value.vector if isinstance(value, SampleVector) else np.asarray(value, dtype=np.float64)


def diversity(similarity: Union[float, np.ndarray], alpha: float):
    """(1 - s)^α，底数在 0 处截断"""
    return np.power(np.clip(1.0 - np.asarray(similarity, dtype=np.float64), 0.0, None), alpha)


def similarity_to_batch(candidate: VectorLike, batch: Sequence[VectorLike], mode: str = "maximum") -> float:
    """候选与批次成员余弦相似度的平均值或最大值；空批次为 0"""
    if not batch:
        return 0.0
    c = _as_array(candidate)
    sims = []
    for member in batch:
        m = _as_array(member)
        if m.shape != c.shape:
            raise DimensionMismatchError(f"维度不一致: {c.shape} vs {m.shape}")
        sims.append(cosine(c, m))
    if mode == "average":
        return float(sum(sims) / len(sims))
    if mode == "maximum":
        return float(max(sims))
    raise ForgeError(f"未知的相似度模式: {mode}")


def batch_score(
    batch: Sequence[str],
    uncertainties: Mapping[str, float],
    vectors: Mapping[str, VectorLike],
    config: SelectionConfig,
) -> float:
    """Q(B)，每个成员的 s_i 相对于批次中的其他成员计算"""
    total = 0.0
    for sample_id in batch:
        if sample_id not in uncertainties:
            raise MissingInputError(f"缺少不确定性: {sample_id}")
        others = [vectors[other] for other in batch if other != sample_id]
        s = similarity_to_batch(vectors[sample_id], others, config.similarity_mode)
        total += float(diversity(s, config.alpha)) * uncertainties[sample_id]
    return total


def _candidate_uncertainty(entropies: np.ndarray, mode: str, slot: int) -> np.ndarray:
    if mode == "sum":
        return entropies.sum(axis=1)
    return entropies[:, slot % entropies.shape[1]]


def greedy_select(
    pool: Sequence[str],
    profiles: Mapping[str, ProbProfile],
    vectors: Mapping[str, VectorLike],
    config: SelectionConfig,
    event_types: Optional[Sequence[str]] = None,
) -> Batch:
    """
    贪心批量选择

    每步选 argmax_i Q(B ∪ i)，得分相同取字典序最小的 ID。loop 模式下 u(i)
    使用的事件类型为 |B| mod K。默认 s_i 在入选时冻结；rescore_final_batch
    为 True 时每步都相对 B ∪ i 重算所有成员的 s_i。
    """
    if not pool:
        raise ForgeError("样本池为空")
    ids = sorted(pool)
    if len(set(ids)) != len(ids):
        raise ForgeError("样本池中存在重复 ID")

    X = as_matrix({k: _as_array(vectors[k]) for k in ids if k in vectors}, ids)
    entropies, types = entropy_matrix(profiles, ids, event_types)
    n = len(ids)
    target = min(config.batch_size, n)

    available = np.ones(n, dtype=bool)
    # 候选 -> 已选成员 的相似度缓存
    running_max = np.full(n, -np.inf)
    running_sum = np.zeros(n)
    member_rows: List[int] = []
    member_u: List[float] = []
    member_sims: List[np.ndarray] = []  # 每个成员对全池的相似度
    q_total = 0.0
    steps: List[BatchStep] = []

    for slot in range(target):
        b = len(member_rows)
        u = _candidate_uncertainty(entropies, config.uncertainty_mode, slot)
        if b == 0:
            s = np.zeros(n)
        elif config.similarity_mode == "maximum":
            s = running_max.copy()
        else:
            s = running_sum / b

        if config.rescore_final_batch and b > 0:
            q_new = _rescored_totals(member_rows, member_u, member_sims, s, u, config)
            objective = q_new
        else:
            objective = diversity(s, config.alpha) * u
            q_new = q_total + objective

        # argmax 返回首个最大值，ids 已排序即字典序最小
        pick = int(np.argmax(np.where(available, objective, -np.inf)))
        steps.append(BatchStep(
            rank=slot + 1,
            sample_id=ids[pick],
            uncertainty=float(u[pick]),
            similarity=float(s[pick]),
            q_marginal=float(q_new[pick] - q_total),
            q_total=float(q_new[pick]),
        ))
        logger.debug(f"第 {slot + 1} 个: {ids[pick]} u={u[pick]:.4f} s={s[pick]:.4f}")

        q_total = float(q_new[pick])
        available[pick] = False
        sims = cosine_similarity(X, X[pick:pick + 1]).ravel()
        np.clip(sims, -1.0, 1.0, out=sims)
        running_max = np.maximum(running_max, sims)
        running_sum += sims
        member_rows.append(pick)
        member_u.append(float(u[pick]))
        member_sims.append(sims)

    logger.info(f"贪心选择完成: {len(steps)} / {n} 个样本, Q(B)={q_total:.4f}")
    return Batch(sample_ids=[step.sample_id for step in steps], steps=steps, strategy="active")


def _rescored_totals(
    member_rows: List[int],
    member_u: List[float],
    member_sims: List[np.ndarray],
    candidate_s: np.ndarray,
    candidate_u: np.ndarray,
    config: SelectionConfig,
) -> np.ndarray:
    """对每个候选 i 计算 Q(B ∪ i)，成员的 s_j 相对 B ∪ i 重算"""
    C = np.vstack(member_sims)  # (|B|, n)，C[j, i] = cos(member_j, i)
    b = len(member_rows)
    inner = C[:, member_rows]  # 成员之间
    total = diversity(candidate_s, config.alpha) * candidate_u
    for j in range(b):
        others = np.delete(inner[j], j)
        if config.similarity_mode == "maximum":
            base = others.max() if others.size else -np.inf
            s_j = np.maximum(base, C[j])
        else:
            s_j = (others.sum() + C[j]) / b
        total = total + diversity(s_j, config.alpha) * member_u[j]
    return total


def random_select(pool: Sequence[str], n: int, rng: np.random.Generator) -> Batch:
    """均匀随机批次（基线）"""
    ids = sorted(pool)
    count = min(n, len(ids))
    picked = [ids[i] for i in rng.choice(len(ids), size=count, replace=False)] if count else []
    steps = [BatchStep(rank=k + 1, sample_id=sid) for k, sid in enumerate(picked)]
    return Batch(sample_ids=picked, steps=steps, strategy="random")


def uncertainties_for_batch(batch: Batch) -> Dict[str, float]:
    return {step.sample_id: step.uncertainty for step in batch.steps if step.uncertainty is not None}
