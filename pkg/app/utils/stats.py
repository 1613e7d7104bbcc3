"""
统计工具
Welch t 检验与标签富集比
"""

import logging
import math
from collections import Counter
from typing import Dict, Iterable, NamedTuple, Sequence

import numpy as np
from scipy.special import betainc

from app.core.exceptions import ForgeError

logger = logging.getLogger(__name__)


class WelchResult(NamedTuple):
    t: float
    df: float
    p_two_sided: float


def welch_t(sample_a: Sequence[float], sample_b: Sequence[float]) -> WelchResult:
    """
    Welch t 检验（方差不等）

    df 由 Welch-Satterthwaite 公式给出；双侧 p 值为正则化不完全 beta 函数
    I_{df/(df+t^2)}(df/2, 1/2)。
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ForgeError(f"每组至少需要 2 个样本 (实际 {a.size}, {b.size})")

    var_a = a.var(ddof=1) / a.size
    var_b = b.var(ddof=1) / b.size
    diff = float(a.mean() - b.mean())
    se2 = var_a + var_b

    if se2 == 0.0:
        df = float(a.size + b.size - 2)
        if diff == 0.0:
            return WelchResult(t=0.0, df=df, p_two_sided=1.0)
        logger.warning("Welch t 检验: 两组方差均为 0 且均值不同，p 记为 0")
        return WelchResult(t=math.copysign(math.inf, diff), df=df, p_two_sided=0.0)

    t = diff / math.sqrt(se2)
    df = se2 ** 2 / (var_a ** 2 / (a.size - 1) + var_b ** 2 / (b.size - 1))
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return WelchResult(t=float(t), df=float(df), p_two_sided=min(1.0, max(0.0, p)))


def label_frequencies(labelled_samples: Sequence[Iterable[str]]) -> Dict[str, float]:
    """每个标签的样本平均出现次数"""
    counts: Counter = Counter()
    for labels in labelled_samples:
        counts.update(labels)
    n = len(labelled_samples)
    return {label: count / n for label, count in counts.items()}


def enrichment(selected: Sequence[Iterable[str]], baseline: Sequence[Iterable[str]]) -> Dict[str, float]:
    """
    富集比 = 选中集合中的每样本频率 / 基线集合中的每样本频率

    基线频率为 0 时记为 inf；两边都未出现的标签不输出。
    """
    if not selected or not baseline:
        raise ForgeError("富集分析需要非空的选中集合与基线集合")
    chosen = label_frequencies(selected)
    reference = label_frequencies(baseline)
    table: Dict[str, float] = {}
    for label in sorted(set(chosen) | set(reference)):
        numerator = chosen.get(label, 0.0)
        denominator = reference.get(label, 0.0)
        table[label] = numerator / denominator if denominator > 0 else math.inf
    return table
