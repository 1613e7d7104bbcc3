"""
TF-IDF 权重
用 scikit-learn 统计文档频率并计算平滑 IDF
"""

import logging
import math
from collections import Counter
from typing import Dict, List, Sequence

import numpy as np
from sklearn.feature_extraction.text import CountVectorizer, TfidfTransformer

from app.models.vectors import SourceIdf

logger = logging.getLogger(__name__)


def _identity(tokens: List[str]) -> List[str]:
    return tokens


def fit_source_idf(documents: Sequence[Sequence[str]]) -> SourceIdf:
    """
    对一个来源的文档（已小写的 token 列表）拟合 IDF

    idf(t) = ln((1 + N) / (1 + df(t))) + 1
    """
    n = len(documents)
    if not any(documents):
        return SourceIdf(n_documents=n)

    counter = CountVectorizer(analyzer=_identity, binary=True)
    presence = counter.fit_transform([list(doc) for doc in documents])
    transformer = TfidfTransformer(smooth_idf=True, norm=None).fit(presence)

    vocabulary = counter.get_feature_names_out()
    df = np.asarray(presence.sum(axis=0)).ravel()
    return SourceIdf(
        n_documents=n,
        df={str(token): int(count) for token, count in zip(vocabulary, df)},
        idf={str(token): float(value) for token, value in zip(vocabulary, transformer.idf_)},
    )


def term_weights(tokens: Sequence[str], idf: SourceIdf, tf_mode: str = "raw") -> Dict[str, float]:
    """
    样本内每个 token 的权重 tf(t, s) * idf(t)

    raw: tf = count；lognorm: tf = 1 + ln(count)
    """
    weights = {}
    for token, count in Counter(tokens).items():
        tf = float(count) if tf_mode == "raw" else 1.0 + math.log(count)
        weights[token] = tf * idf.weight(token)
    return weights
