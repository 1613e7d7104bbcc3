"""
样本向量服务
按来源拟合 TF-IDF，生成 TF-IDF 加权平均词向量作为样本表示
"""

import json
import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from app.core.config import settings
from app.core.exceptions import DimensionMismatchError, MissingInputError
from app.models.corpus import Sample
from app.models.vectors import TfidfModel
from app.services.embedding_service import EmbeddingTable
from app.utils.parallel import parallel_map
from app.utils.tfidf_weights import fit_source_idf, term_weights

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleVector:
    """样本向量及其欧氏范数"""
    sample_id: str
    vector: np.ndarray
    norm: float

    @classmethod
    def build(cls, sample_id: str, vector: np.ndarray) -> "SampleVector":
        vector = np.asarray(vector, dtype=np.float64)
        return cls(sample_id=sample_id, vector=vector, norm=float(np.linalg.norm(vector)))


def lowered_tokens(sample: Sample) -> List[str]:
    return [token.text.lower() for token in sample.tokens]


def fit_tfidf(samples: Sequence[Sample], tf_mode: Optional[str] = None) -> TfidfModel:
    """按 sample.source 分组，分别拟合 IDF；结果与样本顺序无关"""
    by_source: Dict[str, List[List[str]]] = defaultdict(list)
    for sample in samples:
        by_source[sample.source].append(lowered_tokens(sample))

    model = TfidfModel(
        tf_mode=tf_mode or settings.TF_MODE,
        sources={source: fit_source_idf(docs) for source, docs in sorted(by_source.items())},
    )
    for source, idf in model.sources.items():
        logger.info(f"TF-IDF [{source}]: N={idf.n_documents}, 词表 {len(idf.idf)}")
    return model


def sample_vector(sample: Sample, embeddings: EmbeddingTable, tfidf: TfidfModel) -> SampleVector:
    """
    v = Σ_t w(t,s) e(t) / Σ_t w(t,s)，只对词表内 token 求和

    空样本或全部 OOV 时返回零向量
    """
    if sample.source not in tfidf.sources:
        raise MissingInputError(f"{sample.id}: 来源 {sample.source!r} 未拟合 TF-IDF")

    weights = term_weights(lowered_tokens(sample), tfidf.sources[sample.source], tfidf.tf_mode)
    known = [(token, w) for token, w in weights.items() if token in embeddings]
    if not known:
        return SampleVector.build(sample.id, np.zeros(embeddings.dim))

    # 固定求和顺序，保证结果逐位可复现
    known.sort()
    w = np.array([weight for _, weight in known])
    E = np.vstack([embeddings.get(token) for token, _ in known])
    return SampleVector.build(sample.id, (w @ E) / w.sum())


def vectorize_samples(
    samples: Sequence[Sample],
    embeddings: EmbeddingTable,
    tfidf: TfidfModel,
    threads: Optional[int] = None,
) -> Dict[str, SampleVector]:
    vectors = parallel_map(lambda s: sample_vector(s, embeddings, tfidf), list(samples), threads)
    return {v.sample_id: v for v in vectors}


def as_matrix(vectors: Mapping[str, Union[SampleVector, np.ndarray]], ids: Sequence[str]) -> np.ndarray:
    """按 ids 顺序堆叠向量；缺失时报错"""
    rows = []
    for sample_id in ids:
        if sample_id not in vectors:
            raise MissingInputError(f"缺少样本向量: {sample_id}")
        value = vectors[sample_id]
        rows.append(value.vector if isinstance(value, SampleVector) else np.asarray(value, dtype=np.float64))
    if len({row.shape for row in rows}) > 1:
        raise DimensionMismatchError("样本向量维度不一致")
    return np.vstack(rows)


def vectors_to_json(vectors: Mapping[str, SampleVector]) -> str:
    payload = {
        sample_id: {"vector": v.vector.tolist(), "norm": v.norm}
        for sample_id, v in sorted(vectors.items())
    }
    return json.dumps(payload, indent=2) + "\n"


def save_vectors(vectors: Mapping[str, SampleVector], path: Union[str, Path]) -> None:
    Path(path).write_text(vectors_to_json(vectors), encoding="utf-8")


def load_vectors(path: Union[str, Path]) -> Dict[str, SampleVector]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return {sample_id: SampleVector.build(sample_id, item["vector"]) for sample_id, item in payload.items()}
