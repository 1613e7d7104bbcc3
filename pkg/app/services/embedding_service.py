"""
词向量服务
读取/写出文本格式词向量表，提供查表与余弦相似度
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.exceptions import DimensionMismatchError, EmbeddingFormatError

logger = logging.getLogger(__name__)


@dataclass
class EmbeddingTable:
    """词向量表：token -> 长度为 dim 的向量（查询时先转小写）"""
    dim: int
    vocab: Dict[str, int] = field(default_factory=dict)
    matrix: np.ndarray = None

    def __post_init__(self):
        if self.dim <= 0:
            raise EmbeddingFormatError(f"维度必须为正数: {self.dim}")
        if self.matrix is None:
            self.matrix = np.zeros((0, self.dim), dtype=np.float64)
        if self.matrix.shape != (len(self.vocab), self.dim):
            raise EmbeddingFormatError(
                f"矩阵形状 {self.matrix.shape} 与词表大小 {len(self.vocab)} / 维度 {self.dim} 不符"
            )

    def __len__(self) -> int:
        return len(self.vocab)

    def __contains__(self, token: str) -> bool:
        return token.lower() in self.vocab

    def get(self, token: str) -> Optional[np.ndarray]:
        row = self.vocab.get(token.lower())
        return None if row is None else self.matrix[row]

    def lookup(self, tokens: Sequence[str]) -> Tuple[np.ndarray, np.ndarray]:
        """
        批量查表

        Returns:
            (n x dim 矩阵，OOV 为零行; 长度 n 的布尔数组，标记是否在词表内)
        """
        rows = [self.vocab.get(token.lower(), -1) for token in tokens]
        known = np.array([r >= 0 for r in rows], dtype=bool)
        out = np.zeros((len(rows), self.dim), dtype=np.float64)
        if known.any():
            out[known] = self.matrix[[r for r in rows if r >= 0]]
        return out, known

    def tokens(self) -> List[str]:
        return sorted(self.vocab, key=self.vocab.get)


def load_embeddings(path: Union[str, Path]) -> EmbeddingTable:
    """
    读取词向量文件

    格式: 首行 "<vocab_size> <dim>"，其后每行一个 token 及 dim 个数值
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return parse_embeddings(lines, source=str(path))


def parse_embeddings(lines: Iterable[str], source: str = "<memory>") -> EmbeddingTable:
    lines = [line for line in lines if line.strip()]
    if not lines:
        raise EmbeddingFormatError(f"{source}: 缺少首行")

    header = lines[0].split()
    if len(header) != 2 or not all(part.isdigit() for part in header):
        raise EmbeddingFormatError(f"{source}: 首行应为 '<vocab_size> <dim>'，实际 {lines[0]!r}")
    vocab_size, dim = int(header[0]), int(header[1])

    rows = lines[1:]
    if len(rows) != vocab_size:
        raise EmbeddingFormatError(f"{source}: 首行声明 {vocab_size} 个 token，实际 {len(rows)} 行")

    vocab: Dict[str, int] = {}
    matrix = np.zeros((vocab_size, dim), dtype=np.float64)
    for i, row in enumerate(rows):
        parts = row.split()
        if len(parts) != dim + 1:
            raise EmbeddingFormatError(f"{source} 第 {i + 2} 行: 期望 {dim} 个数值，实际 {len(parts) - 1} 个")
        token = parts[0]
        if token in vocab:
            raise EmbeddingFormatError(f"{source} 第 {i + 2} 行: 重复的 token {token!r}")
        try:
            values = [float(x) for x in parts[1:]]
        except ValueError as e:
            raise EmbeddingFormatError(f"{source} 第 {i + 2} 行: {e}") from e
        if not all(math.isfinite(v) for v in values):
            raise EmbeddingFormatError(f"{source} 第 {i + 2} 行: 包含非有限值")
        vocab[token] = i
        matrix[i] = values

    logger.info(f"读取词向量 {source}: {vocab_size} 个 token, dim={dim}")
    return EmbeddingTable(dim=dim, vocab=vocab, matrix=matrix)


def write_embeddings(table: EmbeddingTable, path: Union[str, Path]) -> None:
    lines = [f"{len(table)} {table.dim}"]
    for token in table.tokens():
        values = " ".join(repr(float(v)) for v in table.matrix[table.vocab[token]])
        lines.append(f"{token} {values}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def random_embeddings(tokens: Sequence[str], dim: int, rng: np.random.Generator) -> EmbeddingTable:
    """为给定词表生成高斯随机词向量（用于合成语料与测试）"""
    vocab = {}
    for token in tokens:
        vocab.setdefault(token.lower(), len(vocab))
    matrix = rng.standard_normal((len(vocab), dim)) / math.sqrt(dim)
    return EmbeddingTable(dim=dim, vocab=vocab, matrix=matrix)


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    """
    余弦相似度

    任一向量范数为 0 时返回 0
    """
    vec1 = np.asarray(u, dtype=np.float64)
    vec2 = np.asarray(v, dtype=np.float64)
    if vec1.shape != vec2.shape:
        raise DimensionMismatchError(f"维度不一致: {vec1.shape} vs {vec2.shape}")

    norm1 = np.linalg.norm(vec1)
    norm2 = np.linalg.norm(vec2)
    if norm1 == 0 or norm2 == 0:
        return 0.0
    similarity = float(np.dot(vec1, vec2) / (norm1 * norm2))
    return max(-1.0, min(1.0, similarity))
