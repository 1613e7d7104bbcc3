"""
分词与分句
空白切分 + 首尾标点拆分，保留字符偏移；基于规则的分句
"""

import re
import string
from typing import List, Optional, Tuple

from app.models.corpus import Token

PUNCTUATION = frozenset(string.punctuation)
SENTENCE_TERMINATORS = frozenset({".", "!", "?"})

_CHUNK_PATTERN = re.compile(r"\S+")


def tokenize(text: str) -> List[Token]:
    """
    分词

    先按空白切分，再把首尾的标点逐个拆成独立 token；
    词内部的标点（如 1-2 中的连字符）保留。
    """
    tokens: List[Token] = []
    for match in _CHUNK_PATTERN.finditer(text):
        chunk = match.group(0)
        offset = match.start()

        lead = 0
        while lead < len(chunk) and chunk[lead] in PUNCTUATION:
            lead += 1
        trail = len(chunk)
        while trail > lead and chunk[trail - 1] in PUNCTUATION:
            trail -= 1

        pieces = [(i, i + 1) for i in range(lead)]
        if trail > lead:
            pieces.append((lead, trail))
        pieces.extend((i, i + 1) for i in range(trail, len(chunk)))

        for start, end in pieces:
            tokens.append(Token(
                text=chunk[start:end],
                char_start=offset + start,
                char_end=offset + end,
                index=len(tokens),
            ))
    return tokens


def split_sentences(tokens: List[Token], text: Optional[str] = None) -> List[Tuple[int, int]]:
    """
    分句

    在 . ! ? 之后断句；提供原文时，token 之间出现换行也断句。
    返回 [start, end) 区间列表，恰好划分全部 token。
    """
    bounds: List[Tuple[int, int]] = []
    start = 0
    for i, token in enumerate(tokens):
        is_last = i == len(tokens) - 1
        boundary = token.text in SENTENCE_TERMINATORS
        if not boundary and text is not None and not is_last:
            gap = text[token.char_end:tokens[i + 1].char_start]
            boundary = "\n" in gap
        if boundary or is_last:
            bounds.append((start, i + 1))
            start = i + 1
    return bounds
