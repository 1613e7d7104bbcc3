"""
语料数据模型
章节切分、token 与样本（social history section）
"""

from typing import List, Tuple
from pydantic import BaseModel, ConfigDict, Field, model_validator


class Token(BaseModel):
    """Token，偏移量相对于样本文本"""
    model_config = ConfigDict(frozen=True)

    text: str = Field(..., min_length=1, description="token 文本")
    char_start: int = Field(..., ge=0, description="起始字符偏移")
    char_end: int = Field(..., ge=1, description="结束字符偏移（不含）")
    index: int = Field(..., ge=0, description="样本内 token 序号，从 0 开始")

    @model_validator(mode="after")
    def check_offsets(self) -> "Token":
        if self.char_start >= self.char_end:
            raise ValueError(f"token {self.index}: char_start 必须小于 char_end")
        return self


class SectionSplit(BaseModel):
    """文档中的一个章节（标题 + 正文偏移）"""
    model_config = ConfigDict(frozen=True)

    heading: str = Field(..., description="章节标题（不含冒号）")
    body_char_start: int = Field(..., ge=0, description="正文起始偏移")
    body_char_end: int = Field(..., ge=0, description="正文结束偏移（不含）")

    def body(self, document_text: str) -> str:
        """取出正文文本"""
        return document_text[self.body_char_start:self.body_char_end]


class Sample(BaseModel):
    """样本：一个分好词、分好句的章节"""
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., min_length=1, description="样本 ID，形如 {stem}#{k}")
    source: str = Field(default="default", description="语料来源标记")
    heading: str = Field(default="", description="章节标题")
    text: str = Field(..., description="章节正文")
    tokens: List[Token] = Field(default_factory=list, description="token 列表")
    sentence_bounds: List[Tuple[int, int]] = Field(default_factory=list, description="句子边界 [start, end)")

    @model_validator(mode="after")
    def check_structure(self) -> "Sample":
        previous_end = 0
        for i, token in enumerate(self.tokens):
            if token.index != i:
                raise ValueError(f"{self.id}: token 序号不连续 ({token.index} != {i})")
            if token.char_start < previous_end:
                raise ValueError(f"{self.id}: token {i} 与前一个 token 重叠")
            if token.char_end > len(self.text) or self.text[token.char_start:token.char_end] != token.text:
                raise ValueError(f"{self.id}: token {i} 与原文不一致")
            previous_end = token.char_end

        cursor = 0
        for start, end in self.sentence_bounds:
            if start != cursor or end <= start:
                raise ValueError(f"{self.id}: 句子边界必须无缝划分 token 区间")
            cursor = end
        if cursor != len(self.tokens):
            raise ValueError(f"{self.id}: 句子边界未覆盖全部 token")
        return self

    @property
    def n_tokens(self) -> int:
        return len(self.tokens)

    def sentence_of(self, token_index: int) -> int:
        """返回 token 所在句子的序号"""
        for k, (start, end) in enumerate(self.sentence_bounds):
            if start <= token_index < end:
                return k
        raise IndexError(f"{self.id}: token {token_index} 超出范围")

    def token_texts(self) -> List[str]:
        return [token.text for token in self.tokens]
