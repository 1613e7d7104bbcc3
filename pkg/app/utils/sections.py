"""
章节提取工具
按 "标题:" 模式切分临床文档，并筛选 social history 章节
"""

import logging
import re
from typing import Iterable, List

from app.models.corpus import SectionSplit

logger = logging.getLogger(__name__)

# 行首的字母数字、/、\、&、空白，后接冒号
HEADING_PATTERN = re.compile(r"^([A-Za-z0-9/\\& ]+):", re.MULTILINE)


def extract_sections(document_text: str) -> List[SectionSplit]:
    """
    按标题切分文档

    Args:
        document_text: 文档全文

    Returns:
        章节列表；第一个标题之前的文本被丢弃
    """
    if not document_text:
        return []

    matches = [m for m in HEADING_PATTERN.finditer(document_text) if m.group(1).strip()]
    sections = []
    for i, match in enumerate(matches):
        body_end = matches[i + 1].start() if i + 1 < len(matches) else len(document_text)
        sections.append(SectionSplit(
            heading=match.group(1).strip(),
            body_char_start=match.end(),
            body_char_end=body_end,
        ))

    logger.debug(f"提取到 {len(sections)} 个章节")
    return sections


def normalize_heading(heading: str) -> str:
    """小写并合并空白"""
    return " ".join(heading.lower().split())


def filter_social_history(sections: List[SectionSplit], heading_aliases: Iterable[str]) -> List[SectionSplit]:
    """保留标题在别名集合中的章节"""
    aliases = set(heading_aliases)
    return [s for s in sections if normalize_heading(s.heading) in aliases]
