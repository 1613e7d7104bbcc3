"""
语料服务
文档 -> 样本构建，以及成对的 {id}.txt / {id}.ann 目录读写
"""

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

from app.core.config import settings
from app.core.exceptions import MissingInputError, SpanRangeError
from app.models.corpus import Sample
from app.models.event import AnnotationSet, Event, EventSchema
from app.utils.sections import extract_sections, filter_social_history
from app.utils.standoff import parse_standoff, serialize_standoff
from app.utils.tokenizer import split_sentences, tokenize

logger = logging.getLogger(__name__)


def build_sample(sample_id: str, text: str, source: str = "default", heading: str = "") -> Sample:
    """分词、分句并构建样本"""
    tokens = tokenize(text)
    return Sample(
        id=sample_id,
        source=source,
        heading=heading,
        text=text,
        tokens=tokens,
        sentence_bounds=split_sentences(tokens, text),
    )


def samples_from_document(
    document_text: str,
    stem: str,
    source: str = "default",
    heading_aliases: Optional[Iterable[str]] = None,
) -> List[Sample]:
    """
    从一篇文档中提取 social history 样本

    每个匹配的章节生成一个样本，ID 为 {stem}#{k}（k 从 0 开始）
    """
    aliases = set(heading_aliases if heading_aliases is not None else settings.SOCIAL_HISTORY_ALIASES)
    sections = filter_social_history(extract_sections(document_text), aliases)
    return [
        build_sample(f"{stem}#{k}", section.body(document_text), source=source, heading=section.heading)
        for k, section in enumerate(sections)
    ]


def extract_directory(
    doc_dir: Union[str, Path],
    source: Optional[str] = None,
    heading_aliases: Optional[Iterable[str]] = None,
) -> List[Sample]:
    """处理目录下所有 .txt 文档"""
    doc_dir = Path(doc_dir)
    if not doc_dir.is_dir():
        raise MissingInputError(f"目录不存在: {doc_dir}")

    samples: List[Sample] = []
    for path in sorted(doc_dir.glob("*.txt")):
        text = path.read_text(encoding="utf-8")
        found = samples_from_document(text, path.stem, source or doc_dir.name, heading_aliases)
        logger.debug(f"{path.name}: {len(found)} 个样本")
        samples.extend(found)
    logger.info(f"从 {doc_dir} 提取了 {len(samples)} 个样本")
    return samples


def load_sample_directory(data_dir: Union[str, Path], source: Optional[str] = None) -> List[Sample]:
    """只读取 {id}.txt 样本"""
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise MissingInputError(f"目录不存在: {data_dir}")
    return [
        build_sample(path.stem, path.read_text(encoding="utf-8"), source=source or data_dir.name)
        for path in sorted(data_dir.glob("*.txt"))
    ]


def load_annotated_directory(
    data_dir: Union[str, Path],
    schema: EventSchema,
    source: Optional[str] = None,
    require_ann: bool = False,
) -> Tuple[List[Sample], AnnotationSet]:
    """
    读取成对的 {id}.txt / {id}.ann

    缺少 .ann 的样本视为无事件（require_ann=True 时报错）
    """
    data_dir = Path(data_dir)
    samples: List[Sample] = []
    annotations: AnnotationSet = {}
    for sample in load_sample_directory(data_dir, source):
        ann_path = data_dir / f"{sample.id}.ann"
        if ann_path.exists():
            annotations[sample.id] = parse_standoff(ann_path.read_text(encoding="utf-8"), sample, schema)
        elif require_ann:
            raise MissingInputError(f"缺少标注文件: {ann_path}")
        else:
            annotations[sample.id] = []
        samples.append(sample)

    n_events = sum(len(v) for v in annotations.values())
    logger.info(f"读取 {data_dir}: {len(samples)} 个样本, {n_events} 个事件")
    return samples, annotations


def load_annotations_for(
    samples: List[Sample],
    ann_dir: Union[str, Path],
    schema: EventSchema,
) -> AnnotationSet:
    """按已有样本读取另一目录中的 {id}.ann（如预测结果）；缺失视为无事件"""
    ann_dir = Path(ann_dir)
    if not ann_dir.is_dir():
        raise MissingInputError(f"目录不存在: {ann_dir}")
    annotations: AnnotationSet = {}
    for sample in samples:
        ann_path = ann_dir / f"{sample.id}.ann"
        text = ann_path.read_text(encoding="utf-8") if ann_path.exists() else ""
        annotations[sample.id] = parse_standoff(text, sample, schema)
    return annotations


def write_annotated_directory(
    out_dir: Union[str, Path],
    samples: List[Sample],
    annotations: Optional[AnnotationSet] = None,
) -> None:
    """写出 {id}.txt 以及（可选）{id}.ann"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for sample in samples:
        (out_dir / f"{sample.id}.txt").write_text(sample.text, encoding="utf-8")
        if annotations is not None:
            events = annotations.get(sample.id, [])
            (out_dir / f"{sample.id}.ann").write_text(serialize_standoff(events, sample), encoding="utf-8")


def validate_annotations(samples: List[Sample], annotations: AnnotationSet) -> None:
    """检查标注引用的样本与 token 是否存在"""
    by_id: Dict[str, Sample] = {s.id: s for s in samples}
    for sample_id, events in annotations.items():
        if sample_id not in by_id:
            raise MissingInputError(f"标注引用了不存在的样本: {sample_id}")
        limit = by_id[sample_id].n_tokens
        for event in events:
            if event.max_token() >= limit:
                raise SpanRangeError(f"{sample_id}: 事件 token 超出范围 ({event.max_token()} >= {limit})")


def events_by_sentence(sample: Sample, events: List[Event]) -> List[List[Event]]:
    """按 trigger 起始 token 所在句子对事件分组"""
    grouped: List[List[Event]] = [[] for _ in sample.sentence_bounds]
    for event in events:
        grouped[sample.sentence_of(event.trigger.token_span[0])].append(event)
    return grouped
