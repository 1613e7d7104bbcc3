"""
extract-sections 命令
"""

import logging

from app.commands.common import emit_json
from app.services.corpus_service import extract_directory, write_annotated_directory

logger = logging.getLogger(__name__)


def run_extract_sections(args) -> int:
    """从目录中的文档提取 social history 样本"""
    aliases = [a.strip().lower() for a in args.aliases.split(",")] if args.aliases else None
    samples = extract_directory(args.directory, source=args.source, heading_aliases=aliases)
    if args.out:
        write_annotated_directory(args.out, samples)
    emit_json([
        {
            "id": sample.id,
            "source": sample.source,
            "heading": sample.heading,
            "n_tokens": sample.n_tokens,
            "n_sentences": len(sample.sentence_bounds),
        }
        for sample in samples
    ])
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("extract-sections", help="提取 social history 章节为样本")
    parser.add_argument("directory", help="文档目录（*.txt）")
    parser.add_argument("--out", default=None, help="样本输出目录，写出 {id}.txt")
    parser.add_argument("--source", default=None, help="来源标记（默认为目录名）")
    parser.add_argument("--aliases", default=None, help="逗号分隔的标题别名")
    parser.set_defaults(func=run_extract_sections, inputs=["directory"])
