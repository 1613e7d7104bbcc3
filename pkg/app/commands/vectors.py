"""
vectorize 命令
"""

import logging
from pathlib import Path

from app.commands.common import add_out_flag, emit_text
from app.services.corpus_service import load_sample_directory
from app.services.embedding_service import load_embeddings
from app.services.vector_service import fit_tfidf, vectorize_samples, vectors_to_json

logger = logging.getLogger(__name__)


def run_vectorize(args) -> int:
    """TF-IDF 加权平均词向量"""
    embeddings = load_embeddings(args.embeddings)
    samples = load_sample_directory(args.corpus)
    tfidf = fit_tfidf(samples, tf_mode=args.tf_mode)
    vectors = vectorize_samples(samples, embeddings, tfidf)

    if args.tfidf_out:
        Path(args.tfidf_out).write_text(tfidf.model_dump_json(indent=2), encoding="utf-8")
    emit_text(vectors_to_json(vectors), args.out)
    logger.info(f"生成 {len(vectors)} 个样本向量")
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("vectorize", help="生成样本向量")
    parser.add_argument("--embeddings", required=True, help="词向量文件")
    parser.add_argument("--corpus", required=True, help="样本目录")
    parser.add_argument("--tf-mode", dest="tf_mode", choices=["raw", "lognorm"], default=None)
    parser.add_argument("--tfidf-out", dest="tfidf_out", default=None, help="写出 TF-IDF 模型 JSON")
    add_out_flag(parser, "向量 JSON 输出文件（默认 stdout）")
    parser.set_defaults(func=run_vectorize, inputs=["embeddings", "corpus"])
