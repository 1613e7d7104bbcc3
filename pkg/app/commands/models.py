"""
train-surrogate / train-extractor / predict 命令
"""

import json
import logging
from pathlib import Path

from app.commands.common import add_schema_flag, emit_text, read_model, schema_from_args
from app.core.exceptions import TrainingDataError
from app.models.surrogate import TrainConfig
from app.services.corpus_service import load_annotated_directory, load_sample_directory, write_annotated_directory
from app.services.embedding_service import load_embeddings
from app.services.extractor_service import ExtractorModel, predict_annotations, train_extractor
from app.services.surrogate_service import (
    SurrogateModel,
    labels_from_annotations,
    load_labels,
    predict_profiles,
    profiles_to_json,
    train_surrogate,
)

logger = logging.getLogger(__name__)


def run_train_surrogate(args) -> int:
    """训练代理分类器，checkpoint 写入 --out"""
    schema = schema_from_args(args)
    embeddings = load_embeddings(args.embeddings)
    samples, annotations = load_annotated_directory(args.corpus, schema)
    labels = load_labels(args.labels) if args.labels else labels_from_annotations(annotations, samples, schema)
    config = read_model(TrainConfig, args.config)
    model = train_surrogate(samples, labels, schema, embeddings, config)
    emit_text(model.to_json(), args.out)
    return 0


def run_train_extractor(args) -> int:
    """训练事件抽取器，checkpoint 写入 --out"""
    schema = schema_from_args(args)
    embeddings = load_embeddings(args.embeddings)
    samples, annotations = load_annotated_directory(args.corpus, schema)
    config = read_model(TrainConfig, args.config)
    model = train_extractor(samples, annotations, schema, embeddings, config)
    emit_text(model.to_json(), args.out)
    return 0


def run_predict(args) -> int:
    """
    用 checkpoint 预测

    代理分类器 -> 概率分布 JSON（--out 文件）
    抽取器 -> {id}.txt + {id}.ann（--out 目录）
    """
    embeddings = load_embeddings(args.embeddings)
    text = Path(args.model).read_text(encoding="utf-8")
    kind = json.loads(text).get("meta", {}).get("kind")
    samples = load_sample_directory(args.corpus)

    if kind == "surrogate":
        model = SurrogateModel.from_json(text, embeddings)
        emit_text(profiles_to_json(predict_profiles(model, samples)), args.out)
    elif kind == "extractor":
        if not args.out:
            raise TrainingDataError("抽取器预测需要 --out 目录")
        model = ExtractorModel.from_json(text, embeddings)
        write_annotated_directory(args.out, samples, predict_annotations(model, samples))
    else:
        raise TrainingDataError(f"未知的 checkpoint 类型: {kind}")
    return 0


def register(subparsers) -> None:
    surrogate = subparsers.add_parser("train-surrogate", help="训练代理分类器")
    surrogate.add_argument("--corpus", required=True, help="标注样本目录")
    surrogate.add_argument("--embeddings", required=True, help="词向量文件")
    surrogate.add_argument("--labels", default=None, help="样本标签 JSON（默认由 .ann 推导）")
    surrogate.add_argument("--config", default=None, help="训练配置 JSON")
    surrogate.add_argument("--out", default=None, help="checkpoint 输出文件")
    add_schema_flag(surrogate)
    surrogate.set_defaults(func=run_train_surrogate, inputs=["corpus", "embeddings", "labels", "config", "schema"])

    extractor = subparsers.add_parser("train-extractor", help="训练事件抽取器")
    extractor.add_argument("--corpus", required=True, help="标注样本目录")
    extractor.add_argument("--embeddings", required=True, help="词向量文件")
    extractor.add_argument("--config", default=None, help="训练配置 JSON")
    extractor.add_argument("--out", default=None, help="checkpoint 输出文件")
    add_schema_flag(extractor)
    extractor.set_defaults(func=run_train_extractor, inputs=["corpus", "embeddings", "config", "schema"])

    predict = subparsers.add_parser("predict", help="用 checkpoint 预测")
    predict.add_argument("--model", required=True, help="checkpoint 文件")
    predict.add_argument("--embeddings", required=True, help="词向量文件")
    predict.add_argument("--corpus", required=True, help="样本目录")
    predict.add_argument("--out", default=None, help="输出文件（代理分类器）或目录（抽取器）")
    predict.set_defaults(func=run_predict, inputs=["model", "embeddings", "corpus"])
