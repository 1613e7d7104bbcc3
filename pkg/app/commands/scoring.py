"""
score / agreement 命令
"""

import logging

from app.commands.common import add_out_flag, add_schema_flag, emit_csv, emit_json, schema_from_args
from app.services.corpus_service import load_annotated_directory, load_annotations_for
from app.services.scoring_service import agreement_report, score_all

logger = logging.getLogger(__name__)

CSV_FIELDS = ["level", "event_type", "arg_type", "subtype", "tp", "fp", "fn", "precision", "recall", "f1"]


def _reports_json(reports):
    return {level: report.model_dump(mode="json") for level, report in reports.items()}


def run_score(args) -> int:
    """按 slot filling 规则评估预测"""
    schema = schema_from_args(args)
    samples, gold = load_annotated_directory(args.gold, schema)
    pred = load_annotations_for(samples, args.pred, schema)
    reports = score_all(gold, pred)
    logger.info(f"micro F1: trigger={reports['trigger'].micro.f1:.4f}, overall={reports['overall'].micro.f1:.4f}")

    if args.csv:
        rows = [row for report in reports.values() for row in report.csv_rows()]
        emit_csv(rows, CSV_FIELDS, args.out)
    else:
        emit_json(_reports_json(reports), args.out)
    return 0


def run_agreement(args) -> int:
    """两位标注者之间的 trigger kappa 与完整结构 F1"""
    schema = schema_from_args(args)
    samples, ann_a = load_annotated_directory(args.a, schema)
    ann_b = load_annotations_for(samples, args.b, schema)
    report = agreement_report(ann_a, ann_b, samples, schema)
    emit_json(report.model_dump(mode="json"), args.out)
    return 0


def register(subparsers) -> None:
    score = subparsers.add_parser("score", help="评估预测标注")
    score.add_argument("--gold", required=True, help="gold 目录（{id}.txt + {id}.ann）")
    score.add_argument("--pred", required=True, help="预测目录（{id}.ann）")
    add_schema_flag(score)
    score.add_argument("--csv", action="store_true", help="输出扁平 CSV 行")
    add_out_flag(score)
    score.set_defaults(func=run_score, inputs=["gold", "pred", "schema"])

    agreement = subparsers.add_parser("agreement", help="标注者一致性")
    agreement.add_argument("--a", required=True, help="标注者 A 目录")
    agreement.add_argument("--b", required=True, help="标注者 B 目录")
    add_schema_flag(agreement)
    add_out_flag(agreement)
    agreement.set_defaults(func=run_agreement, inputs=["a", "b", "schema"])
