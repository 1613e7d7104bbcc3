"""
simulate 命令：合成语料上的 active vs random 配对实验
"""

import logging
from typing import List

from app.commands.common import add_out_flag, add_schema_flag, emit_csv, emit_text, read_model, schema_from_args
from app.core.exceptions import ForgeError
from app.models.simulation import CycleConfig, SyntheticSpec
from app.services.simulation_service import run_experiment

logger = logging.getLogger(__name__)

ENRICHMENT_FIELDS = ["seed", "label", "ratio"]


def parse_seeds(text: str) -> List[int]:
    try:
        seeds = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ForgeError(f"无法解析种子列表: {text!r}")
    if not seeds:
        raise ForgeError("至少需要一个种子")
    return seeds


def run_simulate(args) -> int:
    schema = schema_from_args(args)
    seeds = parse_seeds(args.seeds)
    cycle = read_model(CycleConfig, args.cycle)
    if args.spec:
        spec = read_model(SyntheticSpec, args.spec)
    else:
        spec = SyntheticSpec.default(schema, n_samples=args.n_samples)

    report = run_experiment(spec, cycle, schema, seeds)
    logger.info(f"active 胜出 {report.active_wins}/{len(seeds)} 个种子")

    if args.enrichment_csv:
        rows = [
            {"seed": seed, "label": label, "ratio": repr(ratio)}
            for seed, table in zip(report.seeds, report.enrichment)
            for label, ratio in table.items()
        ]
        emit_csv(rows, ENRICHMENT_FIELDS, args.enrichment_csv)
    emit_text(report.model_dump_json(indent=2) + "\n", args.out)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="模拟主动学习实验")
    parser.add_argument("--spec", default=None, help="合成语料规格 JSON（默认由 schema 生成）")
    parser.add_argument("--cycle", default=None, help="循环配置 JSON")
    parser.add_argument("--seeds", default="1,2,3,4,5", help="逗号分隔的种子列表")
    parser.add_argument("--n-samples", dest="n_samples", type=int, default=400, help="默认规格下的样本数")
    parser.add_argument("--enrichment-csv", dest="enrichment_csv", default=None, help="富集比 CSV 输出文件")
    add_schema_flag(parser)
    add_out_flag(parser, "实验报告 JSON 输出文件（默认 stdout）")
    parser.set_defaults(func=run_simulate, inputs=["spec", "cycle", "schema"])
