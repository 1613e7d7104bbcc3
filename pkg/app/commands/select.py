"""
select 命令：贪心批量查询
"""

import logging
from pathlib import Path

from app.commands.common import add_out_flag, emit_csv
from app.core.exceptions import MissingInputError
from app.models.selection import SelectionConfig
from app.services.selection_service import greedy_select
from app.services.surrogate_service import load_profiles
from app.services.vector_service import load_vectors

logger = logging.getLogger(__name__)

CSV_FIELDS = ["rank", "sample_id", "u", "s", "q_marginal"]


def _read_pool(path: str):
    ids = [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines()]
    return [sample_id for sample_id in ids if sample_id]


def run_select(args) -> int:
    profiles = load_profiles(args.profiles)
    vectors = load_vectors(args.vectors)
    pool = _read_pool(args.pool) if args.pool else sorted(profiles)

    missing = [sample_id for sample_id in pool if sample_id not in profiles or sample_id not in vectors]
    if missing:
        raise MissingInputError(f"{len(missing)} 个样本缺少概率分布或向量，例如 {missing[0]}")

    config = SelectionConfig(
        batch_size=args.n,
        alpha=args.alpha,
        similarity_mode=args.sim,
        uncertainty_mode=args.mode,
        rescore_final_batch=args.rescore_final_batch,
    )
    batch = greedy_select(pool, profiles, vectors, config)
    emit_csv(batch.csv_rows(), CSV_FIELDS, args.out)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("select", help="从样本池贪心选择待标注批次")
    parser.add_argument("--profiles", required=True, help="代理分类器输出的概率分布 JSON")
    parser.add_argument("--vectors", required=True, help="样本向量 JSON")
    parser.add_argument("--pool", default=None, help="候选 ID 列表文件（每行一个，默认全部）")
    parser.add_argument("--mode", choices=["sum", "loop"], default=SelectionConfig().uncertainty_mode)
    parser.add_argument("--sim", choices=["average", "maximum"], default=SelectionConfig().similarity_mode)
    parser.add_argument("--alpha", type=float, default=SelectionConfig().alpha)
    parser.add_argument("--n", type=int, required=True, help="批大小")
    parser.add_argument("--rescore-final-batch", dest="rescore_final_batch", action="store_true")
    add_out_flag(parser, "CSV 输出文件（默认 stdout）")
    parser.set_defaults(func=run_select, inputs=["profiles", "vectors", "pool"])
