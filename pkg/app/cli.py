"""
命令行入口

sdoh-forge <subcommand> [options]
退出码：0 成功，1 用法错误，2 输入或数据错误
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from app.commands import corpus, models, scoring, select, simulate, vectors
from app.core.config import settings
from app.core.exceptions import ForgeError
from app.services.manifest_service import recorded_run

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2

COMMANDS = (corpus, scoring, vectors, models, select, simulate)


class ForgeArgumentParser(argparse.ArgumentParser):
    """用法错误以退出码 1 结束（argparse 默认为 2）"""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def build_parser() -> ForgeArgumentParser:
    parser = ForgeArgumentParser(prog=settings.APP_NAME, description="SDOH 事件抽取与主动学习工具")
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    parser.add_argument("--log-level", dest="log_level", default=settings.LOG_LEVEL, help="日志级别")
    parser.add_argument("--manifest", default=None, help="运行清单输出文件")
    subparsers = parser.add_subparsers(dest="command", parser_class=ForgeArgumentParser)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def setup_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def cli_dispatch(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # --help / --version 为 0，用法错误为 1
        return e.code if isinstance(e.code, int) else EXIT_OK
    if not getattr(args, "func", None):
        parser.print_help(sys.stderr)
        return EXIT_USAGE

    setup_logging(args.log_level)
    config = {k: v for k, v in vars(args).items() if k not in ("func", "inputs")}
    inputs = [getattr(args, name) for name in args.inputs if getattr(args, name, None)]

    try:
        with recorded_run(args.command, config, inputs, getattr(args, "seed", None), args.manifest):
            return args.func(args)
    except (ForgeError, ValidationError, json.JSONDecodeError, OSError) as e:
        logger.error(f"{args.command} 失败: {e}")
        return EXIT_INPUT
