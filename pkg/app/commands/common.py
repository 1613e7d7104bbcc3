"""
命令行共用工具：输出、配置读取
"""

import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Type, TypeVar

from pydantic import BaseModel

from app.models.event import EventSchema
from app.utils.standoff import load_schema

logger = logging.getLogger(__name__)

M = TypeVar("M", bound=BaseModel)


def emit_text(text: str, out: Optional[str] = None) -> None:
    """写入文件，未指定时写到 stdout"""
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
        logger.info(f"输出已写入 {out}")
    else:
        sys.stdout.write(text)


def emit_json(payload: Any, out: Optional[str] = None) -> None:
    emit_text(json.dumps(payload, indent=2, sort_keys=False) + "\n", out)


def emit_csv(rows: List[Dict[str, Any]], fieldnames: List[str], out: Optional[str] = None) -> None:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    emit_text(buffer.getvalue(), out)


def read_model(model_cls: Type[M], path: Optional[str]) -> M:
    """从 JSON 文件读取配置模型；未指定文件时使用默认值"""
    if not path:
        return model_cls()
    return model_cls.model_validate_json(Path(path).read_text(encoding="utf-8"))


def schema_from_args(args) -> EventSchema:
    return load_schema(getattr(args, "schema", None))


def add_schema_flag(parser) -> None:
    parser.add_argument("--schema", default=None, help="事件 schema JSON（默认使用内置 schema）")


def add_out_flag(parser, help_text: str = "输出文件（默认 stdout）") -> None:
    parser.add_argument("--out", default=None, help=help_text)
