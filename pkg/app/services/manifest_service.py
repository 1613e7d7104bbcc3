"""
运行清单服务
计算配置与输入文件摘要；无论成功或失败都会写出清单
"""

import hashlib
import json
import logging
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterator, Optional, Sequence, Union

from app.core.config import settings
from app.models.manifest import RunManifest

logger = logging.getLogger(__name__)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_config(config: Dict[str, Any]) -> str:
    """规范化 JSON（键排序）后的 sha256"""
    return digest_bytes(json.dumps(config, sort_keys=True, default=str).encode("utf-8"))


def digest_path(path: Union[str, Path]) -> str:
    """文件内容摘要；目录按文件名排序依次摘要文件名与内容"""
    path = Path(path)
    if path.is_file():
        return digest_bytes(path.read_bytes())
    h = hashlib.sha256()
    for child in sorted(p for p in path.rglob("*") if p.is_file()):
        h.update(str(child.relative_to(path)).encode("utf-8"))
        h.update(b"\0")
        h.update(child.read_bytes())
    return h.hexdigest()


def write_manifest(manifest: RunManifest, path: Union[str, Path]) -> None:
    Path(path).write_text(manifest.model_dump_json(indent=2), encoding="utf-8")


@contextmanager
def recorded_run(
    subcommand: str,
    config: Dict[str, Any],
    inputs: Sequence[Union[str, Path]] = (),
    seed: Optional[int] = None,
    manifest_path: Optional[Union[str, Path]] = None,
) -> Iterator[RunManifest]:
    """
    记录一次运行

    with recorded_run("score", cfg, [gold, pred], manifest_path=out) as manifest:
        ...
    退出时写出清单（异常时 status=failed 并继续抛出）
    """
    manifest = RunManifest(
        subcommand=subcommand,
        config_digest=digest_config(config),
        input_digests={str(p): digest_path(p) for p in inputs if Path(p).exists()},
        seed=seed,
        tool_version=settings.APP_VERSION,
        started_at=_now(),
    )
    try:
        yield manifest
        manifest.status = "ok"
    except BaseException as e:
        manifest.status = "failed"
        manifest.error = f"{type(e).__name__}: {e}"
        raise
    finally:
        manifest.finished_at = _now()
        if manifest_path is not None:
            write_manifest(manifest, manifest_path)
            logger.info(f"运行清单已写入 {manifest_path}")
