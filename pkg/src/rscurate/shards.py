"""Webdataset-style tar shards: per sample a .jpg, .txt, and .json member.

Image bytes pass through verbatim (the .jpg suffix is the format convention,
not a re-encode), and tar headers carry zeroed timestamps and ownership so a
rerun produces byte-identical shards.
"""

from __future__ import annotations

import io
import json
import logging
import re
import tarfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import RscurateError, ValidationError

logger = logging.getLogger(__name__)

_KEY_SAFE = re.compile(r"[^A-Za-z0-9._-]+")


@dataclass
class ShardSpec:
    max_samples_per_shard: int = 10_000
    name_pattern: str = "shard-{index:06d}.tar"

    def __post_init__(self) -> None:
        if self.max_samples_per_shard < 1:
            raise ValidationError(f"max_samples_per_shard must be >= 1, got {self.max_samples_per_shard}")
        if "{index" not in self.name_pattern:
            raise ValidationError("name_pattern must contain an {index...} placeholder")


@dataclass
class ShardSample:
    key: str
    image: bytes
    caption: str
    meta: dict[str, Any] = field(default_factory=dict)


class MissingMemberError(RscurateError):
    def __init__(self, key: str, member: str):
        self.key = key
        self.member = member
        super().__init__(f"sample {key!r} is missing its .{member} member")


class ShardReadError(RscurateError):
    def __init__(self, path: str, offset: int, detail: str):
        self.offset = offset
        super().__init__(f"{path}: corrupt shard at byte offset {offset}: {detail}")


def sanitize_key(key: str) -> str:
    cleaned = _KEY_SAFE.sub("_", key)
    return cleaned or "_"


def _member(name: str, payload: bytes) -> tuple[tarfile.TarInfo, io.BytesIO]:
    info = tarfile.TarInfo(name=name)
    info.size = len(payload)
    info.mtime = 0
    info.uid = info.gid = 0
    info.uname = info.gname = ""
    info.mode = 0o644
    return info, io.BytesIO(payload)


def write_shards(
    samples: Iterable[ShardSample],
    out_dir: str | Path,
    spec: ShardSpec | None = None,
) -> tuple[list[Path], list[tuple[str, str]]]:
    """Write shards plus the (key, shard_file) index; returns both.

    Keys are sanitized to tar-safe characters; a post-sanitize collision is an
    error. An empty input produces no shards and an empty index.
    """
    spec = spec or ShardSpec()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    shard_paths: list[Path] = []
    index: list[tuple[str, str]] = []
    seen: set[str] = set()
    tar: tarfile.TarFile | None = None
    shard_name = ""
    in_shard = 0
    for sample in samples:
        key = sanitize_key(sample.key)
        if key in seen:
            raise ValidationError(f"duplicate sample key after sanitization: {key!r}")
        seen.add(key)
        if tar is None or in_shard >= spec.max_samples_per_shard:
            if tar is not None:
                tar.close()
            shard_name = spec.name_pattern.format(index=len(shard_paths))
            path = out_dir / shard_name
            tar = tarfile.open(path, "w", format=tarfile.USTAR_FORMAT)
            shard_paths.append(path)
            in_shard = 0
        meta_payload = json.dumps(sample.meta, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
        for suffix, payload in (
            ("jpg", sample.image),
            ("txt", sample.caption.encode("utf-8")),
            ("json", meta_payload.encode("utf-8")),
        ):
            info, buf = _member(f"{key}.{suffix}", payload)
            tar.addfile(info, buf)
        index.append((key, shard_name))
        in_shard += 1
    if tar is not None:
        tar.close()
    if not index:
        logger.warning("no samples given; wrote zero shards to %s", out_dir)
    return shard_paths, index


def write_index_csv(path: str | Path, index: list[tuple[str, str]]) -> None:
    lines = ["key,shard_file"]
    lines.extend(f"{key},{shard}" for key, shard in index)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_shard(path: str | Path) -> Iterator[tuple[str, bytes, str, dict[str, Any]]]:
    """Yield (key, image bytes, caption, meta) in stored order."""
    path = Path(path)
    with open(path, "rb") as f:
        try:
            tar = tarfile.open(fileobj=f, mode="r:")
        except tarfile.TarError as exc:
            raise ShardReadError(str(path), f.tell(), str(exc)) from exc
        current_key: str | None = None
        parts: dict[str, bytes] = {}

        def finish(key: str, members: dict[str, bytes]):
            for required in ("jpg", "txt", "json"):
                if required not in members:
                    raise MissingMemberError(key, required)
            return key, members["jpg"], members["txt"].decode("utf-8"), json.loads(members["json"])

        try:
            for info in tar:
                stem, _, suffix = info.name.rpartition(".")
                if current_key is not None and stem != current_key:
                    yield finish(current_key, parts)
                    parts = {}
                current_key = stem
                parts[suffix] = tar.extractfile(info).read()
        except tarfile.TarError as exc:
            raise ShardReadError(str(path), f.tell(), str(exc)) from exc
        if current_key is not None:
            yield finish(current_key, parts)
