"""Declarative pipeline configuration.

The config file is a JSON tree; RSCURATE_* environment variables override
individual values (RSCURATE_SEED, RSCURATE_<SECTION>_<FIELD>). Validation
collects every problem before failing so a bad config is fixed in one pass.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

from .dedup import DedupPolicy
from .errors import ValidationError
from .fetch import FetchPolicy
from .records import FilterPolicy
from .shards import ShardSpec


@dataclass
class PathsConfig:
    input_manifest: str | None = None
    keywords: str | None = None  # None -> bundled default
    score_templates: str | None = None
    meta_templates: str | None = None
    gazetteer: str | None = None
    candidates: str | None = None
    out_dir: str = "out"
    store_dir: str | None = None  # None -> <out_dir>/store


@dataclass
class EmbeddingConfig:
    backend: str = "test"  # test | remote
    dim: int = 512
    remote_url: str | None = None
    score_model: str = "clip-convnext-xxl"
    rank_model_a: str = "clip-vith14"
    rank_model_b: str = "clip-rn50x64"


@dataclass
class FetchConfig:
    concurrency: int = 128
    per_host: int = 4
    retries: int = 3
    backoff_ms: int = 500
    timeout_s: float = 30.0

    def to_policy(self) -> FetchPolicy:
        return FetchPolicy(
            global_concurrency=self.concurrency,
            per_host_concurrency=self.per_host,
            retries=self.retries,
            backoff_base_s=self.backoff_ms / 1000.0,
            timeout_s=self.timeout_s,
        )


@dataclass
class DedupConfig:
    k: int = 5
    threshold: float = 0.96

    def to_policy(self, seed: int) -> DedupPolicy:
        return DedupPolicy(k=self.k, edge_threshold=self.threshold, seed=seed)


@dataclass
class FilterConfig:
    keep_s: float = 0.9
    keep_c: float = 0.8

    def to_policy(self) -> FilterPolicy:
        return FilterPolicy(keep_fraction_s=self.keep_s, keep_fraction_c=self.keep_c)


@dataclass
class CaptionConfig:
    mode: str = "rotation"  # rotation | rank1 | random
    top_m: int = 10
    top_k: int = 5


@dataclass
class ShardConfig:
    size: int = 10_000

    def to_spec(self) -> ShardSpec:
        return ShardSpec(max_samples_per_shard=self.size)


@dataclass
class PipelineConfig:
    seed: int = 0
    paths: PathsConfig = field(default_factory=PathsConfig)
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    fetch: FetchConfig = field(default_factory=FetchConfig)
    dedup: DedupConfig = field(default_factory=DedupConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    captions: CaptionConfig = field(default_factory=CaptionConfig)
    shard: ShardConfig = field(default_factory=ShardConfig)


_SECTIONS = {
    "paths": PathsConfig,
    "embedding": EmbeddingConfig,
    "fetch": FetchConfig,
    "dedup": DedupConfig,
    "filter": FilterConfig,
    "captions": CaptionConfig,
    "shard": ShardConfig,
}


def _coerce(raw: str, target_type: Any, problems: list[str], label: str):
    try:
        if target_type is int:
            return int(raw)
        if target_type is float:
            return float(raw)
        return raw
    except ValueError:
        problems.append(f"{label}: cannot parse {raw!r} as {target_type.__name__}")
        return None


def _apply_env(config: PipelineConfig, env: Mapping[str, str], problems: list[str]) -> None:
    if "RSCURATE_SEED" in env:
        v = _coerce(env["RSCURATE_SEED"], int, problems, "RSCURATE_SEED")
        if v is not None:
            config.seed = v
    for section_name, section_cls in _SECTIONS.items():
        section = getattr(config, section_name)
        for f in fields(section_cls):
            key = f"RSCURATE_{section_name.upper()}_{f.name.upper()}"
            if key not in env:
                continue
            target = type(getattr(section, f.name)) if getattr(section, f.name) is not None else str
            if target is bool:
                target = str
            v = _coerce(env[key], target, problems, key)
            if v is not None:
                setattr(section, f.name, v)


def _validate(config: PipelineConfig) -> list[str]:
    problems = []
    for name, value in (("filter.keep_s", config.filter.keep_s), ("filter.keep_c", config.filter.keep_c)):
        if not (0.0 < value <= 1.0):
            problems.append(f"{name} must be in (0, 1], got {value}")
    if config.fetch.concurrency < 1:
        problems.append(f"fetch.concurrency must be >= 1, got {config.fetch.concurrency}")
    if config.fetch.per_host < 1:
        problems.append(f"fetch.per_host must be >= 1, got {config.fetch.per_host}")
    if config.fetch.per_host > config.fetch.concurrency:
        problems.append("fetch.per_host must not exceed fetch.concurrency")
    if config.fetch.retries < 0:
        problems.append(f"fetch.retries must be >= 0, got {config.fetch.retries}")
    if config.dedup.k < 1:
        problems.append(f"dedup.k must be >= 1, got {config.dedup.k}")
    if not (-1.0 < config.dedup.threshold <= 1.0):
        problems.append(f"dedup.threshold must be in (-1, 1], got {config.dedup.threshold}")
    if config.shard.size < 1:
        problems.append(f"shard.size must be >= 1, got {config.shard.size}")
    if config.embedding.backend not in ("test", "remote"):
        problems.append(f"embedding.backend must be 'test' or 'remote', got {config.embedding.backend!r}")
    if config.embedding.backend == "remote" and not config.embedding.remote_url:
        problems.append("embedding.backend is 'remote' but embedding.remote_url is unset")
    if config.embedding.dim < 1:
        problems.append(f"embedding.dim must be >= 1, got {config.embedding.dim}")
    if config.captions.mode not in ("rotation", "rank1", "random"):
        problems.append(f"captions.mode must be rotation|rank1|random, got {config.captions.mode!r}")
    if config.captions.top_k > config.captions.top_m:
        problems.append("captions.top_k must not exceed captions.top_m")
    return problems


def load_config(path: str | Path, env: Mapping[str, str] | None = None) -> PipelineConfig:
    """Load, apply env overrides, and validate; raises with every problem listed."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    problems: list[str] = []
    config = PipelineConfig()
    if "seed" in raw:
        config.seed = raw["seed"]
    known = set(_SECTIONS) | {"seed"}
    for unknown in sorted(set(raw) - known):
        problems.append(f"unknown config section: {unknown!r}")
    for section_name, section_cls in _SECTIONS.items():
        section_raw = raw.get(section_name, {})
        section = getattr(config, section_name)
        valid_fields = {f.name for f in fields(section_cls)}
        for key, value in section_raw.items():
            if key not in valid_fields:
                problems.append(f"unknown key {section_name}.{key}")
                continue
            setattr(section, key, value)
    _apply_env(config, env if env is not None else os.environ, problems)
    problems.extend(_validate(config))
    if problems:
        raise ValidationError(problems)
    return config


def require_files(config: PipelineConfig, *path_names: str) -> None:
    """I/O check that the named paths exist for the stages about to run."""
    missing = []
    for name in path_names:
        value = getattr(config.paths, name)
        if value is not None and not Path(value).exists():
            missing.append(f"paths.{name}: {value}")
        if value is None and name in ("input_manifest", "candidates"):
            missing.append(f"paths.{name} is required but unset")
    if missing:
        raise FileNotFoundError("missing inputs: " + "; ".join(missing))
