"""Joint (s, c) score filtering and the balanced detector-split helper.

s is the cosine between an image embedding and the centroid of the prompt
template embeddings; c is a detector probability. "Keep the top fraction" is
rank-based: drop exactly floor((1 - keep) * N) lowest-scored records, ties
resolved by record id so the cut is reproducible.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .embeddings import EmbeddingVector, stack_vectors
from .errors import ValidationError
from .records import Disposition, FilterPolicy, PipelineLedger


@dataclass(frozen=True)
class TemplateSet:
    templates: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.templates:
            raise ValidationError("template set is empty")


@dataclass(frozen=True)
class ScorePair:
    s: float
    c: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.s) and -1.0 <= self.s <= 1.0):
            raise ValidationError(f"s must be a finite cosine in [-1, 1], got {self.s}")
        if not (math.isfinite(self.c) and 0.0 <= self.c <= 1.0):
            raise ValidationError(f"c must be a finite probability in [0, 1], got {self.c}")


def load_template_set(path: str | Path | None = None) -> TemplateSet:
    """Load prompt templates; defaults to the bundled 33-template list."""
    if path is None:
        text = resources.files("rscurate.data").joinpath("score_templates.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return TemplateSet(templates=tuple(json.loads(text)["templates"]))


def template_centroid(text_embeddings: Sequence[EmbeddingVector]) -> EmbeddingVector:
    """Componentwise mean of the template embeddings."""
    model_id, matrix = stack_vectors(text_embeddings)
    mean = matrix.mean(axis=0)
    if float(np.linalg.norm(mean)) < 1e-9:
        raise ValidationError("template centroid has (near-)zero norm; cosine undefined")
    return EmbeddingVector(model_id=model_id, values=mean)


def clip_score(f_t: EmbeddingVector, image_emb: EmbeddingVector) -> float:
    """Cosine similarity between the template centroid and an image embedding."""
    a = f_t.values.astype(np.float64)
    b = image_emb.values.astype(np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na < 1e-12 or nb < 1e-12:
        raise ValidationError("cosine undefined for zero-norm input")
    return float(np.dot(a, b) / (na * nb))


def _drop_count(n: int, keep_fraction: float) -> int:
    # floor((1 - keep) * n) == n - ceil(keep * n); the epsilon guards against
    # float noise like 0.9 * 10 -> 9.000000000000002.
    return n - math.ceil(keep_fraction * n - 1e-9)


def drop_lowest(scores: Mapping[str, float], keep_fraction: float) -> set[str]:
    """Keep the top `keep_fraction` of entries by value.

    Exactly floor((1 - keep_fraction) * N) entries are dropped; among tied
    values the lower record id is dropped first.
    """
    if not (0.0 < keep_fraction <= 1.0):
        raise ValidationError(f"keep_fraction must be in (0, 1], got {keep_fraction}")
    n = len(scores)
    drop = _drop_count(n, keep_fraction)
    if drop <= 0:
        return set(scores.keys())
    ranked = sorted(scores.items(), key=lambda kv: (kv[1], kv[0]))
    return {rid for rid, _ in ranked[drop:]}


def joint_filter(
    pairs: Mapping[str, ScorePair],
    policy: FilterPolicy,
    sources: Mapping[str, str] | None = None,
    stage: str = "score-filter",
) -> tuple[set[str], PipelineLedger]:
    """Keep records in the top keep_fraction_s of s AND top keep_fraction_c of c.

    `sources` maps record_id -> source name for ledger attribution; without it
    the returned ledger is empty and only the kept set is meaningful.
    """
    kept_s = drop_lowest({rid: p.s for rid, p in pairs.items()}, policy.keep_fraction_s)
    kept_c = drop_lowest({rid: p.c for rid, p in pairs.items()}, policy.keep_fraction_c)
    kept = kept_s & kept_c
    ledger = PipelineLedger()
    if sources is not None:
        for rid in sorted(pairs.keys()):
            disposition = Disposition.KEPT if rid in kept else Disposition.REMOVED_BY_SCORE_FILTER
            ledger.record(sources[rid], stage, disposition)
    return kept, ledger


def score_records(
    image_embeddings: Mapping[str, EmbeddingVector],
    centroid: EmbeddingVector,
    probabilities: Mapping[str, float],
) -> dict[str, ScorePair]:
    """Assemble the per-record (s, c) table from embeddings and probabilities."""
    pairs = {}
    for rid in sorted(image_embeddings.keys()):
        pairs[rid] = ScorePair(s=clip_score(centroid, image_embeddings[rid]), c=probabilities[rid])
    return pairs


def write_scores_csv(path: str | Path, pairs: Mapping[str, ScorePair], kept: set[str]) -> None:
    lines = ["record_id,s,c,kept"]
    for rid in sorted(pairs.keys()):
        p = pairs[rid]
        lines.append(f"{rid},{p.s:.8f},{p.c:.8f},{'true' if rid in kept else 'false'}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def detector_split(
    items: Sequence[tuple[str, str]],
    seed: int = 0,
    ratios: tuple[int, int, int] = (7, 1, 2),
) -> tuple[list[tuple[str, str]], list[tuple[str, str]], list[tuple[str, str]]]:
    """Per-class seeded shuffle then a 7:1:2 train/val/test split.

    Sizes per class are floor(0.7 n), floor(0.1 n), remainder, so classes stay
    balanced across splits. Requires at least two classes of at least 10 items.
    """
    if ratios != (7, 1, 2):
        raise ValidationError("only the 7:1:2 split is supported")
    by_class: dict[str, list[tuple[str, str]]] = {}
    for item_id, cls in items:
        by_class.setdefault(cls, []).append((item_id, cls))
    if len(by_class) < 2:
        raise ValidationError(f"need at least 2 classes, got {len(by_class)}")
    small = sorted(c for c, members in by_class.items() if len(members) < 10)
    if small:
        raise ValidationError(f"classes too small (need >= 10 items): {small}")
    train: list[tuple[str, str]] = []
    val: list[tuple[str, str]] = []
    test: list[tuple[str, str]] = []
    for cls in sorted(by_class.keys()):
        members = sorted(by_class[cls])
        h = hashlib.sha256(seed.to_bytes(8, "little", signed=True) + cls.encode("utf-8")).digest()
        rng = np.random.Generator(np.random.PCG64(int.from_bytes(h[:16], "little")))
        rng.shuffle(members)
        n = len(members)
        n_train = (7 * n) // 10
        n_val = n // 10
        train.extend(members[:n_train])
        val.extend(members[n_train : n_train + n_val])
        test.extend(members[n_train + n_val :])
    return train, val, test
