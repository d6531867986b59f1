"""Candidate caption re-ranking and rotation-invariant selection.

Captions arrive as precomputed candidates (nominally 20 per image). Stage A
ranks them by cosine against the image under one model and keeps the top 10;
stage B re-ranks that subset under a second model down to 5. The
rotation-invariant criterion then picks the candidate whose similarity to 12
rotated variants of the image (30 degree steps) has minimum variance. This
module works purely on embeddings; it never touches pixels.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .embeddings import EmbeddingVector
from .errors import ValidationError

N_ROTATIONS = 12


class SelectionMode(str, Enum):
    RANK1 = "rank1"
    ROTATION_INVARIANT = "rotation"
    RANDOM_OF_BOTH = "random"


@dataclass
class CaptionCandidateSet:
    image_id: str
    candidates: list[str]
    stage_a_scores: list[float] | None = None
    stage_b_scores: list[float] | None = None

    def __post_init__(self) -> None:
        if not self.candidates:
            raise ValidationError(f"{self.image_id}: candidate list is empty")
        if len(set(self.candidates)) != len(self.candidates):
            raise ValidationError(f"{self.image_id}: candidates contain verbatim duplicates")


def _cosines(image_emb: EmbeddingVector, text_embs: Sequence[EmbeddingVector]) -> np.ndarray:
    img = image_emb.values.astype(np.float64)
    img = img / np.linalg.norm(img)
    mat = np.stack([t.values for t in text_embs]).astype(np.float64)
    mat = mat / np.linalg.norm(mat, axis=1, keepdims=True)
    return mat @ img


def _ranked_indices(scores: np.ndarray, top: int) -> list[int]:
    # Descending score, ties by candidate index ascending.
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return order[:top]


def rank_stage_a(
    image_emb: EmbeddingVector, candidate_text_embs: Sequence[EmbeddingVector], top_m: int = 10
) -> list[int]:
    """Indices of the top_m candidates by cosine similarity to the image."""
    scores = _cosines(image_emb, candidate_text_embs)
    return _ranked_indices(scores, top_m)


def rerank_stage_b(
    image_emb: EmbeddingVector,
    subset_text_embs: Sequence[EmbeddingVector],
    subset_indices: Sequence[int],
    top_k: int = 5,
) -> list[int]:
    """Re-rank a stage-A subset under the second model; returns original indices."""
    if len(subset_text_embs) != len(subset_indices):
        raise ValidationError("subset embeddings and indices differ in length")
    scores = _cosines(image_emb, subset_text_embs)
    local = _ranked_indices(scores, top_k)
    return [subset_indices[i] for i in local]


def validate_rotation_matrix(matrix: np.ndarray) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1:
        raise ValidationError("rotation matrix must be 2-D with at least one row")
    if m.shape[1] != N_ROTATIONS:
        raise ValidationError(f"rotation matrix must have exactly {N_ROTATIONS} columns, got {m.shape[1]}")
    if not np.isfinite(m).all():
        raise ValidationError("rotation matrix contains non-finite values")
    return m


def rotation_variance(matrix: np.ndarray, j: int) -> float:
    """Population variance of candidate j's similarities across the 12 rotations."""
    m = validate_rotation_matrix(matrix)
    if not (0 <= j < m.shape[0]):
        raise ValidationError(f"candidate index {j} out of range for {m.shape[0]} rows")
    return float(np.var(m[j]))


def rotation_invariant_select(matrix: np.ndarray) -> int:
    """Index of the candidate with minimum rotation variance (ties: lowest index)."""
    m = validate_rotation_matrix(matrix)
    variances = np.var(m, axis=1)
    return int(np.argmin(variances))


def select_final_caption(
    candidate_set: CaptionCandidateSet,
    stage_b_indices: Sequence[int],
    matrix: np.ndarray | None,
    mode: SelectionMode,
    seed: int = 0,
) -> str:
    """Final caption under the configured selection mode.

    `stage_b_indices` is the stage-B ranking (original candidate indices,
    best first); `matrix` rows follow that same order.
    """
    if not stage_b_indices:
        raise ValidationError(f"{candidate_set.image_id}: empty stage-B ranking")
    rank1 = candidate_set.candidates[stage_b_indices[0]]
    if mode is SelectionMode.RANK1:
        return rank1
    if matrix is None:
        raise ValidationError(f"{candidate_set.image_id}: mode {mode.value} requires a rotation matrix")
    m = validate_rotation_matrix(matrix)
    if m.shape[0] != len(stage_b_indices):
        raise ValidationError(
            f"{candidate_set.image_id}: matrix has {m.shape[0]} rows for {len(stage_b_indices)} candidates"
        )
    rotation_pick = candidate_set.candidates[stage_b_indices[rotation_invariant_select(m)]]
    if mode is SelectionMode.ROTATION_INVARIANT:
        return rotation_pick
    # RANDOM_OF_BOTH: seeded coin per image.
    h = hashlib.sha256(seed.to_bytes(8, "little", signed=True) + candidate_set.image_id.encode("utf-8")).digest()
    coin = h[0] & 1
    return rank1 if coin == 0 else rotation_pick
