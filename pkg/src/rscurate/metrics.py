"""Retrieval and zero-shot classification metrics over fixed embeddings.

Everything here is deterministic: similarity ties are broken by candidate id
ascending, and zero-shot prediction uses nearest class centroid built from a
prompt ensemble.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .embeddings import EmbeddingVector, stack_vectors
from .errors import ValidationError

RECALL_KS = (1, 5, 10)


@dataclass
class RetrievalGroundTruth:
    """Caption-to-image assignment; many captions may share one image."""

    image_ids: list[str]
    caption_ids: list[str]
    caption_to_image: dict[str, str]

    def __post_init__(self) -> None:
        problems = []
        if len(set(self.image_ids)) != len(self.image_ids):
            problems.append("duplicate image ids")
        if len(set(self.caption_ids)) != len(self.caption_ids):
            problems.append("duplicate caption ids")
        images = set(self.image_ids)
        for cid in self.caption_ids:
            target = self.caption_to_image.get(cid)
            if target is None:
                problems.append(f"caption {cid!r} has no ground-truth image")
            elif target not in images:
                problems.append(f"caption {cid!r} maps to unknown image {target!r}")
        if problems:
            raise ValidationError(problems)


def similarity_matrix(image_embs: Sequence[EmbeddingVector], text_embs: Sequence[EmbeddingVector]) -> np.ndarray:
    """Cosine matrix with images as rows and texts as columns."""
    _, imgs = stack_vectors(list(image_embs))
    _, txts = stack_vectors(list(text_embs))
    if imgs.shape[1] != txts.shape[1]:
        raise ValidationError(f"dimension mismatch: {imgs.shape[1]} vs {txts.shape[1]}")
    imgs = imgs / np.linalg.norm(imgs, axis=1, keepdims=True)
    txts = txts / np.linalg.norm(txts, axis=1, keepdims=True)
    return imgs @ txts.T


def _top_k(scores: np.ndarray, ids: Sequence[str], k: int) -> list[int]:
    order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
    return order[:k]


def recall_at_k(matrix: np.ndarray, truth: RetrievalGroundTruth, k: int, direction: str) -> float:
    """Fraction of queries whose ground truth appears in the top-k ranking.

    i2t: per image, hit if any of its captions ranks in the top-k texts.
    t2i: per caption, hit if its image ranks in the top-k images.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    m = np.asarray(matrix, dtype=np.float64)
    n_img, n_txt = m.shape
    if n_img != len(truth.image_ids) or n_txt != len(truth.caption_ids):
        raise ValidationError(
            f"matrix shape {m.shape} does not match truth ({len(truth.image_ids)} images, "
            f"{len(truth.caption_ids)} captions)"
        )
    cap_img = [truth.caption_to_image[c] for c in truth.caption_ids]
    if direction == "i2t":
        hits = 0
        for i, image_id in enumerate(truth.image_ids):
            top = _top_k(m[i], truth.caption_ids, k)
            if any(cap_img[j] == image_id for j in top):
                hits += 1
        return hits / n_img
    if direction == "t2i":
        hits = 0
        for j in range(n_txt):
            top = _top_k(m[:, j], truth.image_ids, k)
            if any(truth.image_ids[i] == cap_img[j] for i in top):
                hits += 1
        return hits / n_txt
    raise ValidationError(f"direction must be 'i2t' or 't2i', got {direction!r}")


def recall_table(matrix: np.ndarray, truth: RetrievalGroundTruth, ks: Sequence[int] = RECALL_KS) -> dict[str, float]:
    out = {}
    for direction in ("i2t", "t2i"):
        for k in ks:
            out[f"{direction}_r@{k}"] = recall_at_k(matrix, truth, k, direction)
    return out


def mean_recall(matrix: np.ndarray, truth: RetrievalGroundTruth) -> float:
    """Arithmetic mean of the six recalls: {i2t, t2i} x {1, 5, 10}."""
    table = recall_table(matrix, truth, RECALL_KS)
    return sum(table.values()) / len(table)


@dataclass(frozen=True)
class ClassPromptSet:
    classes: tuple[str, ...]
    templates: tuple[str, ...]

    def __post_init__(self) -> None:
        problems = []
        if not self.templates:
            problems.append("prompt set needs at least one template")
        if len(set(self.classes)) != len(self.classes):
            problems.append("class names must be unique")
        if not self.classes:
            problems.append("prompt set needs at least one class")
        for t in self.templates:
            if "{class}" not in t:
                problems.append(f"template {t!r} lacks a {{class}} placeholder")
        if problems:
            raise ValidationError(problems)

    def prompts_for(self, cls: str) -> list[str]:
        return [t.replace("{class}", cls) for t in self.templates]


def load_zsc_prompts(classes: Sequence[str], path: str | Path | None = None) -> ClassPromptSet:
    if path is None:
        text = resources.files("rscurate.data").joinpath("zsc_prompts.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return ClassPromptSet(classes=tuple(classes), templates=tuple(json.loads(text)["templates"]))


def class_centroids(prompt_set: ClassPromptSet, text_embedder, model_id: str) -> dict[str, np.ndarray]:
    """Mean prompt embedding per class (the prompt-ensemble centroid)."""
    centroids = {}
    for cls in prompt_set.classes:
        vectors = text_embedder.embed_text(prompt_set.prompts_for(cls), model_id)
        _, matrix = stack_vectors(vectors)
        centroids[cls] = matrix.mean(axis=0)
    return centroids


def zero_shot_top1(
    image_embs: Mapping[str, EmbeddingVector],
    labels: Mapping[str, str],
    prompt_set: ClassPromptSet,
    text_embedder,
    model_id: str | None = None,
) -> float:
    """Top-1 accuracy of nearest-centroid classification.

    Prediction is the class whose prompt centroid has the highest cosine with
    the image; ties fall to the earlier class in the prompt set's order. The
    argmax is invariant to positive rescaling of any centroid.
    """
    unknown = sorted({lbl for lbl in labels.values() if lbl not in set(prompt_set.classes)})
    if unknown:
        raise ValidationError(f"labels not in prompt set: {unknown}")
    missing = sorted(k for k in labels if k not in image_embs)
    if missing:
        raise ValidationError(f"images without embeddings: {missing}")
    if not labels:
        raise ValidationError("no labeled images given")
    if model_id is None:
        model_id = next(iter(image_embs.values())).model_id
    centroids = class_centroids(prompt_set, text_embedder, model_id)
    cls_names = list(prompt_set.classes)
    cmatrix = np.stack([centroids[c] for c in cls_names])
    cmatrix = cmatrix / np.linalg.norm(cmatrix, axis=1, keepdims=True)
    correct = 0
    for key in sorted(labels.keys()):
        v = image_embs[key].values.astype(np.float64)
        v = v / np.linalg.norm(v)
        predicted = cls_names[int(np.argmax(cmatrix @ v))]
        if predicted == labels[key]:
            correct += 1
    return correct / len(labels)
