"""Embedding providers and the on-disk embedding archive.

All neural models sit behind this boundary. Three implementations cover the
pipeline's needs: a deterministic hash-based embedder for tests and fixtures,
a file archive of precomputed vectors (optionally carrying a detector
probability per key), and a client for a remote inference service speaking
JSON over HTTP. Provider outputs are always unit-normalized.
"""

from __future__ import annotations

import hashlib
import os
import struct
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import MissingKeyError, RscurateError, ValidationError

DEFAULT_TEST_DIM = 512

ARCHIVE_MAGIC = b"RSEMBAR1"
ARCHIVE_VERSION = 1
_FLAG_HAS_PROBS = 1


@dataclass(frozen=True)
class EmbeddingVector:
    """Model-tagged fixed-dimension feature vector."""

    model_id: str
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float32)
        if v.ndim != 1 or v.size == 0:
            raise ValidationError("embedding values must be a nonempty 1-D array")
        if not np.isfinite(v).all():
            raise ValidationError("embedding values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def stack_vectors(vectors: Sequence[EmbeddingVector]) -> tuple[str, np.ndarray]:
    """Validate a uniform batch and stack it into an (n, dim) float64 matrix."""
    if not vectors:
        raise ValidationError("empty vector batch")
    model_ids = {v.model_id for v in vectors}
    if len(model_ids) != 1:
        raise ValidationError(f"mixed model_ids: {sorted(model_ids)}")
    dims = {v.dim for v in vectors}
    if len(dims) != 1:
        raise ValidationError(f"mixed dimensions: {sorted(dims)}")
    return vectors[0].model_id, np.stack([v.values for v in vectors]).astype(np.float64)


def _unit(x: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(x))
    if norm < 1e-12:
        raise ValidationError("cannot normalize a zero vector")
    return (x / norm).astype(np.float32)


class HashEmbedder:
    """Deterministic stand-in provider (the `test` backend).

    Each (model_id, input) pair is hashed into a seed that drives a PCG64
    generator, which expands to a pseudo-random unit vector. Stateless, so the
    same input always yields bitwise-identical output, and distinct model ids
    or rotation tags ("key#rot030") land in distinct hash domains.
    """

    def __init__(self, dim: int = DEFAULT_TEST_DIM):
        if dim < 1:
            raise ValidationError(f"dim must be positive, got {dim}")
        self.dim = dim

    def _vector(self, domain: bytes, model_id: str, text: str) -> EmbeddingVector:
        h = hashlib.sha256(domain + model_id.encode("utf-8") + b"\x00" + text.encode("utf-8")).digest()
        rng = np.random.Generator(np.random.PCG64(int.from_bytes(h[:16], "little")))
        return EmbeddingVector(model_id=model_id, values=_unit(rng.standard_normal(self.dim)))

    def embed_text(self, texts: Sequence[str], model_id: str) -> list[EmbeddingVector]:
        if not texts:
            raise ValidationError("empty text batch")
        return [self._vector(b"text:", model_id, t) for t in texts]

    def embed_image(self, keys: Sequence[str], model_id: str) -> list[EmbeddingVector]:
        if not keys:
            raise ValidationError("empty image batch")
        return [self._vector(b"image:", model_id, k) for k in keys]

    def detector_probability(self, keys: Sequence[str]) -> list[float]:
        """Deterministic pseudo-probability in [0, 1] per key."""
        out = []
        for k in keys:
            h = hashlib.sha256(b"detector:" + k.encode("utf-8")).digest()
            out.append(int.from_bytes(h[:8], "little") / 2**64)
        return out


def rotation_key(key: str, angle_deg: int) -> str:
    """Content key for a rotated variant of an image, e.g. 'abc#rot030'."""
    return f"{key}#rot{angle_deg:03d}"


ROTATION_ANGLES = tuple(range(0, 360, 30))  # 12 rotations, 30 degree steps


class EmbeddingArchive:
    """Read-only view of a vector archive file.

    Layout: magic, version, flags, dim, count, model_id, a sorted key table,
    then contiguous little-endian float32 vectors in key-table order, then an
    optional float64 probability column (kept at full precision so scores
    survive a write/read cycle exactly).
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        raw = self.path.read_bytes()
        if raw[:8] != ARCHIVE_MAGIC:
            raise ValidationError(f"{path}: not an embedding archive (bad magic)")
        version, flags, dim = struct.unpack_from("<III", raw, 8)
        if version != ARCHIVE_VERSION:
            raise ValidationError(f"{path}: unsupported archive version {version}")
        (count,) = struct.unpack_from("<Q", raw, 20)
        offset = 28
        (mlen,) = struct.unpack_from("<H", raw, offset)
        offset += 2
        self.model_id = raw[offset : offset + mlen].decode("utf-8")
        offset += mlen
        self.dim = int(dim)
        keys = []
        for _ in range(count):
            (klen,) = struct.unpack_from("<H", raw, offset)
            offset += 2
            keys.append(raw[offset : offset + klen].decode("utf-8"))
            offset += klen
        self._index = {k: i for i, k in enumerate(keys)}
        self.keys = keys
        vec_bytes = count * dim * 4
        expected = offset + vec_bytes + (count * 8 if flags & _FLAG_HAS_PROBS else 0)
        if len(raw) != expected:
            raise ValidationError(
                f"{path}: dimension mismatch, payload is {len(raw)} bytes but header implies {expected}"
            )
        self._vectors = np.frombuffer(raw, dtype="<f4", count=count * dim, offset=offset).reshape(count, dim)
        self.has_probabilities = bool(flags & _FLAG_HAS_PROBS)
        if self.has_probabilities:
            self._probs = np.frombuffer(raw, dtype="<f8", count=count, offset=offset + vec_bytes)
        else:
            self._probs = None

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key: str) -> bool:
        return key in self._index

    def lookup(self, key: str) -> EmbeddingVector:
        i = self._index.get(key)
        if i is None:
            raise MissingKeyError(key, context=str(self.path))
        return EmbeddingVector(model_id=self.model_id, values=self._vectors[i].copy())

    def probability(self, key: str) -> float:
        if self._probs is None:
            raise ValidationError(f"{self.path}: archive has no probability column")
        i = self._index.get(key)
        if i is None:
            raise MissingKeyError(key, context=str(self.path))
        return float(self._probs[i])

    def as_mapping(self) -> dict[str, EmbeddingVector]:
        return {k: self.lookup(k) for k in self.keys}


def write_archive(
    path: str | Path,
    model_id: str,
    vectors: Mapping[str, np.ndarray | EmbeddingVector],
    probabilities: Mapping[str, float] | None = None,
) -> None:
    """Write an archive; keys are stored sorted so output is reproducible."""
    if not vectors:
        raise ValidationError("cannot write an empty archive")
    keys = sorted(vectors.keys())
    rows = []
    dim = None
    for k in keys:
        v = vectors[k]
        arr = v.values if isinstance(v, EmbeddingVector) else np.asarray(v, dtype=np.float32)
        if dim is None:
            dim = arr.shape[0]
        elif arr.shape[0] != dim:
            raise ValidationError(f"vector for {k!r} has dim {arr.shape[0]}, expected {dim}")
        rows.append(arr.astype("<f4"))
    if probabilities is not None:
        missing = [k for k in keys if k not in probabilities]
        if missing:
            raise MissingKeyError(missing, context="probability column")
    flags = _FLAG_HAS_PROBS if probabilities is not None else 0
    mid = model_id.encode("utf-8")
    parts = [ARCHIVE_MAGIC, struct.pack("<III", ARCHIVE_VERSION, flags, dim), struct.pack("<Q", len(keys))]
    parts.append(struct.pack("<H", len(mid)))
    parts.append(mid)
    for k in keys:
        kb = k.encode("utf-8")
        parts.append(struct.pack("<H", len(kb)))
        parts.append(kb)
    parts.append(np.stack(rows).astype("<f4").tobytes())
    if probabilities is not None:
        parts.append(np.asarray([probabilities[k] for k in keys], dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


class RemoteEmbedderError(RscurateError):
    pass


class RemoteEmbedder:
    """Client for a remote embedding service.

    Protocol: POST {base_url}/v1/embed with {"model": ..., "modality":
    "text"|"image", "inputs": [...]} returning {"dim": d, "vectors": [[...]]}.
    A bearer token is read from RSCURATE_EMBED_TOKEN when set. Transient
    failures (timeouts, 5xx) are retried; exhaustion raises with the attempt
    trail so callers can see what the service did.
    """

    def __init__(self, base_url: str, timeout_s: float = 30.0, retries: int = 3, backoff_s: float = 0.5):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s
        self.retries = retries
        self.backoff_s = backoff_s

    def _post(self, payload: dict) -> dict:
        import requests

        headers = {}
        token = os.environ.get("RSCURATE_EMBED_TOKEN")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        attempts: list[str] = []
        delay = self.backoff_s
        for attempt in range(self.retries + 1):
            try:
                resp = requests.post(
                    f"{self.base_url}/v1/embed", json=payload, headers=headers, timeout=self.timeout_s
                )
            except requests.Timeout:
                attempts.append("timeout")
            except requests.RequestException as exc:
                raise RemoteEmbedderError(f"embedding service unreachable: {exc}") from exc
            else:
                if resp.status_code == 200:
                    return resp.json()
                attempts.append(f"http {resp.status_code}")
                if resp.status_code < 500:
                    raise RemoteEmbedderError(f"embedding service rejected request: {attempts[-1]}")
            if attempt < self.retries:
                time.sleep(delay)
                delay *= 2
        raise RemoteEmbedderError(
            f"embedding service failed after {self.retries + 1} attempts: {', '.join(attempts)}"
        )

    def _embed(self, modality: str, inputs: Sequence[str], model_id: str) -> list[EmbeddingVector]:
        if not inputs:
            raise ValidationError("empty batch")
        data = self._post({"model": model_id, "modality": modality, "inputs": list(inputs)})
        vectors = data.get("vectors", [])
        if len(vectors) != len(inputs):
            raise RemoteEmbedderError(f"service returned {len(vectors)} vectors for {len(inputs)} inputs")
        return [EmbeddingVector(model_id=model_id, values=_unit(np.asarray(v, dtype=np.float64))) for v in vectors]

    def embed_text(self, texts: Sequence[str], model_id: str) -> list[EmbeddingVector]:
        return self._embed("text", texts, model_id)

    def embed_image(self, keys: Sequence[str], model_id: str) -> list[EmbeddingVector]:
        return self._embed("image", keys, model_id)


def embed_images_for_records(
    embedder,
    records: Iterable,
    model_id: str,
) -> dict[str, EmbeddingVector]:
    """Map record_id -> embedding of the record's image content key.

    Keying the provider by image_ref (the content digest) makes identical
    payloads embed identically, which is what near-duplicate detection needs.
    """
    records = list(records)
    missing = [r.record_id for r in records if not r.image_ref]
    if missing:
        raise MissingKeyError(missing, context="image_ref")
    vectors = embedder.embed_image([r.image_ref for r in records], model_id)
    return {r.record_id: v for r, v in zip(records, vectors)}
