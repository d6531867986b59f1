"""HTTP service for human caption review: sample dispatch, rating ingestion,
and aggregate statistics.

Ratings use three axes (relevance & detail, hallucination, fluency &
conciseness), each an integer 1..5. The only persistence is an append-only
JSONL log; restarting the service replays it and reconstructs identical
aggregates. Re-rating the same record by the same annotator supersedes the
earlier rating at aggregation time (latest wins).
"""

from __future__ import annotations

import hashlib
import json
import statistics
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field

from .errors import ValidationError

AXES = ("relevance_detail", "hallucination", "fluency")


class RatingIn(BaseModel):
    """Wire schema for one rating submission; every axis is 1..5."""

    annotator_id: str = Field(min_length=1)
    record_id: str = Field(min_length=1)
    relevance_detail: int = Field(ge=1, le=5)
    hallucination: int = Field(ge=1, le=5)
    fluency: int = Field(ge=1, le=5)


@dataclass(frozen=True)
class ReviewSample:
    record_id: str
    subset: str
    caption: str
    image_path: Path


def load_corpus(data_dir: str | Path) -> dict[str, ReviewSample]:
    """Read corpus.jsonl: lines of {record_id, subset, caption, image}."""
    data_dir = Path(data_dir)
    corpus_path = data_dir / "corpus.jsonl"
    if not corpus_path.exists():
        raise FileNotFoundError(f"review corpus not found: {corpus_path}")
    samples: dict[str, ReviewSample] = {}
    with open(corpus_path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            sample = ReviewSample(
                record_id=d["record_id"],
                subset=d.get("subset", "default"),
                caption=d.get("caption", ""),
                image_path=data_dir / d["image"],
            )
            if sample.record_id in samples:
                raise ValidationError(f"duplicate record_id in corpus: {sample.record_id}")
            samples[sample.record_id] = sample
    return samples


class RatingLog:
    """Append-only JSONL rating log; the single source of service state."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, entry: dict[str, Any]) -> None:
        line = json.dumps(entry, sort_keys=True, separators=(",", ":"))
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(line + "\n")

    def replay(self) -> list[dict[str, Any]]:
        if not self.path.exists():
            return []
        entries = []
        with open(self.path, "r", encoding="utf-8") as f:
            for seq, line in enumerate(f):
                line = line.strip()
                if line:
                    d = json.loads(line)
                    d["_seq"] = seq
                    entries.append(d)
        return entries


def latest_ratings(entries: list[dict[str, Any]]) -> dict[tuple[str, str], dict[str, Any]]:
    """Deduplicate to the latest rating per (annotator, record).

    Order is by submitted_at with the log sequence breaking exact timestamp
    ties, so replaying entries in any arrival order gives the same result.
    """
    best: dict[tuple[str, str], dict[str, Any]] = {}
    for e in entries:
        key = (e["annotator_id"], e["record_id"])
        current = best.get(key)
        if current is None or (e["submitted_at"], e.get("_seq", 0)) >= (
            current["submitted_at"],
            current.get("_seq", 0),
        ):
            best[key] = e
    return best


def _axis_stats(values: list[int]) -> dict[str, Any]:
    if not values:
        return {"count": 0, "mean": None, "std": None}
    return {
        "count": len(values),
        "mean": statistics.fmean(values),
        "std": statistics.stdev(values) if len(values) >= 2 else None,
    }


def aggregate_stats(
    entries: list[dict[str, Any]], subsets: dict[str, str] | None = None
) -> dict[str, Any]:
    """Per-axis stats overall and per subset, from latest-wins ratings."""
    deduped = list(latest_ratings(entries).values())
    out: dict[str, Any] = {
        "count": len(deduped),
        "overall": {axis: _axis_stats([e[axis] for e in deduped]) for axis in AXES},
        "subsets": {},
    }
    if subsets:
        grouped: dict[str, list[dict[str, Any]]] = {}
        for e in deduped:
            subset = subsets.get(e["record_id"], "unknown")
            grouped.setdefault(subset, []).append(e)
        for subset in sorted(grouped):
            group = grouped[subset]
            out["subsets"][subset] = {axis: _axis_stats([e[axis] for e in group]) for axis in AXES}
    return out


class Dispatcher:
    """Chooses the next sample for an annotator.

    Preference order: stratified round-robin across subsets (cursor advances
    per dispatch), then globally least-rated records first, with a seeded
    pseudo-random tie order so annotators do not all converge on the same
    record. Deterministic given the seed and rating state.
    """

    def __init__(self, corpus: dict[str, ReviewSample], seed: int = 0):
        self.corpus = corpus
        self.seed = seed
        self._cursors: dict[str, int] = {}
        self._lock = threading.Lock()

    def _tiebreak(self, record_id: str) -> int:
        h = hashlib.sha256(self.seed.to_bytes(8, "little", signed=True) + record_id.encode("utf-8")).digest()
        return int.from_bytes(h[:8], "little")

    def next_for(
        self,
        annotator_id: str,
        entries: list[dict[str, Any]],
        subset_filter: str | None = None,
    ) -> ReviewSample | None:
        pairs = latest_ratings(entries)
        rated_by_me = {record for (annotator, record) in pairs if annotator == annotator_id}
        global_counts: dict[str, int] = {}
        for (_, record) in pairs:
            global_counts[record] = global_counts.get(record, 0) + 1
        eligible = [
            s
            for s in self.corpus.values()
            if s.record_id not in rated_by_me and (subset_filter is None or s.subset == subset_filter)
        ]
        if not eligible:
            return None
        by_subset: dict[str, list[ReviewSample]] = {}
        for s in eligible:
            by_subset.setdefault(s.subset, []).append(s)
        subsets = sorted(by_subset)
        with self._lock:
            cursor = self._cursors.get(annotator_id, len(rated_by_me))
            self._cursors[annotator_id] = cursor + 1
        chosen_subset = subsets[cursor % len(subsets)]
        pool = by_subset[chosen_subset]
        pool.sort(key=lambda s: (global_counts.get(s.record_id, 0), self._tiebreak(s.record_id), s.record_id))
        return pool[0]


def build_app(data_dir: str | Path, seed: int = 0, ui_dir: str | Path | None = None):
    """Assemble the FastAPI app over a review data directory."""
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import JSONResponse, Response

    data_dir = Path(data_dir)
    corpus = load_corpus(data_dir)
    subsets = {s.record_id: s.subset for s in corpus.values()}
    log = RatingLog(data_dir / "ratings.jsonl")
    dispatcher = Dispatcher(corpus, seed=seed)

    app = FastAPI(title="caption review service")

    @app.get("/api/v1/next")
    def next_sample(annotator: str, subset: str | None = None):
        if not annotator:
            raise HTTPException(status_code=422, detail="annotator is required")
        sample = dispatcher.next_for(annotator, log.replay(), subset_filter=subset)
        if sample is None:
            return {"exhausted": True}
        return {
            "record_id": sample.record_id,
            "subset": sample.subset,
            "caption": sample.caption,
            "image_url": f"/api/v1/samples/{sample.record_id}/image",
        }

    @app.post("/api/v1/ratings", status_code=201)
    def submit_rating(rating: RatingIn):
        if rating.record_id not in corpus:
            raise HTTPException(status_code=404, detail=f"unknown record: {rating.record_id}")
        entry = rating.model_dump()
        entry["submitted_at"] = datetime.now(timezone.utc).isoformat()
        log.append(entry)
        return {"accepted": True}

    @app.get("/api/v1/stats")
    def stats():
        return JSONResponse(aggregate_stats(log.replay(), subsets))

    @app.get("/api/v1/samples/{record_id}/image")
    def sample_image(record_id: str):
        sample = corpus.get(record_id)
        if sample is None or not sample.image_path.exists():
            raise HTTPException(status_code=404, detail=f"no image for record: {record_id}")
        data = sample.image_path.read_bytes()
        media = "image/png" if data[:8] == b"\x89PNG\r\n\x1a\n" else (
            "image/jpeg" if data[:2] == b"\xff\xd8" else "application/octet-stream"
        )
        return Response(content=data, media_type=media)

    if ui_dir is None:
        ui_dir = data_dir / "ui"
    ui_dir = Path(ui_dir)
    if ui_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app


def serve(data_dir: str | Path, port: int, seed: int = 0, ui_dir: str | Path | None = None, host: str = "127.0.0.1"):
    import uvicorn

    app = build_app(data_dir, seed=seed, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
