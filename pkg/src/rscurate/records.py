"""Core domain types: source records, dispositions, and the conservation ledger.

Every record flowing through the pipeline is a `SourceRecord`; every stage
accounts for each record it touches with exactly one `Disposition`, tallied in
a `PipelineLedger`. The ledger invariant `attempted == kept + sum(removed)`
holds per (source, stage) cell and is what `verify_conservation` checks.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Iterable

from .errors import ValidationError

# Closed set of source-dataset names. The first eleven are web image-text
# corpora ("PUB11"); the last three are label-only remote-sensing archives
# ("RS3") whose captions are produced inside the pipeline.
PUB11_SOURCES = (
    "laion2b",
    "coyo700m",
    "laioncoco",
    "laion400m",
    "wit",
    "yfcc15m",
    "cc12m",
    "redcaps",
    "cc3m",
    "sbu",
    "vg",
)
RS3_SOURCES = ("fmow", "bigearthnet", "millionaid")
SOURCES = PUB11_SOURCES + RS3_SOURCES

# Pipeline stage order. "pipeline" is the aggregate pseudo-stage used when a
# whole run is accounted as a single stream of terminal dispositions.
STAGES = (
    "keywords",
    "fetch",
    "dedup",
    "score-filter",
    "caption-select",
    "meta-caption",
    "geo-report",
    "shard",
    "pipeline",
)


class Disposition(str, Enum):
    """Terminal accounting state of one record at one stage."""

    KEPT = "kept"
    REMOVED_INVALID_IMAGE = "removed_invalid_image"
    REMOVED_DUPLICATE_URL = "removed_duplicate_url"
    REMOVED_DUPLICATE_NEAR = "removed_duplicate_near"
    REMOVED_BY_SCORE_FILTER = "removed_by_score_filter"
    FETCH_FAILED = "fetch_failed"
    # Keyword-stage removals need their own bucket or the stage cannot
    # conserve counts.
    REMOVED_NO_KEYWORD_MATCH = "removed_no_keyword_match"


_DISPOSITIONS_BY_VALUE = {d.value: d for d in Disposition}


@dataclass
class MetaRecord:
    """Optional structured metadata attached to a record.

    All fields are optional; stages render only what is present. `lon` is in
    [-180, 180), `lat` in [-90, 90], and `bbox` (x, y, w, h in pixels) must lie
    inside `image_size` (W, H) when both are given.
    """

    lon: float | None = None
    lat: float | None = None
    timestamp: datetime | None = None
    class_label: str | None = None
    bbox: tuple[float, float, float, float] | None = None
    image_size: tuple[int, int] | None = None
    gsd: float | None = None
    utm: str | None = None
    cloud_cover: float | None = None
    scan_direction: str | None = None
    target_azimuth: float | None = None
    off_nadir: float | None = None
    city: str | None = None
    country: str | None = None

    def __post_init__(self) -> None:
        problems = []
        if self.lon is not None and not (-180.0 <= self.lon < 180.0):
            problems.append(f"lon out of range [-180, 180): {self.lon}")
        if self.lat is not None and not (-90.0 <= self.lat <= 90.0):
            problems.append(f"lat out of range [-90, 90]: {self.lat}")
        if self.cloud_cover is not None and not (0.0 <= self.cloud_cover <= 1.0):
            problems.append(f"cloud_cover out of range [0, 1]: {self.cloud_cover}")
        if self.bbox is not None and self.image_size is not None:
            x, y, w, h = self.bbox
            iw, ih = self.image_size
            if x < 0 or y < 0 or w < 0 or h < 0 or x + w > iw or y + h > ih:
                problems.append(f"bbox {self.bbox} outside image {self.image_size}")
        if problems:
            raise ValidationError(problems)

    def is_empty(self) -> bool:
        return all(getattr(self, f.name) is None for f in fields(self))

    def to_json_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, datetime):
                v = v.astimezone(timezone.utc).isoformat()
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "MetaRecord":
        kwargs: dict[str, Any] = dict(d)
        if "timestamp" in kwargs and kwargs["timestamp"] is not None:
            ts = datetime.fromisoformat(kwargs["timestamp"])
            if ts.tzinfo is None:
                ts = ts.replace(tzinfo=timezone.utc)
            kwargs["timestamp"] = ts
        if "bbox" in kwargs and kwargs["bbox"] is not None:
            kwargs["bbox"] = tuple(kwargs["bbox"])
        if "image_size" in kwargs and kwargs["image_size"] is not None:
            kwargs["image_size"] = tuple(kwargs["image_size"])
        return cls(**kwargs)


@dataclass
class SourceRecord:
    """One image-text pair with provenance; the unit every stage consumes."""

    record_id: str
    source: str
    caption: str = ""
    url: str | None = None
    meta: MetaRecord | None = None
    image_ref: str | None = None

    def __post_init__(self) -> None:
        if not self.record_id:
            raise ValidationError("record_id must be nonempty")
        if self.source not in SOURCES:
            raise ValidationError(f"unknown source: {self.source!r}")

    def to_json_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"record_id": self.record_id, "source": self.source, "caption": self.caption}
        if self.url is not None:
            out["url"] = self.url
        if self.meta is not None and not self.meta.is_empty():
            out["meta"] = self.meta.to_json_dict()
        if self.image_ref is not None:
            out["image_ref"] = self.image_ref
        return out

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "SourceRecord":
        meta = d.get("meta")
        return cls(
            record_id=d["record_id"],
            source=d["source"],
            caption=d.get("caption", ""),
            url=d.get("url"),
            meta=MetaRecord.from_json_dict(meta) if meta else None,
            image_ref=d.get("image_ref"),
        )


@dataclass
class FilterPolicy:
    """Keep fractions for the joint (s, c) score filter; both in (0, 1]."""

    keep_fraction_s: float = 0.9
    keep_fraction_c: float = 0.8

    def __post_init__(self) -> None:
        problems = []
        for name in ("keep_fraction_s", "keep_fraction_c"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                problems.append(f"{name} must be in (0, 1], got {v}")
        if problems:
            raise ValidationError(problems)


@dataclass
class ConservationViolation:
    source: str
    stage: str
    residual: int  # attempted - kept - sum(removed)


class _Cell:
    __slots__ = ("attempted", "kept", "removed")

    def __init__(self) -> None:
        self.attempted = 0
        self.kept = 0
        self.removed: Counter = Counter()


class PipelineLedger:
    """Per-(source, stage) disposition tallies.

    Workers each own a private ledger and `merge` them afterwards; merging is
    plain commutative addition, so partitioning a stream any way yields the
    same totals.
    """

    def __init__(self) -> None:
        self._cells: dict[tuple[str, str], _Cell] = {}

    def _cell(self, source: str, stage: str) -> _Cell:
        if source not in SOURCES:
            raise ValidationError(f"unknown source: {source!r}")
        if stage not in STAGES:
            raise ValidationError(f"unknown stage: {stage!r}")
        cell = self._cells.get((source, stage))
        if cell is None:
            cell = self._cells[(source, stage)] = _Cell()
        return cell

    def record(self, source: str, stage: str, disposition: Disposition) -> None:
        """Account one record: bump attempted plus its disposition counter."""
        cell = self._cell(source, stage)
        cell.attempted += 1
        if disposition is Disposition.KEPT:
            cell.kept += 1
        else:
            cell.removed[disposition] += 1

    def record_stream(self, source: str, stage: str, dispositions: Iterable[Disposition]) -> None:
        """Account a whole stream of dispositions for one (source, stage)."""
        cell = self._cell(source, stage)
        counts = Counter(dispositions)
        cell.attempted += sum(counts.values())
        cell.kept += counts.pop(Disposition.KEPT, 0)
        cell.removed.update(counts)

    def merge(self, other: "PipelineLedger") -> "PipelineLedger":
        for (source, stage), cell in other._cells.items():
            mine = self._cell(source, stage)
            mine.attempted += cell.attempted
            mine.kept += cell.kept
            mine.removed.update(cell.removed)
        return self

    def attempted(self, source: str, stage: str) -> int:
        cell = self._cells.get((source, stage))
        return cell.attempted if cell else 0

    def kept(self, source: str, stage: str) -> int:
        cell = self._cells.get((source, stage))
        return cell.kept if cell else 0

    def removed(self, source: str, stage: str, disposition: Disposition | None = None) -> int:
        cell = self._cells.get((source, stage))
        if cell is None:
            return 0
        if disposition is None:
            return sum(cell.removed.values())
        return cell.removed.get(disposition, 0)

    def total_attempted(self, stage: str | None = None) -> int:
        return sum(c.attempted for (_, s), c in self._cells.items() if stage is None or s == stage)

    def total_kept(self, stage: str | None = None) -> int:
        return sum(c.kept for (_, s), c in self._cells.items() if stage is None or s == stage)

    # Test hook: corrupt one counter in place to prove verification catches it.
    def _perturb(self, source: str, stage: str, counter: str, delta: int) -> None:
        cell = self._cells[(source, stage)]
        if counter == "attempted":
            cell.attempted += delta
        elif counter == "kept":
            cell.kept += delta
        else:
            cell.removed[Disposition(counter)] += delta

    def verify_conservation(self) -> list[ConservationViolation]:
        """Return violations of attempted == kept + sum(removed); empty means ok."""
        violations = []
        for (source, stage), cell in sorted(self._cells.items()):
            residual = cell.attempted - cell.kept - sum(cell.removed.values())
            if residual != 0:
                violations.append(ConservationViolation(source, stage, residual))
        return violations

    def to_json_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for (source, stage), cell in sorted(self._cells.items()):
            out.setdefault(source, {})[stage] = {
                "attempted": cell.attempted,
                "kept": cell.kept,
                "removed": {d.value: n for d, n in sorted(cell.removed.items(), key=lambda kv: kv[0].value)},
            }
        return out

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "PipelineLedger":
        ledger = cls()
        for source, stages in d.items():
            for stage, counts in stages.items():
                cell = ledger._cell(source, stage)
                cell.attempted = counts["attempted"]
                cell.kept = counts["kept"]
                for name, n in counts.get("removed", {}).items():
                    cell.removed[_DISPOSITIONS_BY_VALUE[name]] = n
        return ledger


@dataclass
class CaptionStats:
    count: int
    total_words: int
    max_words: int
    histogram: dict[int, int] = field(default_factory=dict)

    @property
    def mean_words(self) -> float:
        return self.total_words / self.count if self.count else 0.0


def caption_stats(captions: Iterable[str]) -> CaptionStats:
    """Word-count statistics over a caption stream.

    Words are whitespace-delimited tokens. Histogram buckets are powers of
    two keyed by their lower bound (bucket 0 holds empty captions). The mean
    is exact: an integer total divided once at the end.
    """
    count = 0
    total = 0
    maximum = 0
    hist: Counter = Counter()
    for caption in captions:
        n = len(caption.split())
        count += 1
        total += n
        if n > maximum:
            maximum = n
        hist[0 if n == 0 else 1 << (n.bit_length() - 1)] += 1
    return CaptionStats(count=count, total_words=total, max_words=maximum, histogram=dict(sorted(hist.items())))

