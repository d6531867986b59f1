"""Render structured metadata into a readable sentence and merge with captions.

The clause templates are config-driven: each clause names fields with `{field}`
placeholders and is emitted only when every referenced value is present.
Besides the raw metadata fields, two derived values are available to
templates: `season` (meteorological, hemisphere-aware) and `location_in_image`
(thirds-grid position of the bbox center), plus formatted aliases `date` and
`cloud_cover_percent`.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, fields
from datetime import datetime
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import ValidationError
from .records import MetaRecord

EARTH_RADIUS_KM = 6371.0088

_NORTH_SEASONS = {12: "winter", 1: "winter", 2: "winter", 3: "spring", 4: "spring", 5: "spring",
                  6: "summer", 7: "summer", 8: "summer", 9: "autumn", 10: "autumn", 11: "autumn"}
_FLIP = {"winter": "summer", "summer": "winter", "spring": "autumn", "autumn": "spring"}


def derive_season(timestamp: datetime, lat: float | None) -> str | None:
    """Meteorological season at the given latitude; None when lat is unknown."""
    if lat is None:
        return None
    season = _NORTH_SEASONS[timestamp.month]
    return season if lat >= 0 else _FLIP[season]


def relative_location(
    bbox: tuple[float, float, float, float], image_size: tuple[int, int]
) -> tuple[str, str]:
    """Thirds-grid position of the bbox center; y = 0 is the image top.

    Returns (vertical, horizontal) from {top, centre, bottom} x {left, centre,
    right}.
    """
    x, y, w, h = bbox
    iw, ih = image_size
    if iw <= 0 or ih <= 0:
        raise ValidationError(f"image_size must be positive, got {image_size}")
    if x < 0 or y < 0 or w < 0 or h < 0 or x + w > iw or y + h > ih:
        raise ValidationError(f"bbox {bbox} outside image bounds {image_size}")
    cx, cy = x + w / 2.0, y + h / 2.0
    col = min(2, int(3.0 * cx / iw))
    row = min(2, int(3.0 * cy / ih))
    return (("top", "centre", "bottom")[row], ("left", "centre", "right")[col])


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(a))


@dataclass(frozen=True)
class GazetteerEntry:
    name: str
    kind: str  # "city" or "country"
    lat: float
    lon: float
    radius_km: float


class Gazetteer:
    """Flat-file place list used for offline reverse geocoding."""

    def __init__(self, entries: Iterable[GazetteerEntry]):
        self.entries = list(entries)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "Gazetteer":
        if path is None:
            text = resources.files("rscurate.data").joinpath("gazetteer.csv").read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        entries = []
        for row in csv.DictReader(text.splitlines()):
            entries.append(
                GazetteerEntry(
                    name=row["name"],
                    kind=row["kind"],
                    lat=float(row["lat"]),
                    lon=float(row["lon"]),
                    radius_km=float(row["radius_km"]),
                )
            )
        return cls(entries)

    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def nearest_within_radius(self, lon: float, lat: float, kind: str) -> GazetteerEntry | None:
        best: GazetteerEntry | None = None
        best_d = math.inf
        for e in self.entries:
            if e.kind != kind:
                continue
            d = haversine_km(lat, lon, e.lat, e.lon)
            if d <= e.radius_km and (d < best_d or (d == best_d and best is not None and e.name < best.name)):
                best, best_d = e, d
        return best


def reverse_geocode(lon: float, lat: float, gazetteer: Gazetteer) -> dict[str, str]:
    """Nearest in-radius city and country names; keys absent when none qualify."""
    out = {}
    for kind in ("city", "country"):
        hit = gazetteer.nearest_within_radius(lon, lat, kind)
        if hit is not None:
            out[kind] = hit.name
    return out


def _format_number(x: float) -> str:
    """Trim trailing zeros so templates read naturally ("0.5", not "0.500000")."""
    s = f"{x:.6f}".rstrip("0").rstrip(".")
    return s if s else "0"


_META_FIELD_NAMES = {f.name for f in fields(MetaRecord)}
DERIVED_FIELDS = ("season", "location_in_image", "date", "cloud_cover_percent")
ALLOWED_PLACEHOLDERS = _META_FIELD_NAMES | set(DERIVED_FIELDS)
_PLACEHOLDER = re.compile(r"\{([a-z_]+)\}")


@dataclass(frozen=True)
class MetaTemplateSet:
    clauses: tuple[str, ...]

    def __post_init__(self) -> None:
        problems = []
        if not self.clauses:
            problems.append("template set has no clauses")
        for clause in self.clauses:
            for name in _PLACEHOLDER.findall(clause):
                if name not in ALLOWED_PLACEHOLDERS:
                    problems.append(f"clause {clause!r} references unknown field {name!r}")
        if problems:
            raise ValidationError(problems)


def load_meta_templates(path: str | Path | None = None) -> MetaTemplateSet:
    if path is None:
        text = resources.files("rscurate.data").joinpath("meta_templates.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    clauses = tuple(c["text"] for c in json.loads(text)["clauses"])
    return MetaTemplateSet(clauses=clauses)


def _render_values(meta: MetaRecord) -> dict[str, str]:
    values: dict[str, str] = {}
    for f in fields(MetaRecord):
        v = getattr(meta, f.name)
        if v is None:
            continue
        if isinstance(v, float):
            values[f.name] = _format_number(v)
        elif isinstance(v, datetime):
            values[f.name] = v.isoformat()
        elif isinstance(v, tuple):
            values[f.name] = ", ".join(str(x) for x in v)
        else:
            values[f.name] = str(v)
    if meta.timestamp is not None:
        values["date"] = meta.timestamp.date().isoformat()
        season = derive_season(meta.timestamp, meta.lat)
        if season is not None:
            values["season"] = season
    if meta.bbox is not None and meta.image_size is not None:
        row, col = relative_location(meta.bbox, meta.image_size)
        values["location_in_image"] = f"{row} {col}" if row != col else "centre"
    if meta.cloud_cover is not None:
        values["cloud_cover_percent"] = f"{round(meta.cloud_cover * 100)}%"
    return values


def render_meta_caption(meta: MetaRecord, templates: MetaTemplateSet) -> str:
    """One sentence from the clauses whose fields are all present; '' if none."""
    values = _render_values(meta)
    rendered = []
    for clause in templates.clauses:
        names = _PLACEHOLDER.findall(clause)
        if all(n in values for n in names):
            rendered.append(_PLACEHOLDER.sub(lambda m: values[m.group(1)], clause))
    if not rendered:
        return ""
    sentence = ", ".join(rendered)
    return sentence[0].upper() + sentence[1:] + "."


def merge_captions(meta_sentence: str, generated_caption: str) -> str:
    """Meta sentence first, then the generated caption; either side may be empty."""
    return " ".join(part for part in (meta_sentence.strip(), generated_caption.strip()) if part)
