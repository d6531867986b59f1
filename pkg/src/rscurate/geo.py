"""UTM zone designators, per-zone histograms, and gazetteer location matching.

Only the zone/band designator arithmetic is implemented (no easting/northing
projection): longitude zones are 6 degrees wide numbered 1..60, latitude bands
are 8 degree letters C..X skipping I and O, with X stretched to cover 72..84.
The Norway/Svalbard grid exceptions are deliberately not applied.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from typing import Iterable, Sequence

from .errors import ValidationError

BAND_LETTERS = "CDEFGHJKLMNPQRSTUVWX"  # 20 letters, I and O skipped


class OutOfBandError(ValidationError):
    """Latitude falls outside the UTM band range [-80, 84)."""


def utm_zone_number(lon: float) -> int:
    """Longitude zone 1..60; +180 normalizes to -180."""
    if not (isinstance(lon, (int, float)) and math.isfinite(lon)):
        raise ValidationError(f"longitude must be finite, got {lon!r}")
    if lon == 180.0:
        lon = -180.0
    if not (-180.0 <= lon < 180.0):
        raise ValidationError(f"longitude out of range [-180, 180): {lon}")
    return int((lon + 180.0) // 6.0) + 1


def latitude_band(lat: float) -> str:
    """MGRS band letter for lat in [-80, 84); X covers the final 12 degrees."""
    if not (isinstance(lat, (int, float)) and math.isfinite(lat)):
        raise ValidationError(f"latitude must be finite, got {lat!r}")
    if not (-80.0 <= lat < 84.0):
        raise OutOfBandError(f"latitude outside UTM bands [-80, 84): {lat}")
    if lat >= 72.0:
        return "X"
    return BAND_LETTERS[int((lat + 80.0) // 8.0)]


def utm_designator(lon: float, lat: float) -> str:
    """Zone number plus band letter, e.g. (0.5, 51.5) -> '31U'."""
    return f"{utm_zone_number(lon)}{latitude_band(lat)}"


def zone_histogram(points: Iterable[tuple[float, float]]) -> tuple[dict[str, int], int]:
    """Count points per designator; invalid points are tallied as skipped."""
    counts: Counter = Counter()
    skipped = 0
    for lon, lat in points:
        try:
            counts[utm_designator(lon, lat)] += 1
        except ValidationError:
            skipped += 1
    return dict(counts), skipped


def sorted_zone_counts(counts: dict[str, int]) -> list[tuple[str, int]]:
    """Descending by count, then designator, for long-tail reporting."""
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


class LocationMatcher:
    """Dictionary matcher for place names in caption text.

    Case-insensitive, word-boundary delimited, longest match wins at a given
    position (so "New York City" suppresses "New York"). Results follow text
    order and are independent of the gazetteer list order.
    """

    def __init__(self, names: Sequence[str]):
        cleaned = sorted({n.strip() for n in names if n.strip()}, key=lambda n: (-len(n), n.lower()))
        if not cleaned:
            raise ValidationError("gazetteer name list is empty")
        self._canonical = {n.lower(): n for n in cleaned}
        alternation = "|".join(re.escape(n).replace(r"\ ", r"\s+") for n in cleaned)
        self._finditer = re.compile(rf"\b(?:{alternation})\b", re.IGNORECASE).finditer

    def extract(self, text: str) -> list[str]:
        out = []
        for m in self._finditer(text):
            out.append(self._canonical[re.sub(r"\s+", " ", m.group(0)).lower()])
        return out


def extract_locations(text: str, names: Sequence[str]) -> list[str]:
    return LocationMatcher(names).extract(text)
