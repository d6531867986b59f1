import math
import random

import pytest

from rscurate.errors import ValidationError
from rscurate.geo import (
    BAND_LETTERS,
    LocationMatcher,
    OutOfBandError,
    extract_locations,
    latitude_band,
    sorted_zone_counts,
    utm_designator,
    utm_zone_number,
    zone_histogram,
)

# ---------------------------------------------------------------- oracle

_BAND_TABLE = []  # (lat_lower, lat_upper, letter), built from explicit ranges
_lower = -80.0
for _letter in BAND_LETTERS[:-1]:  # C..W, 8 degrees each
    _BAND_TABLE.append((_lower, _lower + 8.0, _letter))
    _lower += 8.0
_BAND_TABLE.append((72.0, 84.0, "X"))


def designator_oracle(lon, lat):
    zone = math.floor((lon + 180.0) / 6.0) + 1
    if zone == 61:  # lon == 180 wraps
        zone = 1
    for low, high, letter in _BAND_TABLE:
        if low <= lat < high:
            return f"{zone}{letter}"
    raise AssertionError("latitude outside oracle table")


# ------------------------------------------------------------------ tests

class TestZoneNumber:
    def test_lower_boundary(self):
        assert utm_zone_number(-180.0) == 1

    def test_upper_boundary(self):
        assert utm_zone_number(179.999) == 60

    def test_half_degree(self):
        assert utm_zone_number(0.5) == 31

    def test_plus_180_normalizes(self):
        assert utm_zone_number(180.0) == 1

    def test_nonfinite_rejected(self):
        with pytest.raises(ValidationError):
            utm_zone_number(float("nan"))
        with pytest.raises(ValidationError):
            utm_zone_number(float("inf"))


class TestLatitudeBand:
    def test_london_band(self):
        assert latitude_band(51.5) == "U"

    def test_below_range_rejected(self):
        with pytest.raises(OutOfBandError):
            latitude_band(-85.0)

    def test_southern_africa_band(self):
        assert latitude_band(-5.0) == "M"

    def test_x_band_spans_12_degrees(self):
        assert latitude_band(72.0) == "X"
        assert latitude_band(83.999) == "X"
        with pytest.raises(OutOfBandError):
            latitude_band(84.0)

    def test_band_letters_skip_i_and_o(self):
        assert "I" not in BAND_LETTERS and "O" not in BAND_LETTERS
        assert len(BAND_LETTERS) == 20


class TestDesignator:
    def test_london(self):
        assert utm_designator(0.5, 51.5) == "31U"

    def test_southern_africa(self):
        assert utm_designator(15.0, -5.0) == "33M"

    def test_both_lower_boundaries(self):
        assert utm_designator(-180.0, -80.0) == "1C"

    def test_ten_thousand_random_points_match_oracle(self):
        rng = random.Random(1234)
        for _ in range(10_000):
            lon = rng.uniform(-180.0, 180.0)
            if lon == 180.0:
                lon = -180.0
            lat = rng.uniform(-80.0, 84.0)
            if lat == 84.0:
                lat = 83.999
            assert utm_designator(lon, lat) == designator_oracle(lon, lat)


class TestZoneHistogram:
    def test_three_points_one_zone(self):
        counts, skipped = zone_histogram([(0.5, 51.0), (1.0, 50.0), (2.0, 49.0)])
        assert counts == {"31U": 3} and skipped == 0

    def test_empty_stream(self):
        counts, skipped = zone_histogram([])
        assert counts == {} and skipped == 0

    def test_planted_zones_exact(self):
        points = []
        planted = {"31U": 40, "33M": 30, "1C": 20, "60X": 10}
        points += [(0.5, 51.5)] * 40
        points += [(15.0, -5.0)] * 30
        points += [(-180.0, -80.0)] * 20
        points += [(179.5, 75.0)] * 10
        counts, skipped = zone_histogram(points)
        assert counts == planted and skipped == 0

    def test_invalid_points_counted_as_skipped(self):
        counts, skipped = zone_histogram([(0.5, 51.5), (0.5, 89.0), (float("nan"), 10.0)])
        assert counts == {"31U": 1} and skipped == 2
        assert sum(counts.values()) + skipped == 3

    def test_sorted_listing(self):
        counts = {"31U": 3, "1C": 7, "33M": 3}
        assert sorted_zone_counts(counts) == [("1C", 7), ("31U", 3), ("33M", 3)]


class TestExtractLocations:
    def test_direct_dictionary_hits(self):
        assert extract_locations("Aerial view of Paris, France", ["Paris", "France"]) == ["Paris", "France"]

    def test_longest_match_suppresses_shorter(self):
        names = ["New York", "New York City"]
        assert extract_locations("New York City skyline", names) == ["New York City"]

    def test_empty_text(self):
        assert extract_locations("", ["Paris"]) == []

    def test_case_insensitive_returns_canonical_name(self):
        assert extract_locations("flying over PARIS at night", ["Paris"]) == ["Paris"]

    def test_word_boundaries_respected(self):
        assert extract_locations("comparison of results", ["Paris"]) == []

    def test_order_follows_text_position(self):
        text = "from Sydney to Paris and back to Sydney"
        assert extract_locations(text, ["Paris", "Sydney"]) == ["Sydney", "Paris", "Sydney"]

    def test_gazetteer_order_invariance(self):
        names = ["Paris", "New York City", "New York", "France"]
        text = "New York City and Paris, France"
        a = extract_locations(text, names)
        b = extract_locations(text, list(reversed(names)))
        assert a == b == ["New York City", "Paris", "France"]

    def test_empty_name_list_rejected(self):
        with pytest.raises(ValidationError):
            LocationMatcher([])
