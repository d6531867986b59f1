from datetime import datetime, timezone

import pytest

from rscurate.errors import ValidationError
from rscurate.metacaption import (
    Gazetteer,
    GazetteerEntry,
    MetaTemplateSet,
    derive_season,
    haversine_km,
    load_meta_templates,
    merge_captions,
    relative_location,
    render_meta_caption,
    reverse_geocode,
)
from rscurate.records import MetaRecord


def ts(year=2020, month=7, day=14):
    return datetime(year, month, day, tzinfo=timezone.utc)


class TestSeason:
    def test_july_northern_is_summer(self):
        assert derive_season(ts(month=7), lat=48.0) == "summer"

    def test_july_southern_is_winter(self):
        assert derive_season(ts(month=7), lat=-33.0) == "winter"

    def test_unknown_latitude_gives_none(self):
        assert derive_season(ts(month=7), lat=None) is None

    def test_meteorological_table(self):
        expectations = {12: "winter", 1: "winter", 2: "winter", 3: "spring", 5: "spring",
                        6: "summer", 8: "summer", 9: "autumn", 11: "autumn"}
        for month, season in expectations.items():
            assert derive_season(ts(month=month), lat=10.0) == season

    def test_hemisphere_flip_is_total(self):
        flip = {"winter": "summer", "summer": "winter", "spring": "autumn", "autumn": "spring"}
        for month in range(1, 13):
            north = derive_season(ts(month=month), lat=45.0)
            south = derive_season(ts(month=month), lat=-45.0)
            assert south == flip[north]


class TestRelativeLocation:
    def test_center_bbox(self):
        assert relative_location((24, 24, 16, 16), (64, 64)) == ("centre", "centre")

    def test_top_right(self):
        # bbox center at (0.9 W, 0.1 H)
        assert relative_location((56, 4, 2, 2), (64, 64)) == ("top", "right")

    def test_bottom_left(self):
        assert relative_location((0, 56, 4, 4), (64, 64)) == ("bottom", "left")

    def test_out_of_bounds_rejected(self):
        with pytest.raises(ValidationError):
            relative_location((60, 60, 10, 10), (64, 64))


class TestReverseGeocode:
    def _gazetteer(self):
        return Gazetteer(
            [
                GazetteerEntry("Alphaville", "city", 10.0, 20.0, 50.0),
                GazetteerEntry("Betatown", "city", 10.0, 21.0, 50.0),
                GazetteerEntry("Gammaland", "country", 10.0, 20.5, 800.0),
            ]
        )

    def test_exact_coordinates(self):
        found = reverse_geocode(20.0, 10.0, self._gazetteer())
        assert found["city"] == "Alphaville"
        assert found["country"] == "Gammaland"

    def test_far_from_everything_absent(self):
        found = reverse_geocode(-170.0, -80.0, self._gazetteer())
        assert found == {}

    def test_between_two_cities_picks_nearer_by_haversine(self):
        gaz = self._gazetteer()
        lon = 20.4  # nearer Betatown? distances decide
        d_alpha = haversine_km(10.0, lon, 10.0, 20.0)
        d_beta = haversine_km(10.0, lon, 10.0, 21.0)
        expected = "Alphaville" if d_alpha < d_beta else "Betatown"
        assert reverse_geocode(lon, 10.0, gaz)["city"] == expected

    def test_haversine_against_hand_value(self):
        # One degree of latitude is ~111.19 km on the sphere used here.
        assert haversine_km(0.0, 0.0, 1.0, 0.0) == pytest.approx(111.195, abs=0.01)

    def test_bundled_gazetteer_loads(self):
        gaz = Gazetteer.load()
        names = gaz.names()
        assert "Paris" in names and "France" in names
        found = reverse_geocode(2.3522, 48.8566, gaz)
        assert found["city"] == "Paris"
        assert found["country"] == "France"


class TestRenderMetaCaption:
    def test_class_label_only(self):
        templates = load_meta_templates()
        meta = MetaRecord(class_label="airport")
        sentence = render_meta_caption(meta, templates)
        assert "airport" in sentence
        for absent in ("UTM", "cloud", "season", "degrees"):
            assert absent not in sentence

    def test_empty_meta_renders_empty(self):
        assert render_meta_caption(MetaRecord(), load_meta_templates()) == ""

    def test_full_fmow_style_record(self):
        templates = load_meta_templates()
        meta = MetaRecord(
            lon=2.3522,
            lat=48.8566,
            timestamp=ts(month=7),
            class_label="stadium",
            bbox=(8, 8, 16, 16),
            image_size=(64, 64),
            gsd=0.5,
            utm="31U",
            cloud_cover=0.12,
            scan_direction="forward",
            target_azimuth=143.2,
            off_nadir=12.5,
        )
        sentence = render_meta_caption(meta, templates)
        assert "stadium" in sentence
        assert "summer" in sentence
        assert "31U" in sentence
        assert "0.5" in sentence
        assert sentence.endswith(".")

    def test_rendering_is_idempotent_and_deterministic(self):
        templates = load_meta_templates()
        meta = MetaRecord(class_label="dam", utm="33M")
        assert render_meta_caption(meta, templates) == render_meta_caption(meta, templates)

    def test_omission_monotonicity(self):
        templates = load_meta_templates()
        full = MetaRecord(class_label="dam", utm="33M", gsd=1.5)
        without_gsd = MetaRecord(class_label="dam", utm="33M")
        full_sentence = render_meta_caption(full, templates)
        smaller = render_meta_caption(without_gsd, templates)
        # Dropping one optional field only removes its clause.
        assert "dam" in smaller and "33M" in smaller
        assert "1.5" in full_sentence and "1.5" not in smaller

    def test_unknown_placeholder_rejected_at_load(self):
        with pytest.raises(ValidationError, match="unknown field"):
            MetaTemplateSet(clauses=("referencing {not_a_field} here",))


class TestMergeCaptions:
    def test_both_sides(self):
        assert merge_captions("A.", "B.") == "A. B."

    def test_empty_meta(self):
        assert merge_captions("", "B.") == "B."

    def test_empty_generated(self):
        assert merge_captions("A.", "") == "A."
