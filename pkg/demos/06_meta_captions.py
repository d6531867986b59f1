"""Turn structured metadata into a readable sentence and merge it with a
generated caption.

Clauses render only when their fields are present: an empty record produces an
empty sentence, and each missing field just drops its clause. Season comes
from the timestamp and hemisphere; city and country come from an offline
gazetteer lookup.
"""

from datetime import datetime, timezone

from rscurate.metacaption import (
    Gazetteer,
    load_meta_templates,
    merge_captions,
    render_meta_caption,
    reverse_geocode,
)
from rscurate.records import MetaRecord

templates = load_meta_templates()
gazetteer = Gazetteer.load()

meta = MetaRecord(
    lon=2.3522,
    lat=48.8566,
    timestamp=datetime(2017, 1, 20, tzinfo=timezone.utc),
    class_label="stadium",
    bbox=(38, 6, 20, 20),
    image_size=(64, 64),
    gsd=0.48,
    utm="31U",
    cloud_cover=0.07,
)
found = reverse_geocode(meta.lon, meta.lat, gazetteer)
meta.city, meta.country = found.get("city"), found.get("country")
print("geocoded:", found)

sentence = render_meta_caption(meta, templates)
print("\nmeta sentence:\n ", sentence)

generated = "a large oval stadium surrounded by parking lots."
print("\nmerged caption:\n ", merge_captions(sentence, generated))

print("\nsame record without optional fields:")
sparse = MetaRecord(class_label="stadium")
print(" ", render_meta_caption(sparse, templates))
print("\nempty record renders as:", repr(render_meta_caption(MetaRecord(), templates)))
