"""UTM designators, a per-zone histogram, and place-name extraction.

The designator is the 6-degree longitude zone number plus the 8-degree MGRS
latitude band letter (C..X skipping I and O; X stretches to 84N). Captions are
scanned for gazetteer place names with longest-match-wins semantics.
"""

from rscurate.geo import extract_locations, sorted_zone_counts, utm_designator, zone_histogram
from rscurate.metacaption import Gazetteer

spots = [
    ("Paris", 2.35, 48.86),
    ("Sydney", 151.21, -33.87),
    ("Cape Town", 18.42, -33.92),
    ("Anchorage", -149.9, 61.2),
    ("Quito", -78.47, -0.18),
]
print("designators:")
for name, lon, lat in spots:
    print(f"  {name:10s} ({lon:8.2f}, {lat:7.2f}) -> {utm_designator(lon, lat)}")

points = [(2.35, 48.86)] * 12 + [(151.21, -33.87)] * 7 + [(18.42, -33.92)] * 3 + [(0.0, 95.0)]
counts, skipped = zone_histogram(points)
print(f"\nhistogram over {len(points)} points ({skipped} skipped as out of band):")
for designator, count in sorted_zone_counts(counts):
    print(f"  {designator:4s} {'#' * count} {count}")

gazetteer = Gazetteer.load()
captions = [
    "Aerial view of Paris, France at night",
    "New York City skyline from the harbor",
    "comparison chart of sensor bands",
]
print("\nlocation mentions:")
for caption in captions:
    print(f"  {caption!r} -> {extract_locations(caption, gazetteer.names())}")
