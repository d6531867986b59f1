"""Walk through keyword filtering: which captions survive and why.

The bundled keyword set has two groups: topic stems like "aerial imag" that
match any continuation ("aerial image", "aerial imagery"), and product or
program names like "Sentinel-2". A caption is kept if any keyword matches at
a word boundary, case-insensitively.
"""

from rscurate.keywords import compile_keywords, keyword_histogram, load_keyword_set

keyword_set = load_keyword_set()
print(f"group 1 (stems):  {len(keyword_set.group1)} terms, e.g. {keyword_set.group1[:3]}")
print(f"group 2 (names):  {len(keyword_set.group2)} terms, e.g. {keyword_set.group2[:3]}")

matcher = compile_keywords(keyword_set)

captions = [
    "An aerial view of Paris at dawn",
    "Sentinel-2 satellite image over the Nile delta",
    "Watercolor painting of a lighthouse",
    "USGS aerial imagery of farmland, 2019",
    "Cute cat sleeping on a keyboard",
]
print("\nper-caption decisions:")
for caption in captions:
    matches = matcher.match_caption(caption)
    verdict = "KEEP" if matches else "DROP"
    hits = ", ".join(f"{m.keyword} (group {m.group}, byte {m.byte_offset})" for m in matches)
    print(f"  [{verdict}] {caption!r}" + (f" -> {hits}" if hits else ""))

print("\nkeyword frequency over the kept captions:")
kept = [c for c in captions if matcher.has_match(c)]
for keyword, count in sorted(keyword_histogram(matcher, kept).items()):
    print(f"  {keyword:24s} {count}")
