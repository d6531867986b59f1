"""Deterministic 200-record end-to-end fixture.

Builds an input manifest with planted keyword misses, URL duplicates,
near-duplicate payload clusters, invalid images, dead links, candidate
captions for the archive-sourced records, and a pipeline config wired to a
local stub server. Everything derives from the seed, so two builds against
the same base URL are identical.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .manifest import dumps_canonical
from .records import MetaRecord, SourceRecord

_FILLER = (
    "green fields near the old town with a river and a small bridge",
    "stock photo of a market street with colorful stalls",
    "vintage poster print of a coastal village at sunset",
    "wall art showing mountains and a winding road",
    "hand drawn map illustration of a fantasy kingdom",
    "a quiet harbor with fishing boats at dawn",
    "city park with walking paths and a fountain",
)
_KEYWORD_SNIPPETS = (
    "aerial view of {}",
    "satellite image of {}",
    "an aerial photo over {}",
    "Sentinel-2 scene covering {}",
    "Landsat capture of {}",
    "remote sensing data for {}",
    "USGS aerial imagery of {}",
    "Google Earth screenshot of {}",
)
_PLACES = (
    "Paris", "London", "Sydney", "Cairo", "Toronto", "Nairobi", "Jakarta",
    "the river delta", "farmland", "an airport", "a roundabout", "the bay area",
    "a container port", "mountain terrain", "a solar farm",
)
_CLASS_LABELS = (
    "airport", "port facility", "solar farm", "wind farm", "stadium",
    "interchange", "dam", "golf course", "railway station", "storage tank",
)


@dataclass
class FixturePaths:
    root: Path
    input_manifest: Path
    candidates: Path
    config: Path


def _caption_with_keyword(rng: random.Random) -> str:
    return _KEYWORD_SNIPPETS[rng.randrange(len(_KEYWORD_SNIPPETS))].format(
        _PLACES[rng.randrange(len(_PLACES))]
    )


def _caption_plain(rng: random.Random) -> str:
    return _FILLER[rng.randrange(len(_FILLER))]


def build_fixture(root: str | Path, base_url: str, seed: int = 7) -> FixturePaths:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    records: list[SourceRecord] = []
    counter = 0

    def next_id(prefix: str) -> str:
        nonlocal counter
        counter += 1
        return f"{prefix}-{counter:04d}"

    web_sources = ("laion2b", "coyo700m", "laioncoco", "laion400m", "wit", "cc3m", "sbu")

    def web_source() -> str:
        return web_sources[rng.randrange(len(web_sources))]

    # 40 web records whose captions match no keyword.
    for _ in range(40):
        rid = next_id("web")
        records.append(
            SourceRecord(record_id=rid, source=web_source(), caption=_caption_plain(rng), url=f"{base_url}/img/{rid}")
        )
    # 8 dead links, 5 zero-byte payloads, 5 undecodable payloads.
    for _ in range(8):
        rid = next_id("web")
        records.append(
            SourceRecord(
                record_id=rid, source=web_source(), caption=_caption_with_keyword(rng), url=f"{base_url}/missing/{rid}"
            )
        )
    for _ in range(5):
        rid = next_id("web")
        records.append(
            SourceRecord(
                record_id=rid, source=web_source(), caption=_caption_with_keyword(rng), url=f"{base_url}/zero/{rid}"
            )
        )
    for _ in range(5):
        rid = next_id("web")
        records.append(
            SourceRecord(
                record_id=rid, source=web_source(), caption=_caption_with_keyword(rng), url=f"{base_url}/garbage/{rid}"
            )
        )
    # 3 exact URL duplicate pairs (same resource, differently written URL).
    for pair in range(3):
        name = f"urldup-{pair}"
        rid_a, rid_b = next_id("web"), next_id("web")
        records.append(
            SourceRecord(
                record_id=rid_a, source=web_source(), caption=_caption_with_keyword(rng), url=f"{base_url}/img/{name}"
            )
        )
        # Same resource with an uppercased scheme; URL normalization folds it.
        records.append(
            SourceRecord(
                record_id=rid_b,
                source=web_source(),
                caption=_caption_with_keyword(rng),
                url=f"{base_url.replace('http://', 'HTTP://')}/img/{name}",
            )
        )
    # 4 near-duplicate clusters: distinct URLs, identical payloads.
    cluster_specs = [
        ("neardup-0", ("laioncoco", "laion2b", "wit")),
        ("neardup-1", ("laioncoco", "laioncoco", "laioncoco")),
        ("neardup-2", ("wit", "sbu")),
        ("neardup-3", ("coyo700m", "laioncoco")),
    ]
    for name, sources in cluster_specs:
        for i, source in enumerate(sources):
            rid = next_id("web")
            records.append(
                SourceRecord(
                    record_id=rid,
                    source=source,
                    caption=_caption_with_keyword(rng),
                    url=f"{base_url}/img/{name}?variant={i}",
                )
            )
    # Plain healthy web records to reach 140.
    while len(records) < 140:
        rid = next_id("web")
        records.append(
            SourceRecord(record_id=rid, source=web_source(), caption=_caption_with_keyword(rng), url=f"{base_url}/img/{rid}")
        )
    # 60 archive records (no usable caption yet; candidates provided below).
    rs3_plan = (("fmow", 25), ("bigearthnet", 20), ("millionaid", 15))
    rs3_ids = []
    for source, count in rs3_plan:
        for _ in range(count):
            rid = next_id(source)
            rs3_ids.append(rid)
            meta = None
            if source in ("fmow", "bigearthnet"):
                lon = rng.uniform(-179.0, 179.0)
                lat = rng.uniform(-60.0, 70.0)
                meta = MetaRecord(
                    lon=round(lon, 4),
                    lat=round(lat, 4),
                    timestamp=datetime(2015 + rng.randrange(5), 1 + rng.randrange(12), 1 + rng.randrange(28), tzinfo=timezone.utc),
                    class_label=_CLASS_LABELS[rng.randrange(len(_CLASS_LABELS))] if source == "fmow" else None,
                    bbox=(8.0, 8.0, 16.0, 16.0) if source == "fmow" else None,
                    image_size=(64, 64) if source == "fmow" else None,
                    gsd=round(rng.uniform(0.3, 3.0), 2) if source == "fmow" else None,
                    cloud_cover=round(rng.uniform(0.0, 0.6), 2) if source == "fmow" else None,
                )
            records.append(
                SourceRecord(record_id=rid, source=source, caption="", url=f"{base_url}/img/{rid}", meta=meta)
            )

    input_manifest = root / "input_manifest.jsonl"
    with open(input_manifest, "w", encoding="utf-8") as f:
        for record in records:
            f.write(dumps_canonical(record.to_json_dict()))
            f.write("\n")

    candidates = root / "candidates.jsonl"
    with open(candidates, "w", encoding="utf-8") as f:
        for rid in rs3_ids:
            n = 20
            cands = []
            for i in range(n):
                place = _PLACES[rng.randrange(len(_PLACES))]
                label = _CLASS_LABELS[rng.randrange(len(_CLASS_LABELS))]
                cands.append(f"candidate {i}: a satellite image of {label} near {place}")
            f.write(dumps_canonical({"candidates": cands, "image_id": rid}))
            f.write("\n")

    config_path = root / "config.json"
    config = {
        "seed": seed,
        "paths": {
            "input_manifest": str(input_manifest),
            "candidates": str(candidates),
            "out_dir": str(root / "out"),
        },
        "embedding": {"backend": "test", "dim": 64},
        "fetch": {"concurrency": 16, "per_host": 8, "retries": 2, "backoff_ms": 10, "timeout_s": 10},
        "dedup": {"k": 5, "threshold": 0.96},
        "filter": {"keep_s": 0.9, "keep_c": 0.8},
        "captions": {"mode": "rotation"},
        "shard": {"size": 40},
    }
    config_path.write_text(json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return FixturePaths(root=root, input_manifest=input_manifest, candidates=candidates, config=config_path)
