"""Run the whole pipeline on the bundled 200-record fixture.

The fixture plants every failure mode: captions without keywords, dead links,
zero-byte and undecodable payloads, exact URL duplicates, near-duplicate
payload clusters, and low-scoring records. Stages run in order and every stage
writes a manifest plus its ledger; the merged ledger must conserve.
"""

import json
import tempfile
from pathlib import Path

from rscurate.config import load_config
from rscurate.fixtures import build_fixture
from rscurate.pipeline import run_all
from rscurate.shards import read_shard
from rscurate.testing import StubImageServer

root = Path(tempfile.mkdtemp(prefix="demo-pipeline-"))
with StubImageServer() as stub:
    fixture = build_fixture(root, stub.base_url, seed=7)
    result = run_all(load_config(fixture.config))

print("stage accounting:")
for stage in ("keywords", "fetch", "dedup", "score-filter", "caption-select", "meta-caption"):
    attempted = result.ledger.total_attempted(stage)
    kept = result.ledger.total_kept(stage)
    print(f"  {stage:15s} attempted={attempted:4d} kept={kept:4d} removed={attempted - kept}")
print("conservation violations:", result.ledger.verify_conservation())

report = json.loads((result.out_dir / "geo_report.json").read_text())
print(f"\ngeo report: {len(report['zone_counts'])} UTM zones, "
      f"mean caption length {report['caption_stats']['mean_words']:.1f} words")

print(f"\nshards written: {[p.name for p in result.shard_paths]}")
key, image, caption, meta = next(iter(read_shard(result.shard_paths[0])))
print(f"first sample: key={key} image={len(image)} bytes meta source={meta['source']}")
print(f"  caption: {caption[:100]}")
print(f"\neverything under: {result.out_dir}")
