"""Exercise the caption review service in-process: dispatch, rate, aggregate.

The service prefers globally least-rated records, round-robins across subsets,
and recomputes aggregates from its append-only log (latest rating wins per
annotator/record pair).
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from rscurate.review import build_app
from rscurate.testing import make_png

data = Path(tempfile.mkdtemp(prefix="demo-review-"))
(data / "images").mkdir()
lines = []
for i, subset in enumerate(["fmow", "fmow", "bigearthnet", "millionaid"]):
    record_id = f"sample-{i}"
    (data / "images" / f"{record_id}.png").write_bytes(make_png(seed=i))
    lines.append(json.dumps({
        "record_id": record_id, "subset": subset,
        "caption": f"a generated caption for {subset} image {i}",
        "image": f"images/{record_id}.png",
    }))
(data / "corpus.jsonl").write_text("\n".join(lines) + "\n")

client = TestClient(build_app(data, seed=0))

print("annotator 'alice' works through the queue:")
for scores in ((5, 4, 5), (3, 3, 3), (4, 5, 5)):
    sample = client.get("/api/v1/next", params={"annotator": "alice"}).json()
    print(f"  got {sample['record_id']} ({sample['subset']}): {sample['caption']!r}")
    relevance, hallucination, fluency = scores
    client.post("/api/v1/ratings", json={
        "annotator_id": "alice", "record_id": sample["record_id"],
        "relevance_detail": relevance, "hallucination": hallucination, "fluency": fluency,
    })

stats = client.get("/api/v1/stats").json()
print(f"\naggregates over {stats['count']} ratings:")
for axis, values in stats["overall"].items():
    std = f"{values['std']:.2f}" if values["std"] is not None else "n/a"
    print(f"  {axis:18s} mean={values['mean']:.2f} std={std}")
print("\nper subset:", ", ".join(stats["subsets"]))
print("\nto serve over HTTP with the browser UI:")
print(f"  rscurate serve-review --data {data} --port 8000 --ui-dir frontend/dist")
