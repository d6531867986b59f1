"""Joint (s, c) filtering: keep the top 90% by similarity AND top 80% by
detector probability.

s is the cosine of each image embedding against the centroid of the 33 prompt
templates; c is the probability the image is remote sensing. The cuts are
rank-based, so exactly floor(0.1 N) and floor(0.2 N) records fall below each
cut, and a record must clear both.
"""

from rscurate.embeddings import HashEmbedder
from rscurate.records import FilterPolicy
from rscurate.scoring import (
    ScorePair,
    clip_score,
    joint_filter,
    load_template_set,
    template_centroid,
)

embedder = HashEmbedder(dim=128)
templates = load_template_set()
print(f"{len(templates.templates)} templates; first: {templates.templates[0]!r}")
centroid = template_centroid(embedder.embed_text(list(templates.templates), "demo-model"))

keys = [f"image-{i:03d}" for i in range(50)]
image_embs = dict(zip(keys, embedder.embed_image(keys, "demo-model")))
probs = dict(zip(keys, embedder.detector_probability(keys)))

pairs = {k: ScorePair(s=clip_score(centroid, image_embs[k]), c=probs[k]) for k in keys}
kept, _ = joint_filter(pairs, FilterPolicy(keep_fraction_s=0.9, keep_fraction_c=0.8))

print(f"\nN=50, keep 0.9/0.8: s-cut drops 5, c-cut drops 10, intersection keeps {len(kept)}")
print("\nlowest five by s (all dropped or at risk):")
for k in sorted(pairs, key=lambda k: pairs[k].s)[:5]:
    p = pairs[k]
    print(f"  {k}  s={p.s:+.4f}  c={p.c:.4f}  -> {'kept' if k in kept else 'removed'}")
