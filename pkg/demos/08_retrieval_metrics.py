"""Retrieval recall@k / mean recall, and zero-shot classification accuracy.

A tiny retrieval instance with two captions per image shows the i2t and t2i
conventions; the zero-shot demo classifies images against prompt-ensemble
centroids ("a satellite image of {class}.").
"""

import numpy as np

from rscurate.embeddings import EmbeddingVector, HashEmbedder
from rscurate.metrics import (
    ClassPromptSet,
    RetrievalGroundTruth,
    class_centroids,
    mean_recall,
    recall_table,
    similarity_matrix,
    zero_shot_top1,
)

embedder = HashEmbedder(dim=64)
image_ids = [f"img{i}" for i in range(8)]
caption_ids, mapping, caption_texts = [], {}, []
for i, image_id in enumerate(image_ids):
    for c in range(2):
        cid = f"cap{i}_{c}"
        caption_ids.append(cid)
        mapping[cid] = image_id
        caption_texts.append(f"caption {c} describing scene {i}")

image_embs = embedder.embed_image(image_ids, "m")
# make each caption's embedding lean toward its image so retrieval is easy
text_embs = []
for cid, text in zip(caption_ids, caption_texts):
    base = embedder.embed_text([text], "m")[0].values.astype(np.float64)
    target = image_embs[image_ids.index(mapping[cid])].values.astype(np.float64)
    mixed = 0.3 * base + 0.7 * target
    text_embs.append(EmbeddingVector(model_id="m", values=(mixed / np.linalg.norm(mixed)).astype(np.float32)))

truth = RetrievalGroundTruth(image_ids=image_ids, caption_ids=caption_ids, caption_to_image=mapping)
matrix = similarity_matrix(image_embs, text_embs)
print("recall table:")
for metric, value in recall_table(matrix, truth).items():
    print(f"  {metric:10s} {value:.3f}")
print(f"  mean recall {mean_recall(matrix, truth):.3f}")

print("\nzero-shot classification:")
prompt_set = ClassPromptSet(classes=("river", "forest", "airport"), templates=("a satellite image of {class}.",))
centroids = class_centroids(prompt_set, embedder, "m")
labels, image_map = {}, {}
rng = np.random.default_rng(1)
for cls in prompt_set.classes:
    for n in range(5):
        key = f"{cls}-{n}"
        jittered = centroids[cls] + rng.normal(0, 0.02, size=64)
        image_map[key] = EmbeddingVector(model_id="m", values=jittered.astype(np.float32))
        labels[key] = cls
accuracy = zero_shot_top1(image_map, labels, prompt_set, embedder, model_id="m")
print(f"  top-1 accuracy on 15 jittered images: {accuracy:.3f}")
