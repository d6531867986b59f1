import itertools

import numpy as np
import pytest

from rscurate.embeddings import EmbeddingVector, HashEmbedder
from rscurate.errors import ValidationError
from rscurate.metrics import (
    ClassPromptSet,
    RetrievalGroundTruth,
    load_zsc_prompts,
    mean_recall,
    recall_at_k,
    recall_table,
    similarity_matrix,
    zero_shot_top1,
)


def vec(values, model="m"):
    return EmbeddingVector(model_id=model, values=np.asarray(values, dtype=np.float32))


# ---------------------------------------------------------------- oracles

def recall_oracle(matrix, truth, k, direction):
    """Exhaustive enumeration with the same deterministic tie order."""
    matrix = np.asarray(matrix, dtype=np.float64)
    hits = 0
    if direction == "i2t":
        for i, image_id in enumerate(truth.image_ids):
            ranked = sorted(
                range(len(truth.caption_ids)), key=lambda j: (-matrix[i, j], truth.caption_ids[j])
            )[:k]
            if any(truth.caption_to_image[truth.caption_ids[j]] == image_id for j in ranked):
                hits += 1
        return hits / len(truth.image_ids)
    for j, caption_id in enumerate(truth.caption_ids):
        ranked = sorted(range(len(truth.image_ids)), key=lambda i: (-matrix[i, j], truth.image_ids[i]))[:k]
        if any(truth.image_ids[i] == truth.caption_to_image[caption_id] for i in ranked):
            hits += 1
    return hits / len(truth.caption_ids)


def random_instance(rng, n_images, captions_per_image):
    image_ids = [f"img{i:03d}" for i in range(n_images)]
    caption_ids = []
    caption_to_image = {}
    for i, image_id in enumerate(image_ids):
        for c in range(captions_per_image):
            cid = f"cap{i:03d}_{c}"
            caption_ids.append(cid)
            caption_to_image[cid] = image_id
    truth = RetrievalGroundTruth(image_ids=image_ids, caption_ids=caption_ids, caption_to_image=caption_to_image)
    matrix = rng.uniform(-1, 1, size=(len(image_ids), len(caption_ids)))
    return matrix, truth


# ------------------------------------------------------------------ tests

class TestSimilarityMatrix:
    def test_identical_single_pair(self):
        m = similarity_matrix([vec([1.0, 1.0])], [vec([2.0, 2.0])])
        assert m.shape == (1, 1) and m[0, 0] == pytest.approx(1.0)

    def test_orthogonal_pair(self):
        m = similarity_matrix([vec([1.0, 0.0])], [vec([0.0, 1.0])])
        assert m[0, 0] == pytest.approx(0.0)

    def test_random_8x8_matches_elementwise(self):
        rng = np.random.default_rng(5)
        imgs = [rng.standard_normal(12) for _ in range(8)]
        txts = [rng.standard_normal(12) for _ in range(8)]
        m = similarity_matrix([vec(v) for v in imgs], [vec(v) for v in txts])
        for i, j in itertools.product(range(8), range(8)):
            a, b = imgs[i], txts[j]
            expected = a @ b / (np.linalg.norm(a) * np.linalg.norm(b))
            assert m[i, j] == pytest.approx(expected, abs=1e-6)

    def test_dim_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            similarity_matrix([vec([1.0, 0.0])], [vec([1.0, 0.0, 0.0])])


class TestRecall:
    def _identity_instance(self):
        image_ids = ["a", "b", "c"]
        caption_ids = ["ca1", "ca2", "cb1", "cb2", "cc1", "cc2"]
        caption_to_image = {"ca1": "a", "ca2": "a", "cb1": "b", "cb2": "b", "cc1": "c", "cc2": "c"}
        matrix = np.full((3, 6), -0.5)
        for j, cid in enumerate(caption_ids):
            i = image_ids.index(caption_to_image[cid])
            matrix[i, j] = 0.9
        truth = RetrievalGroundTruth(image_ids=image_ids, caption_ids=caption_ids, caption_to_image=caption_to_image)
        return matrix, truth

    def test_identity_like_matrix_r1_is_one(self):
        matrix, truth = self._identity_instance()
        assert recall_at_k(matrix, truth, 1, "i2t") == 1.0
        assert recall_at_k(matrix, truth, 1, "t2i") == 1.0

    def test_k_at_least_candidates_gives_one(self):
        rng = np.random.default_rng(3)
        matrix, truth = random_instance(rng, 3, 2)
        assert recall_at_k(matrix, truth, 6, "i2t") == 1.0
        assert recall_at_k(matrix, truth, 3, "t2i") == 1.0

    def test_crafted_3x6_matches_enumeration(self):
        rng = np.random.default_rng(17)
        matrix, truth = random_instance(rng, 3, 2)
        for k in (1, 2, 3, 5):
            for direction in ("i2t", "t2i"):
                assert recall_at_k(matrix, truth, k, direction) == recall_oracle(matrix, truth, k, direction)

    def test_random_32x64_matches_enumeration_to_1e9(self):
        rng = np.random.default_rng(19)
        matrix, truth = random_instance(rng, 32, 2)
        for k in (1, 5, 10):
            for direction in ("i2t", "t2i"):
                got = recall_at_k(matrix, truth, k, direction)
                want = recall_oracle(matrix, truth, k, direction)
                assert abs(got - want) < 1e-9

    def test_monotone_in_k(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            matrix, truth = random_instance(rng, 6, 2)
            for direction in ("i2t", "t2i"):
                values = [recall_at_k(matrix, truth, k, direction) for k in (1, 2, 3, 4, 6)]
                assert values == sorted(values)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(29)
        matrix, truth = random_instance(rng, 5, 2)
        base = recall_table(matrix, truth)
        perm_i = rng.permutation(5)
        perm_j = rng.permutation(10)
        permuted = RetrievalGroundTruth(
            image_ids=[truth.image_ids[i] for i in perm_i],
            caption_ids=[truth.caption_ids[j] for j in perm_j],
            caption_to_image=truth.caption_to_image,
        )
        assert recall_table(matrix[np.ix_(perm_i, perm_j)], permuted) == base

    def test_caption_must_map_to_known_image(self):
        with pytest.raises(ValidationError):
            RetrievalGroundTruth(image_ids=["a"], caption_ids=["c"], caption_to_image={"c": "zz"})


class TestMeanRecall:
    def test_all_six_recalls_one(self):
        mapping = {"c1": "a", "c2": "b"}
        matrix = np.array([[0.9, -0.9], [-0.9, 0.9]])
        truth = RetrievalGroundTruth(image_ids=["a", "b"], caption_ids=["c1", "c2"], caption_to_image=mapping)
        assert mean_recall(matrix, truth) == 1.0

    def test_half_and_half(self):
        # One image's caption always wins, the other always loses at k=1;
        # six recalls come out {i2t: 0.5, 1, 1, t2i: 0.5, 1, 1} for this matrix.
        mapping = {"c1": "a", "c2": "b"}
        matrix = np.array([[0.9, 0.8], [-0.9, -0.8]])
        truth = RetrievalGroundTruth(image_ids=["a", "b"], caption_ids=["c1", "c2"], caption_to_image=mapping)
        table = recall_table(matrix, truth)
        assert mean_recall(matrix, truth) == pytest.approx(sum(table.values()) / 6)

    def test_mean_of_six_values(self):
        rng = np.random.default_rng(31)
        matrix, truth = random_instance(rng, 12, 1)
        table = recall_table(matrix, truth)
        assert mean_recall(matrix, truth) == pytest.approx(sum(table.values()) / 6)


class TestZeroShot:
    def test_images_at_centroids_are_perfect(self):
        embedder = HashEmbedder(dim=32)
        prompt_set = ClassPromptSet(classes=("river", "forest", "city"), templates=("a satellite image of {class}.",))
        from rscurate.metrics import class_centroids

        centroids = class_centroids(prompt_set, embedder, "m")
        image_embs = {}
        labels = {}
        for cls, centroid in centroids.items():
            key = f"img-{cls}"
            image_embs[key] = EmbeddingVector(model_id="m", values=centroid.astype(np.float32))
            labels[key] = cls
        assert zero_shot_top1(image_embs, labels, prompt_set, embedder, model_id="m") == 1.0

    def test_single_class_always_correct(self):
        embedder = HashEmbedder(dim=16)
        prompt_set = ClassPromptSet(classes=("field",), templates=("{class} from above",))
        image_embs = {"k": embedder.embed_image(["k"], "m")[0]}
        assert zero_shot_top1(image_embs, {"k": "field"}, prompt_set, embedder, model_id="m") == 1.0

    def test_planted_misassignment_among_thirty(self):
        rng = np.random.default_rng(41)
        classes = ("alpha", "beta", "gamma")

        class OrthogonalEmbedder:
            """Class prompts map to fixed orthogonal axes."""

            dim = 12

            def embed_text(self, texts, model_id):
                out = []
                for t in texts:
                    values = np.zeros(12)
                    for i, cls in enumerate(classes):
                        if cls in t:
                            values[i] = 1.0
                    out.append(EmbeddingVector(model_id=model_id, values=values.astype(np.float32)))
                return out

        prompt_set = ClassPromptSet(classes=classes, templates=("{class}",))
        image_embs = {}
        labels = {}
        for n in range(30):
            cls_index = n % 3
            values = np.zeros(12)
            values[cls_index] = 1.0
            values += rng.normal(0, 0.05, size=12)  # small blob noise
            key = f"img{n:02d}"
            image_embs[key] = EmbeddingVector(model_id="m", values=values.astype(np.float32))
            labels[key] = classes[cls_index]
        labels["img00"] = "beta"  # planted wrong label
        accuracy = zero_shot_top1(image_embs, labels, prompt_set, OrthogonalEmbedder(), model_id="m")
        assert accuracy == pytest.approx(29 / 30)

    def test_centroid_scaling_invariance(self):
        embedder = HashEmbedder(dim=16)
        classes = ("one", "two")

        class ScaledEmbedder:
            def __init__(self, factor):
                self.factor = factor

            def embed_text(self, texts, model_id):
                return [
                    EmbeddingVector(model_id=model_id, values=(v.values * self.factor))
                    for v in embedder.embed_text(texts, model_id)
                ]

        prompt_set = ClassPromptSet(classes=classes, templates=("a photo of {class}.",))
        rng = np.random.default_rng(43)
        image_embs = {f"i{n}": EmbeddingVector(model_id="m", values=rng.standard_normal(16).astype(np.float32)) for n in range(10)}
        labels = {k: classes[i % 2] for i, k in enumerate(sorted(image_embs))}
        base = zero_shot_top1(image_embs, labels, prompt_set, ScaledEmbedder(1.0), model_id="m")
        scaled = zero_shot_top1(image_embs, labels, prompt_set, ScaledEmbedder(7.5), model_id="m")
        assert base == scaled

    def test_unknown_label_rejected(self):
        embedder = HashEmbedder(dim=8)
        prompt_set = ClassPromptSet(classes=("a",), templates=("{class}",))
        image_embs = {"k": embedder.embed_image(["k"], "m")[0]}
        with pytest.raises(ValidationError, match="not in prompt set"):
            zero_shot_top1(image_embs, {"k": "mystery"}, prompt_set, embedder, model_id="m")

    def test_bundled_prompt_template(self):
        prompt_set = load_zsc_prompts(["beach", "harbor"])
        assert prompt_set.prompts_for("beach") == ["a satellite image of beach."]
