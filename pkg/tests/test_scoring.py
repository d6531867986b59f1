import random
from fractions import Fraction

import numpy as np
import pytest

from rscurate.embeddings import EmbeddingVector, HashEmbedder
from rscurate.errors import ValidationError
from rscurate.records import Disposition, FilterPolicy
from rscurate.scoring import (
    ScorePair,
    TemplateSet,
    clip_score,
    detector_split,
    drop_lowest,
    joint_filter,
    load_template_set,
    template_centroid,
)


def vec(values, model="m"):
    return EmbeddingVector(model_id=model, values=np.asarray(values, dtype=np.float32))


# ---------------------------------------------------------------- oracles

def drop_lowest_oracle(scores, keep_fraction):
    """Rank-based cut with exact rational arithmetic."""
    n = len(scores)
    drop = int((1 - Fraction(str(keep_fraction))) * n)  # floor for non-negative
    ranked = sorted(scores.items(), key=lambda kv: (kv[1], kv[0]))
    return {rid for rid, _ in ranked[drop:]}


def joint_oracle(pairs, keep_s, keep_c):
    kept_s = drop_lowest_oracle({r: p.s for r, p in pairs.items()}, keep_s)
    kept_c = drop_lowest_oracle({r: p.c for r, p in pairs.items()}, keep_c)
    return kept_s & kept_c


# ------------------------------------------------------------------ tests

class TestTemplateCentroid:
    def test_single_template_is_identity(self):
        v = vec([0.5, 0.5, 0.0])
        centroid = template_centroid([v])
        assert np.allclose(centroid.values, v.values)

    def test_exact_cancellation_rejected(self):
        v = vec([1.0, -2.0, 0.5])
        minus = vec(-v.values)
        with pytest.raises(ValidationError, match="zero norm"):
            template_centroid([v, minus])

    def test_bundled_template_file_embeds_33_entries(self):
        templates = load_template_set()
        assert len(templates.templates) == 33
        embedder = HashEmbedder(dim=64)
        vectors = embedder.embed_text(list(templates.templates), "score-model")
        assert len(vectors) == 33
        centroid = template_centroid(vectors)
        assert centroid.dim == 64

    def test_empty_template_set_rejected(self):
        with pytest.raises(ValidationError):
            TemplateSet(templates=())


class TestClipScore:
    def test_identical_vectors(self):
        v = vec([1.0, 2.0, 3.0])
        assert clip_score(v, v) == pytest.approx(1.0)

    def test_orthogonal_vectors(self):
        assert clip_score(vec([1, 0]), vec([0, 1])) == pytest.approx(0.0)

    def test_scale_invariance(self):
        rng = np.random.default_rng(0)
        a, b = rng.standard_normal(16), rng.standard_normal(16)
        base = clip_score(vec(a), vec(b))
        for factor in (0.1, 3.0, 250.0):
            assert clip_score(vec(a * factor), vec(b)) == pytest.approx(base, abs=1e-6)

    def test_zero_norm_rejected(self):
        with pytest.raises(ValidationError):
            clip_score(vec([0.0, 0.0]), vec([1.0, 0.0]))


class TestDropLowest:
    def test_keep_09_of_10_drops_exactly_the_minimum(self):
        scores = {f"r{i}": float(i) for i in range(10)}
        kept = drop_lowest(scores, 0.9)
        assert kept == {f"r{i}" for i in range(1, 10)}

    def test_keep_all(self):
        scores = {"a": 1.0, "b": -1.0}
        assert drop_lowest(scores, 1.0) == {"a", "b"}

    def test_tie_at_cut_drops_lower_record_id(self):
        scores = {f"r{i}": float(i) for i in range(10)}
        scores["r0"] = scores["r1"] = 0.5  # tie at the bottom
        kept = drop_lowest(scores, 0.8)
        assert len(kept) == 8
        assert "r0" not in kept and "r1" not in kept
        scores2 = dict(scores)
        scores2["r2"] = 0.5  # three-way tie, drop two lowest ids
        kept2 = drop_lowest(scores2, 0.8)
        assert "r0" not in kept2 and "r1" not in kept2 and "r2" in kept2

    def test_kept_size_identity(self):
        rng = random.Random(1)
        for trial in range(50):
            n = rng.randint(1, 200)
            keep = rng.choice([0.5, 0.8, 0.9, 0.95, 1.0, 0.33])
            scores = {f"x{i:03d}": rng.random() for i in range(n)}
            kept = drop_lowest(scores, keep)
            drop = int((1 - Fraction(str(keep))) * n)
            assert len(kept) == n - drop

    def test_monotone_transform_invariance(self):
        rng = random.Random(2)
        scores = {f"y{i:02d}": rng.random() for i in range(40)}
        base = drop_lowest(scores, 0.7)
        warped = {k: v**3 + 5 for k, v in scores.items()}  # strictly increasing
        assert drop_lowest(warped, 0.7) == base


class TestJointFilter:
    def test_hand_intersection(self):
        pairs = {
            "r1": ScorePair(s=0.1, c=0.9),  # dropped by s-cut
            "r2": ScorePair(s=0.9, c=0.1),  # dropped by c-cut
            "r3": ScorePair(s=0.8, c=0.8),
            "r4": ScorePair(s=0.7, c=0.7),
        }
        kept, _ = joint_filter(pairs, FilterPolicy(keep_fraction_s=0.75, keep_fraction_c=0.75))
        assert kept == {"r3", "r4"}

    def test_keep_all_fractions(self):
        pairs = {f"r{i}": ScorePair(s=random.Random(i).random() * 2 - 1, c=0.5) for i in range(7)}
        kept, _ = joint_filter(pairs, FilterPolicy(keep_fraction_s=1.0, keep_fraction_c=1.0))
        assert kept == set(pairs)

    def test_thousand_synthetic_pairs_match_oracle(self):
        rng = random.Random(99)
        pairs = {}
        for i in range(1000):
            # plant ties: quantized scores collide often
            s = round(rng.uniform(-1, 1), 2)
            c = round(rng.random(), 2)
            pairs[f"p{i:04d}"] = ScorePair(s=s, c=c)
        policy = FilterPolicy(keep_fraction_s=0.9, keep_fraction_c=0.8)
        kept, _ = joint_filter(pairs, policy)
        assert kept == joint_oracle(pairs, 0.9, 0.8)

    def test_order_invariance(self):
        rng = random.Random(5)
        items = [(f"q{i:03d}", ScorePair(s=rng.uniform(-1, 1), c=rng.random())) for i in range(100)]
        kept_fwd, _ = joint_filter(dict(items), FilterPolicy())
        kept_rev, _ = joint_filter(dict(reversed(items)), FilterPolicy())
        assert kept_fwd == kept_rev

    def test_ledger_dispositions(self):
        pairs = {"a": ScorePair(s=0.9, c=0.9), "b": ScorePair(s=-0.9, c=0.9)}
        kept, ledger = joint_filter(
            pairs, FilterPolicy(keep_fraction_s=0.5, keep_fraction_c=1.0), sources={"a": "wit", "b": "sbu"}
        )
        assert kept == {"a"}
        assert ledger.removed("sbu", "score-filter", Disposition.REMOVED_BY_SCORE_FILTER) == 1
        assert ledger.kept("wit", "score-filter") == 1


class TestScorePair:
    def test_ranges_enforced(self):
        with pytest.raises(ValidationError):
            ScorePair(s=1.5, c=0.5)
        with pytest.raises(ValidationError):
            ScorePair(s=0.5, c=-0.1)
        with pytest.raises(ValidationError):
            ScorePair(s=float("nan"), c=0.5)


class TestDetectorSplit:
    def _items(self, per_class, classes=("rs", "nonrs")):
        return [(f"{cls}-{i:05d}", cls) for cls in classes for i in range(per_class)]

    def test_ten_thousand_balanced(self):
        train, val, test = detector_split(self._items(5000), seed=0)
        assert (len(train), len(val), len(test)) == (7000, 1000, 2000)
        for split, expected in ((train, 3500), (val, 500), (test, 1000)):
            for cls in ("rs", "nonrs"):
                assert sum(1 for _, c in split if c == cls) == expected

    def test_same_seed_identical(self):
        a = detector_split(self._items(50), seed=42)
        b = detector_split(self._items(50), seed=42)
        assert a == b

    def test_class_of_ten_splits_7_1_2(self):
        train, val, test = detector_split(self._items(10), seed=1)
        for split, expected in ((train, 7), (val, 1), (test, 2)):
            for cls in ("rs", "nonrs"):
                assert sum(1 for _, c in split if c == cls) == expected

    def test_small_class_rejected(self):
        with pytest.raises(ValidationError, match="too small"):
            detector_split(self._items(9), seed=0)

    def test_single_class_rejected(self):
        with pytest.raises(ValidationError, match="2 classes"):
            detector_split([(f"x{i}", "only") for i in range(20)], seed=0)

    def test_partition_of_input(self):
        items = self._items(37)
        train, val, test = detector_split(items, seed=3)
        assert sorted(train + val + test) == sorted(items)
