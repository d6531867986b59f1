import hashlib
import math
import tarfile

import numpy as np
import pytest

from rscurate.errors import ValidationError
from rscurate.shards import (
    MissingMemberError,
    ShardReadError,
    ShardSample,
    ShardSpec,
    read_shard,
    sanitize_key,
    write_index_csv,
    write_shards,
)
from rscurate.testing import make_png


def make_samples(n, prefix="s"):
    return [
        ShardSample(key=f"{prefix}{i:04d}", image=make_png(seed=i), caption=f"caption {i}", meta={"n": i})
        for i in range(n)
    ]


class TestWriteShards:
    def test_25_samples_max_10_split_10_10_5(self, tmp_path):
        paths, index = write_shards(make_samples(25), tmp_path, ShardSpec(max_samples_per_shard=10))
        assert [p.name for p in paths] == ["shard-000000.tar", "shard-000001.tar", "shard-000002.tar"]
        sizes = [sum(1 for _ in read_shard(p)) for p in paths]
        assert sizes == [10, 10, 5]

    def test_zero_samples_warns_and_writes_nothing(self, tmp_path, caplog):
        import logging

        with caplog.at_level(logging.WARNING):
            paths, index = write_shards([], tmp_path)
        assert paths == [] and index == []
        assert any("zero shards" in r.message for r in caplog.records)

    def test_duplicate_keys_rejected(self, tmp_path):
        samples = [
            ShardSample(key="same", image=b"x", caption="", meta={}),
            ShardSample(key="same", image=b"y", caption="", meta={}),
        ]
        with pytest.raises(ValidationError, match="duplicate"):
            write_shards(samples, tmp_path)

    def test_sanitize_collision_rejected(self, tmp_path):
        samples = [
            ShardSample(key="a/b", image=b"x", caption="", meta={}),
            ShardSample(key="a_b", image=b"y", caption="", meta={}),
        ]
        with pytest.raises(ValidationError, match="duplicate"):
            write_shards(samples, tmp_path)

    def test_shard_count_is_ceiling(self, tmp_path):
        for n in (1, 9, 10, 11, 30):
            out = tmp_path / f"n{n}"
            paths, _ = write_shards(make_samples(n), out, ShardSpec(max_samples_per_shard=10))
            assert len(paths) == math.ceil(n / 10)

    def test_index_lists_every_key_once(self, tmp_path):
        paths, index = write_shards(make_samples(13), tmp_path, ShardSpec(max_samples_per_shard=5))
        keys = [k for k, _ in index]
        assert keys == [f"s{i:04d}" for i in range(13)]
        assert len(set(keys)) == 13
        write_index_csv(tmp_path / "index.csv", index)
        lines = (tmp_path / "index.csv").read_text().strip().splitlines()
        assert lines[0] == "key,shard_file"
        assert len(lines) == 14

    def test_rerun_is_byte_identical(self, tmp_path):
        a, _ = write_shards(make_samples(8), tmp_path / "a", ShardSpec(max_samples_per_shard=5))
        b, _ = write_shards(make_samples(8), tmp_path / "b", ShardSpec(max_samples_per_shard=5))
        for pa, pb in zip(a, b):
            assert pa.read_bytes() == pb.read_bytes()


class TestReadShard:
    def test_roundtrip_three_samples(self, tmp_path):
        samples = make_samples(3)
        paths, _ = write_shards(samples, tmp_path)
        got = list(read_shard(paths[0]))
        assert [(k, img, cap, meta) for k, img, cap, meta in got] == [
            (s.key, s.image, s.caption, s.meta) for s in samples
        ]

    def test_random_payload_roundtrip_digests(self, tmp_path):
        rng = np.random.default_rng(0)
        samples = [
            ShardSample(
                key=f"r{i:04d}",
                image=rng.integers(0, 256, size=rng.integers(1, 512)).astype(np.uint8).tobytes(),
                caption=f"c{i}",
                meta={"i": i},
            )
            for i in range(1000)
        ]
        paths, _ = write_shards(samples, tmp_path, ShardSpec(max_samples_per_shard=400))
        seen = {}
        for p in paths:
            for key, image, _, _ in read_shard(p):
                seen[key] = hashlib.sha256(image).hexdigest()
        assert seen == {s.key: hashlib.sha256(s.image).hexdigest() for s in samples}

    def test_missing_txt_member(self, tmp_path):
        path = tmp_path / "broken.tar"
        with tarfile.open(path, "w") as tar:
            for name, payload in (("k.jpg", b"img"), ("k.json", b"{}")):
                info = tarfile.TarInfo(name=name)
                info.size = len(payload)
                import io

                tar.addfile(info, io.BytesIO(payload))
        with pytest.raises(MissingMemberError) as err:
            list(read_shard(path))
        assert err.value.key == "k" and err.value.member == "txt"

    def test_corrupt_tar_reports_offset(self, tmp_path):
        path = tmp_path / "corrupt.tar"
        path.write_bytes(b"this is not a tar file at all, not even close....")
        with pytest.raises(ShardReadError, match="byte offset"):
            list(read_shard(path))


class TestSanitizeKey:
    def test_tar_safe(self):
        assert sanitize_key("a/b c:d") == "a_b_c_d"
        assert sanitize_key("safe-key_1.2") == "safe-key_1.2"
        assert sanitize_key("") == "_"
