import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vqbench.errors import VqbenchError
from vqbench.store import (
    AVF_HEADER,
    AVF_MAGIC,
    BadMagic,
    IoFailure,
    ShapeMismatch,
    TooFewItems,
    TruncatedPayload,
    VersionMismatch,
    VideoTensor,
    load_checkpoint,
    quantize_frames,
    read_avf,
    save_checkpoint,
    split_dataset,
    ten_splits,
    write_avf,
)


def make_clip(t=8, h=64, w=64, seed=0):
    rng = np.random.default_rng(seed)
    return rng.random((t, h, w, 3))


class TestVideoTensor:
    def test_valid(self):
        v = VideoTensor(make_clip(), 8.0)
        assert v.frames.shape == (8, 64, 64, 3)

    def test_rejects_wrong_rank(self):
        with pytest.raises(ShapeMismatch):
            VideoTensor(np.zeros((8, 64, 64)), 8.0)

    def test_rejects_wrong_channels(self):
        with pytest.raises(ShapeMismatch):
            VideoTensor(np.zeros((8, 64, 64, 4)), 8.0)

    def test_rejects_single_frame(self):
        with pytest.raises(ShapeMismatch):
            VideoTensor(np.zeros((1, 64, 64, 3)), 8.0)


class TestQuantize:
    def test_round_half_up(self):
        # 0.5/255 quantizes up to 1, just below stays at 0
        frames = np.array([[[[0.5 / 255, 0.49 / 255, 0.0]]]])
        q = quantize_frames(frames)
        assert q.tolist() == [[[[1, 0, 0]]]]

    def test_extremes(self):
        frames = np.array([[[[0.0, 1.0, 2.0]]]])
        q = quantize_frames(frames)
        assert q.tolist() == [[[[0, 255, 255]]]]

    def test_negative_clipped(self):
        q = quantize_frames(np.array([[[[-0.5, 0.0, 0.0]]]]))
        assert q[0, 0, 0, 0] == 0


class TestAvf:
    def test_header_is_22_bytes(self):
        assert AVF_HEADER.size == 22

    def test_file_size_example(self, tmp_path):
        # 8 frames x 64 x 64 x 3 bytes + 22-byte header = 98,326
        path = tmp_path / "clip.avf"
        write_avf(str(path), VideoTensor(make_clip(), 8.0))
        assert path.stat().st_size == 22 + 8 * 64 * 64 * 3 == 98326

    def test_round_trip_bit_exact(self, tmp_path):
        path = tmp_path / "clip.avf"
        original = make_clip(seed=5)
        write_avf(str(path), VideoTensor(original, 12.0))
        loaded = read_avf(str(path))
        assert loaded.fps == 12.0
        # load -> save -> load is the identity on quantized data
        np.testing.assert_array_equal(
            quantize_frames(loaded.frames), quantize_frames(original)
        )
        path2 = tmp_path / "clip2.avf"
        write_avf(str(path2), loaded)
        assert path.read_bytes() == path2.read_bytes()

    def test_loaded_values_are_q_over_255(self, tmp_path):
        path = tmp_path / "clip.avf"
        original = make_clip(seed=1)
        write_avf(str(path), VideoTensor(original, 8.0))
        loaded = read_avf(str(path))
        np.testing.assert_allclose(
            loaded.frames, quantize_frames(original).astype(np.float64) / 255.0
        )

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "clip.avf"
        write_avf(str(path), VideoTensor(make_clip(), 8.0))
        raw = bytearray(path.read_bytes())
        raw[0] = ord(b"X")
        path.write_bytes(bytes(raw))
        with pytest.raises(BadMagic):
            read_avf(str(path))

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "clip.avf"
        write_avf(str(path), VideoTensor(make_clip(), 8.0))
        raw = bytearray(path.read_bytes())
        raw[4] = 2
        path.write_bytes(bytes(raw))
        with pytest.raises(VersionMismatch):
            read_avf(str(path))

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "clip.avf"
        write_avf(str(path), VideoTensor(make_clip(), 8.0))
        raw = path.read_bytes()
        path.write_bytes(raw[:-1])
        with pytest.raises(TruncatedPayload):
            read_avf(str(path))

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "clip.avf"
        path.write_bytes(b"AVF1")
        with pytest.raises(TruncatedPayload):
            read_avf(str(path))

    def test_trailing_garbage_rejected(self, tmp_path):
        path = tmp_path / "clip.avf"
        write_avf(str(path), VideoTensor(make_clip(), 8.0))
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(TruncatedPayload):
            read_avf(str(path))

    def test_missing_file_is_io_failure(self, tmp_path):
        with pytest.raises(IoFailure):
            read_avf(str(tmp_path / "absent.avf"))

    def test_magic_constant(self):
        assert AVF_MAGIC == b"AVF1"


class TestSplits:
    def test_80_20_exact(self):
        ids = [f"v{i:03d}" for i in range(100)]
        s = split_dataset(ids, seed=0)
        assert len(s.train_ids) == 80
        assert len(s.test_ids) == 20

    @pytest.mark.parametrize(
        "n,expected_train",
        [(5, 4), (6, 5), (7, 6), (8, 6), (9, 7), (10, 8), (11, 9), (12, 10), (13, 10)],
    )
    def test_rounded_train_size(self, n, expected_train):
        # integer-exact round(0.8 n): (4n)//5, +1 when remainder >= 3
        ids = [f"v{i}" for i in range(n)]
        s = split_dataset(ids, seed=1)
        assert len(s.train_ids) == expected_train
        assert len(s.test_ids) == n - expected_train

    def test_partition(self):
        ids = [f"v{i}" for i in range(37)]
        s = split_dataset(ids, seed=2)
        assert sorted(s.train_ids + s.test_ids) == sorted(ids)
        assert not set(s.train_ids) & set(s.test_ids)

    def test_deterministic(self):
        ids = [f"v{i}" for i in range(20)]
        a = split_dataset(ids, seed=3)
        b = split_dataset(list(reversed(ids)), seed=3)
        assert a == b  # input order must not matter

    def test_seed_changes_membership(self):
        ids = [f"v{i}" for i in range(50)]
        a = split_dataset(ids, seed=0)
        b = split_dataset(ids, seed=1)
        assert a.train_ids != b.train_ids

    def test_too_few(self):
        with pytest.raises(TooFewItems):
            split_dataset(["a", "b", "c", "d"], seed=0)

    def test_duplicate_ids_rejected(self):
        with pytest.raises(VqbenchError):
            split_dataset(["a", "a", "b", "c", "d"], seed=0)

    def test_ten_splits(self):
        ids = [f"v{i}" for i in range(10)]
        splits = ten_splits(ids)
        assert len(splits) == 10
        assert [s.seed for s in splits] == list(range(10))
        assert len({tuple(s.train_ids) for s in splits}) > 1

    @given(st.integers(min_value=5, max_value=200), st.integers(min_value=0, max_value=2**32))
    @settings(max_examples=40, deadline=None)
    def test_split_sizes_property(self, n, seed):
        ids = [f"v{i}" for i in range(n)]
        s = split_dataset(ids, seed=seed)
        assert len(s.train_ids) == (4 * n) // 5 + (1 if (4 * n) % 5 >= 3 else 0)
        assert len(s.train_ids) + len(s.test_ids) == n


class TestCheckpoint:
    def _params(self):
        rng = np.random.default_rng(7)
        return {
            "w1": rng.standard_normal((3, 4)).astype(np.float32),
            "b1": np.zeros(4, dtype=np.float32),
        }

    def test_round_trip_bit_exact(self, tmp_path):
        path = tmp_path / "ck.json"
        params = self._params()
        config = {"seed": 7, "token_dim": 32}
        save_checkpoint(str(path), params, config)
        loaded_params, loaded_config = load_checkpoint(str(path))
        assert loaded_config == config
        assert set(loaded_params) == set(params)
        for name in params:
            assert loaded_params[name].dtype == np.float32
            np.testing.assert_array_equal(loaded_params[name], params[name])

    def test_save_is_deterministic(self, tmp_path):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        params = self._params()
        save_checkpoint(str(p1), params, {"seed": 1})
        save_checkpoint(str(p2), params, {"seed": 1})
        assert p1.read_bytes() == p2.read_bytes()

    def test_format_version_checked(self, tmp_path):
        path = tmp_path / "ck.json"
        save_checkpoint(str(path), self._params(), {})
        doc = json.loads(path.read_text())
        doc["format_version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(VersionMismatch):
            load_checkpoint(str(path))

    def test_payload_length_checked(self, tmp_path):
        path = tmp_path / "ck.json"
        save_checkpoint(str(path), self._params(), {})
        doc = json.loads(path.read_text())
        doc["params"]["w1"]["shape"] = [3, 5]
        path.write_text(json.dumps(doc))
        with pytest.raises(ShapeMismatch):
            load_checkpoint(str(path))

    def test_expected_shapes_enforced(self, tmp_path):
        path = tmp_path / "ck.json"
        save_checkpoint(str(path), self._params(), {})
        with pytest.raises(ShapeMismatch):
            load_checkpoint(str(path), expected_shapes={"w1": (3, 4), "b1": (9,)})

    def test_missing_tensor_rejected(self, tmp_path):
        path = tmp_path / "ck.json"
        save_checkpoint(str(path), self._params(), {})
        with pytest.raises(ShapeMismatch):
            load_checkpoint(str(path), expected_shapes={"w1": (3, 4), "b1": (4,), "extra": (2,)})

    def test_corrupt_json_rejected(self, tmp_path):
        # content corruption is a validation failure, like BadMagic for AVF
        path = tmp_path / "ck.json"
        path.write_text("{not json")
        with pytest.raises(VqbenchError):
            load_checkpoint(str(path))
