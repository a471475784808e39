"""On-disk formats: raw video files, dataset splits, model checkpoints.

The video container is deliberately trivial: a 22-byte header (magic
"AVF1", u16 version, u32 frame count/height/width, f32 fps, all
little-endian) followed by interleaved RGB bytes. Checkpoints are JSON
with base64-encoded little-endian float32 tensors, so a round trip is
bit-exact and diffs stay readable.
"""

from __future__ import annotations

import base64
import json
import os
import struct
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ShapeMismatch, VqbenchError

AVF_MAGIC = b"AVF1"
AVF_VERSION = 1
AVF_HEADER = struct.Struct("<4sHIIIf")
assert AVF_HEADER.size == 22

CHECKPOINT_VERSION = 1


class BadMagic(VqbenchError):
    """The file does not start with the AVF magic."""


class TruncatedPayload(VqbenchError):
    """Payload size does not match the header's T*H*W*3."""


class VersionMismatch(VqbenchError):
    """File format version is not supported."""


class TooFewItems(VqbenchError):
    """Not enough ids to split into non-empty train/test parts."""


class IoFailure(OSError):
    """An underlying filesystem operation failed."""


@dataclass
class VideoTensor:
    """Frames as float64 in [0, 1], shape (T, H, W, 3), plus a frame rate."""

    frames: np.ndarray
    fps: float

    def __post_init__(self):
        f = self.frames
        if f.ndim != 4 or f.shape[3] != 3:
            raise ShapeMismatch(f"frames must have shape (T, H, W, 3), got {f.shape}")
        if f.shape[0] < 2:
            raise ShapeMismatch(f"need at least 2 frames, got {f.shape[0]}")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.frames.shape


def quantize_frames(frames: np.ndarray) -> np.ndarray:
    """[0, 1] floats to uint8 with round-half-up."""
    return np.clip(np.floor(frames * 255.0 + 0.5), 0, 255).astype(np.uint8)


def _atomic_write(path: str, payload: bytes) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            if os.path.exists(tmp):
                os.remove(tmp)
        except OSError:
            pass
        raise IoFailure(f"failed to write {path}: {exc}") from exc


def write_avf(path: str, video: VideoTensor) -> None:
    t, h, w, _ = video.frames.shape
    header = AVF_HEADER.pack(AVF_MAGIC, AVF_VERSION, t, h, w, float(video.fps))
    _atomic_write(path, header + quantize_frames(video.frames).tobytes())


def read_avf(path: str) -> VideoTensor:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoFailure(f"failed to read {path}: {exc}") from exc
    if blob[:4] != AVF_MAGIC:
        raise BadMagic(f"{path} is not an AVF file")
    if len(blob) < AVF_HEADER.size:
        raise TruncatedPayload(f"{path}: {len(blob)} bytes is too short for the header")
    magic, version, t, h, w, fps = AVF_HEADER.unpack_from(blob)
    if version != AVF_VERSION:
        raise VersionMismatch(f"{path}: AVF version {version} unsupported (expected {AVF_VERSION})")
    expected = t * h * w * 3
    payload = blob[AVF_HEADER.size :]
    if len(payload) != expected:
        raise TruncatedPayload(f"{path}: payload is {len(payload)} bytes, header implies {expected}")
    frames = np.frombuffer(payload, dtype=np.uint8).reshape(t, h, w, 3).astype(np.float64) / 255.0
    return VideoTensor(frames, float(fps))


@dataclass(frozen=True)
class SplitSpec:
    """One deterministic 4:1 partition of a set of ids."""

    seed: int
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]


def split_dataset(ids: Sequence[str], seed: int) -> SplitSpec:
    """Seeded shuffle of sorted ids, then an 80/20 cut.

    The train size is round(0.8*n) computed in integer arithmetic, so the
    cut never depends on float rounding.
    """
    n = len(ids)
    if n < 5:
        raise TooFewItems(f"need at least 5 ids to split 4:1, got {n}")
    if len(set(ids)) != n:
        raise VqbenchError("ids must be unique")
    pool = sorted(ids)
    from .rng import Xorshift64Star

    Xorshift64Star(seed).shuffle(pool)
    n_train = (4 * n) // 5 + (1 if (4 * n) % 5 >= 3 else 0)
    return SplitSpec(seed, tuple(pool[:n_train]), tuple(pool[n_train:]))


def ten_splits(ids: Sequence[str]) -> list[SplitSpec]:
    """The ten conventional splits, seeds 0..9."""
    return [split_dataset(ids, seed) for seed in range(10)]


def save_checkpoint(path: str, params: Mapping[str, np.ndarray], config: Mapping) -> None:
    """Write params (as little-endian float32) and config to JSON."""
    blob = {
        "format_version": CHECKPOINT_VERSION,
        "config": dict(config),
        "params": {
            name: {
                "shape": list(tensor.shape),
                "data": base64.b64encode(np.ascontiguousarray(tensor, dtype="<f4").tobytes()).decode(),
            }
            for name, tensor in params.items()
        },
    }
    _atomic_write(path, json.dumps(blob, indent=2, sort_keys=True).encode())


def load_checkpoint(
    path: str, expected_shapes: Mapping[str, tuple[int, ...]] | None = None
) -> tuple[dict[str, np.ndarray], dict]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            blob = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"failed to read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise VqbenchError(f"{path} is not valid checkpoint JSON: {exc}")
    version = blob.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise VersionMismatch(f"{path}: checkpoint version {version} unsupported (expected {CHECKPOINT_VERSION})")
    params: dict[str, np.ndarray] = {}
    for name, entry in blob["params"].items():
        shape = tuple(entry["shape"])
        raw = base64.b64decode(entry["data"])
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        if len(raw) != 4 * count:
            raise ShapeMismatch(f"{path}: tensor {name!r} has {len(raw)} bytes, shape {shape} needs {4 * count}")
        params[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
    if expected_shapes is not None:
        if set(params) != set(expected_shapes):
            raise ShapeMismatch(
                f"{path}: tensor names {sorted(params)} do not match expected {sorted(expected_shapes)}"
            )
        for name, shape in expected_shapes.items():
            if params[name].shape != tuple(shape):
                raise ShapeMismatch(
                    f"{path}: tensor {name!r} has shape {params[name].shape}, expected {tuple(shape)}"
                )
    return params, blob["config"]
