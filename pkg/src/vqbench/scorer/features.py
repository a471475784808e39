"""Hand-crafted descriptors: patch statistics, frame diffs, hashed prompts.

All descriptors are parameter-free, so they can be computed once per clip
and cached across training; only the projections that consume them learn.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ShapeMismatch, VqbenchError
from ..taxonomy import tokenize

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


class TooFewFrames(VqbenchError):
    """Temporal descriptors need at least three frames."""


@dataclass
class FeatureBundle:
    """Cached per-clip descriptors, independent of model parameters."""

    spatial: np.ndarray  # (T, patch_grid^2 * 6)
    fast_mean: np.ndarray  # (6,) mean over fast frame diffs
    slow_mean: np.ndarray  # (6,) mean over slow frame-pair diffs
    prompt: np.ndarray  # (prompt_buckets,) bucket histogram


@dataclass
class BatchFeatures:
    spatial: np.ndarray  # (B, T, D_s)
    fast_mean: np.ndarray  # (B, 6)
    slow_mean: np.ndarray  # (B, 6)
    prompt: np.ndarray  # (B, K)

    def __len__(self) -> int:
        return self.spatial.shape[0]

    def subset(self, idx) -> "BatchFeatures":
        return BatchFeatures(
            self.spatial[idx], self.fast_mean[idx], self.slow_mean[idx], self.prompt[idx]
        )


def _check_frames(frames: np.ndarray) -> None:
    if frames.ndim != 4 or frames.shape[3] != 3:
        raise ShapeMismatch(f"frames must have shape (T, H, W, 3), got {frames.shape}")


def spatial_descriptors(frames: np.ndarray, patch_grid: int = 8) -> np.ndarray:
    """Per-frame patch statistics.

    The frame is cut into patch_grid x patch_grid cells; each cell
    contributes mean and population stddev per channel, laid out
    row-major by cell, then channel, then (mean, std).
    """
    _check_frames(frames)
    t, h, w, _ = frames.shape
    g = patch_grid
    if h % g or w % g:
        raise ShapeMismatch(f"frame size {h}x{w} not divisible by patch grid {g}")
    cells = frames.reshape(t, g, h // g, g, w // g, 3)
    means = cells.mean(axis=(2, 4))
    sq = (cells * cells).mean(axis=(2, 4))
    stds = np.sqrt(np.maximum(sq - means * means, 0.0))
    return np.stack([means, stds], axis=-1).reshape(t, g * g * 6)


def temporal_descriptors(frames: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fast (adjacent) and slow (two-apart, even anchors) diff statistics.

    Each diff contributes per channel its mean absolute value and the
    population stddev of the signed values, interleaved per channel.
    """
    _check_frames(frames)
    t = frames.shape[0]
    if t < 3:
        raise TooFewFrames(f"need at least 3 frames for temporal descriptors, got {t}")

    def describe(diffs: np.ndarray) -> np.ndarray:
        mean_abs = np.abs(diffs).mean(axis=(1, 2))  # (n, 3)
        stds = diffs.std(axis=(1, 2))  # population
        return np.stack([mean_abs, stds], axis=-1).reshape(diffs.shape[0], 6)

    fast = frames[1:] - frames[:-1]
    k = (t - 1) // 2
    slow = frames[2 : 2 * k + 1 : 2] - frames[0 : 2 * k - 1 : 2]
    return describe(fast), describe(slow)


def fnv1a64(data: str | bytes) -> int:
    """64-bit FNV-1a hash; str input is hashed as UTF-8."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


def prompt_histogram(text: str, buckets: int = 64) -> np.ndarray:
    """Average of one-hot bucket vectors over the prompt's tokens.

    Tokens hash with FNV-1a into one of ``buckets`` bins; an empty prompt
    maps to the zero vector.
    """
    hist = np.zeros(buckets, dtype=np.float64)
    tokens = tokenize(text)
    if not tokens:
        return hist
    for tok in tokens:
        hist[fnv1a64(tok) % buckets] += 1.0
    return hist / len(tokens)


def concept_histogram(concept_id: int, buckets: int = 64) -> np.ndarray:
    """Synthetic-concept bypass: concept k maps straight to bucket k."""
    if not 0 <= concept_id < buckets:
        raise VqbenchError(f"concept_id must be in [0, {buckets}), got {concept_id}")
    hist = np.zeros(buckets, dtype=np.float64)
    hist[concept_id] = 1.0
    return hist


def extract_features(
    frames: np.ndarray,
    config,
    prompt: str | None = None,
    concept_id: int | None = None,
) -> FeatureBundle:
    """Full descriptor bundle for one clip plus its prompt.

    ``config`` is a ScorerConfig; its patch_grid/prompt_buckets keep the
    descriptors aligned with the parameter shapes. Exactly one of
    ``prompt``/``concept_id`` may be given; with neither, the prompt
    channel is the zero vector.
    """
    if prompt is not None and concept_id is not None:
        raise VqbenchError("give a prompt or a concept_id, not both")
    spatial = spatial_descriptors(frames, config.patch_grid)
    fast, slow = temporal_descriptors(frames)
    if concept_id is not None:
        hist = concept_histogram(concept_id, config.prompt_buckets)
    elif prompt is not None:
        hist = prompt_histogram(prompt, config.prompt_buckets)
    else:
        hist = np.zeros(config.prompt_buckets, dtype=np.float64)
    return FeatureBundle(spatial, fast.mean(axis=0), slow.mean(axis=0), hist)


def stack_features(bundles: Sequence[FeatureBundle]) -> BatchFeatures:
    if not bundles:
        raise VqbenchError("cannot stack zero feature bundles")
    return BatchFeatures(
        np.stack([b.spatial for b in bundles]),
        np.stack([b.fast_mean for b in bundles]),
        np.stack([b.slow_mean for b in bundles]),
        np.stack([b.prompt for b in bundles]),
    )
