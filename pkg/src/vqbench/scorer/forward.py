"""Forward pass, pair judge, quality-level binning, and the three losses.

The sigmoid is written as 0.5*(1 + tanh(x/2)). tanh is odd to the last
bit in IEEE arithmetic, so the judge's preference probabilities satisfy
p(a, b) + p(b, a) == 1.0 exactly, not merely within rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from ..errors import VqbenchError
from .config import N_DIMENSIONS, N_LEVELS, ScorerConfig
from .features import BatchFeatures, FeatureBundle, stack_features

LEVEL_NAMES = ("bad", "poor", "fair", "good", "excellent")

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


class OutOfRange(VqbenchError):
    """A mean opinion score outside [0, 100] cannot be binned."""


@dataclass
class ScorerOutput:
    scores: np.ndarray  # (B, 4)
    level_logits: np.ndarray  # (B, 4, 5)
    hidden: np.ndarray  # (B, hidden_dim)


@dataclass
class ForwardCache:
    """Intermediates the backward pass needs."""

    spatial: np.ndarray
    fast_mean: np.ndarray
    slow_mean: np.ndarray
    prompt: np.ndarray
    tokens: np.ndarray  # (B, T, token_dim)
    argmax_t: np.ndarray  # (B, token_dim) frame index of the max token entry
    fused: np.ndarray  # (B, 4*token_dim)
    pre: np.ndarray  # (B, hidden_dim) pre-activation
    hidden: np.ndarray
    output: ScorerOutput


def gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x * _INV_SQRT2))


def gelu_grad(x: np.ndarray) -> np.ndarray:
    phi = np.exp(-0.5 * x * x) * _INV_SQRT2PI
    return 0.5 * (1.0 + erf(x * _INV_SQRT2)) + x * phi


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _as_f64(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}


def forward(
    params: dict[str, np.ndarray],
    config: ScorerConfig,
    features: BatchFeatures | FeatureBundle,
    want_cache: bool = False,
) -> ScorerOutput | ForwardCache:
    """Run the scorer on a batch (or single bundle) of cached descriptors."""
    if isinstance(features, FeatureBundle):
        features = stack_features([features])
    p = _as_f64(params)
    spatial = np.asarray(features.spatial, dtype=np.float64)
    fast_mean = np.asarray(features.fast_mean, dtype=np.float64)
    slow_mean = np.asarray(features.slow_mean, dtype=np.float64)
    prompt = np.asarray(features.prompt, dtype=np.float64)

    tokens = spatial @ p["p_s"]  # (B, T, token_dim)
    u_s = tokens.mean(axis=1)
    u_pool = tokens.max(axis=1)
    argmax_t = tokens.argmax(axis=1)
    if config.use_temporal:
        u_t = 0.5 * (fast_mean @ p["p_tf"] + slow_mean @ p["p_ts"])
    else:
        u_t = np.zeros_like(u_s)
    prompt_vec = prompt @ p["e_p"]
    fused = np.concatenate([u_s, u_t, prompt_vec, u_pool], axis=1)
    pre = fused @ p["w1"] + p["b1"]
    hidden = gelu(pre)
    level_logits = (hidden @ p["w_l"] + p["b_l"]).reshape(-1, N_DIMENSIONS, N_LEVELS)
    scores = hidden @ p["w_r"] + p["b_r"]
    output = ScorerOutput(scores, level_logits, hidden)
    if not want_cache:
        return output
    return ForwardCache(
        spatial, fast_mean, slow_mean, prompt, tokens, argmax_t, fused, pre, hidden, output
    )


def judge_pair(
    params: dict[str, np.ndarray], hidden_a: np.ndarray, hidden_b: np.ndarray
) -> np.ndarray:
    """Preference probabilities that clip a beats clip b, per dimension."""
    logits = judge_logits(params, hidden_a, hidden_b)
    return sigmoid(logits)


def judge_logits(
    params: dict[str, np.ndarray], hidden_a: np.ndarray, hidden_b: np.ndarray
) -> np.ndarray:
    u1 = np.asarray(params["u1"], dtype=np.float64)
    u2 = np.asarray(params["u2"], dtype=np.float64)
    delta = np.asarray(hidden_a, dtype=np.float64) - np.asarray(hidden_b, dtype=np.float64)
    return np.tanh(delta @ u1) @ u2


def mos_to_level(mos: float) -> int:
    """Bin a [0, 100] score into five equal levels; 100 stays `excellent`."""
    if not 0.0 <= mos <= 100.0:
        raise OutOfRange(f"score {mos} outside [0, 100]")
    return min(int(mos // 20.0), N_LEVELS - 1)


def _logsumexp(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=-1, keepdims=True)
    return (m + np.log(np.exp(logits - m).sum(axis=-1, keepdims=True))).squeeze(-1)


def loss_language(level_logits: np.ndarray, gt_levels: np.ndarray) -> float:
    """Mean softmax cross-entropy over dimensions (and batch)."""
    logits = np.asarray(level_logits, dtype=np.float64)
    levels = np.asarray(gt_levels, dtype=np.int64)
    if logits.ndim == 2:
        logits = logits[None]
        levels = levels[None]
    lse = _logsumexp(logits)  # (B, 4)
    picked = np.take_along_axis(logits, levels[..., None], axis=-1).squeeze(-1)
    return float((lse - picked).mean())


def loss_mos(pred_scores: np.ndarray, gt_scores: np.ndarray) -> float:
    """Mean absolute error over all scores."""
    return float(np.abs(np.asarray(pred_scores, float) - np.asarray(gt_scores, float)).mean())


def loss_pairs(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Mean binary cross-entropy of preference logits against 0/1 labels.

    Entries where ``mask`` is False (near-tie dead zone) are excluded
    from the mean.
    """
    x = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    # stable: max(x,0) - x*y + log(1 + exp(-|x|))
    per = np.maximum(x, 0.0) - x * y + np.log1p(np.exp(-np.abs(x)))
    if mask is None:
        return float(per.mean())
    m = np.asarray(mask, dtype=bool)
    n = int(m.sum())
    if n == 0:
        raise VqbenchError("all pair entries are masked out; loss undefined")
    return float(per[m].sum() / n)
