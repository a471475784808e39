"""Three-stage training driver with momentum SGD.

Stage 1 fits the quality-level head (and everything under it) with
cross-entropy; stage 2 fits the score regression head with mean absolute
error, optionally fine-tuning the projections; stage 3 fits the pairwise
judge on preference pairs with the backbone frozen. Every shuffle and
sample draws from the seeded generator, so a (config, dataset) pair
always trains to bit-identical parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import VqbenchError
from ..rng import Xorshift64Star, derive_seed
from .config import ScorerConfig
from .features import BatchFeatures, FeatureBundle, stack_features
from .forward import forward, mos_to_level
from .grads import Stage1Batch, Stage2Batch, Stage3Batch, StageDisabled, stage_gradients
from .params import init_params, stage_param_names

_SHUFFLE_SALT = 0x5BFF1E
_PAIR_SALT = 0x9A125


class EmptyDataset(VqbenchError):
    """Training needs at least one labeled clip."""


@dataclass
class LabeledClip:
    """One training example: cached descriptors plus ground truth."""

    clip_id: str
    features: FeatureBundle
    gt_scores: np.ndarray  # (4,) floats in [0, 100]
    gt_levels: np.ndarray | None = None  # (4,) ints; derived from scores if absent

    def levels(self) -> np.ndarray:
        if self.gt_levels is not None:
            return np.asarray(self.gt_levels, dtype=np.int64)
        return np.asarray([mos_to_level(float(s)) for s in self.gt_scores], dtype=np.int64)


@dataclass
class PreferencePair:
    index_a: int
    index_b: int
    labels: np.ndarray  # (4,) 1.0 where clip a has the higher ground truth
    mask: np.ndarray  # (4,) False inside the dead zone


@dataclass
class TrainResult:
    params: dict[str, np.ndarray]
    log: list[dict] = field(default_factory=list)


def build_preference_pairs(
    clips: list[LabeledClip], n_pairs: int, seed: int, dead_zone: float = 2.0
) -> list[PreferencePair]:
    """Sample preference pairs from all unordered clip pairs.

    Per dimension, the clip with the higher ground-truth score is
    preferred; dimensions with a score gap below ``dead_zone`` are masked
    out of the loss as near-ties.
    """
    n = len(clips)
    candidates = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if n_pairs > len(candidates):
        raise VqbenchError(f"cannot sample {n_pairs} pairs from {len(candidates)} candidates")
    chosen = Xorshift64Star(seed).sample(candidates, n_pairs)
    pairs = []
    for i, j in chosen:
        gap = np.asarray(clips[i].gt_scores, float) - np.asarray(clips[j].gt_scores, float)
        pairs.append(PreferencePair(i, j, (gap > 0).astype(np.float64), np.abs(gap) >= dead_zone))
    return pairs


def _epoch_order(n: int, config: ScorerConfig, stage: int, epoch: int) -> list[int]:
    order = list(range(n))
    Xorshift64Star(derive_seed(config.seed, _SHUFFLE_SALT, stage, epoch)).shuffle(order)
    return order


def _sgd_step(
    params: dict[str, np.ndarray],
    velocity: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    names: tuple[str, ...],
    lr: float,
    momentum: float,
) -> None:
    for name in names:
        velocity[name] = momentum * velocity[name] - lr * grads[name]
        params[name] = (params[name].astype(np.float64) + velocity[name]).astype(np.float32)


def train(
    clips: list[LabeledClip],
    config: ScorerConfig,
    params: dict[str, np.ndarray] | None = None,
    stages: tuple[int, ...] = (1, 2, 3),
) -> TrainResult:
    """Run the requested stages in order and return trained parameters.

    With ``use_level_stage`` off, requesting stage 1 raises StageDisabled;
    ablation runs pass stages (2, 3) instead.
    """
    if not clips:
        raise EmptyDataset("no training clips")
    if 1 in stages and not config.use_level_stage:
        raise StageDisabled("stage 1 requested but use_level_stage is off")
    if params is None:
        params = init_params(config)
    else:
        params = {k: np.asarray(v, dtype=np.float32).copy() for k, v in params.items()}

    all_features = stack_features([c.features for c in clips])
    gt_scores = np.stack([np.asarray(c.gt_scores, dtype=np.float64) for c in clips])
    gt_levels = np.stack([c.levels() for c in clips])

    log: list[dict] = []
    for stage in sorted(stages):
        if stage == 1:
            _run_scalar_stage(params, config, all_features, gt_levels, stage, log)
        elif stage == 2:
            _run_scalar_stage(params, config, all_features, gt_scores, stage, log)
        elif stage == 3:
            _run_pair_stage(params, config, clips, all_features, stage, log)
        else:
            raise VqbenchError(f"unknown stage {stage}")
    return TrainResult(params, log)


def _stage_settings(config: ScorerConfig, stage: int) -> tuple[int, float]:
    return (
        (config.epochs_stage1, config.lr_stage1)
        if stage == 1
        else (config.epochs_stage2, config.lr_stage2)
        if stage == 2
        else (config.epochs_stage3, config.lr_stage3)
    )


def _run_scalar_stage(
    params: dict[str, np.ndarray],
    config: ScorerConfig,
    features: BatchFeatures,
    targets: np.ndarray,
    stage: int,
    log: list[dict],
) -> None:
    epochs, lr = _stage_settings(config, stage)
    names = stage_param_names(config, stage)
    velocity = {name: np.zeros(params[name].shape, dtype=np.float64) for name in names}
    n = len(features)
    for epoch in range(epochs):
        order = _epoch_order(n, config, stage, epoch)
        total = 0.0
        for lo in range(0, n, config.batch_size):
            idx = order[lo : lo + config.batch_size]
            sub = features.subset(idx)
            if stage == 1:
                batch = Stage1Batch(sub, targets[idx])
            else:
                batch = Stage2Batch(sub, targets[idx])
            loss, grads = stage_gradients(params, config, stage, batch)
            _sgd_step(params, velocity, grads, names, lr, config.momentum)
            total += loss * len(idx)
        log.append({"stage": stage, "epoch": epoch, "loss": total / n})


def _run_pair_stage(
    params: dict[str, np.ndarray],
    config: ScorerConfig,
    clips: list[LabeledClip],
    features: BatchFeatures,
    stage: int,
    log: list[dict],
) -> None:
    epochs, lr = _stage_settings(config, stage)
    names = stage_param_names(config, stage)
    velocity = {name: np.zeros(params[name].shape, dtype=np.float64) for name in names}
    pairs = build_preference_pairs(
        clips, min(config.stage3_pairs, len(clips) * (len(clips) - 1) // 2),
        derive_seed(config.seed, _PAIR_SALT), config.dead_zone,
    )
    pairs = [p for p in pairs if p.mask.any()]
    if not pairs:
        raise VqbenchError("no usable preference pairs outside the dead zone")
    # the backbone is frozen here, so hidden states can be computed once
    hidden = forward(params, config, features).hidden
    labels = np.stack([p.labels for p in pairs])
    masks = np.stack([p.mask for p in pairs])
    ia = np.asarray([p.index_a for p in pairs])
    ib = np.asarray([p.index_b for p in pairs])
    n = len(pairs)
    for epoch in range(epochs):
        order = _epoch_order(n, config, stage, epoch)
        total = 0.0
        count = 0
        for lo in range(0, n, config.batch_size):
            idx = order[lo : lo + config.batch_size]
            loss, grads = _judge_step_grads(
                params, config, hidden[ia[idx]], hidden[ib[idx]], labels[idx], masks[idx]
            )
            _sgd_step(params, velocity, grads, names, lr, config.momentum)
            k = int(masks[idx].sum())
            total += loss * k
            count += k
        log.append({"stage": stage, "epoch": epoch, "loss": total / count})


def _judge_step_grads(params, config, hidden_a, hidden_b, labels, mask):
    """Judge-only gradients on precomputed hidden states."""
    from .forward import sigmoid

    u1 = np.asarray(params["u1"], dtype=np.float64)
    u2 = np.asarray(params["u2"], dtype=np.float64)
    delta = hidden_a - hidden_b
    z = np.tanh(delta @ u1)
    logits = z @ u2
    y = np.asarray(labels, dtype=np.float64)
    m = np.asarray(mask, dtype=bool)
    nm = int(m.sum())
    if nm == 0:
        raise VqbenchError("batch has no usable pair entries")
    per = np.maximum(logits, 0.0) - logits * y + np.log1p(np.exp(-np.abs(logits)))
    loss = float(per[m].sum() / nm)
    dlogits = (sigmoid(logits) - y) * m / nm
    grads = {
        "u2": z.T @ dlogits,
        "u1": delta.T @ ((dlogits @ u2.T) * (1.0 - z * z)),
    }
    return loss, grads


def predict_scores(
    params: dict[str, np.ndarray], config: ScorerConfig, features: BatchFeatures
) -> np.ndarray:
    """Predicted per-dimension scores for a batch, shape (B, 4)."""
    return forward(params, config, features).scores


def stage3_batch_from_pairs(
    features: BatchFeatures, pairs: list[PreferencePair]
) -> Stage3Batch:
    """Assemble a Stage3Batch (used by the gradient checker and tests)."""
    ia = [p.index_a for p in pairs]
    ib = [p.index_b for p in pairs]
    return Stage3Batch(
        features.subset(ia),
        features.subset(ib),
        np.stack([p.labels for p in pairs]),
        np.stack([p.mask for p in pairs]),
    )
