"""Analytic gradients for the three training stages.

Each stage returns a gradient dict covering every parameter tensor, with
exact zeros for tensors the stage does not train. In stage 3 the loss
does read the backbone (through the hidden states), but the backbone is
frozen by design; its entries stay zero on purpose, not by vanishing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import VqbenchError
from .config import N_DIMENSIONS, N_LEVELS, ScorerConfig
from .features import BatchFeatures
from .forward import ForwardCache, forward, gelu_grad, sigmoid, _logsumexp
from .params import param_shapes


class StageDisabled(VqbenchError):
    """The requested stage is switched off by the configuration."""


@dataclass
class Stage1Batch:
    features: BatchFeatures
    levels: np.ndarray  # (B, 4) ints in 0..4


@dataclass
class Stage2Batch:
    features: BatchFeatures
    scores: np.ndarray  # (B, 4) floats in [0, 100]


@dataclass
class Stage3Batch:
    features_a: BatchFeatures
    features_b: BatchFeatures
    labels: np.ndarray  # (B, 4) 1.0 where a is preferred
    mask: np.ndarray  # (B, 4) False inside the near-tie dead zone


def _zero_grads(config: ScorerConfig) -> dict[str, np.ndarray]:
    return {name: np.zeros(shape, dtype=np.float64) for name, shape in param_shapes(config).items()}


def _backbone_backward(
    p: dict[str, np.ndarray],
    config: ScorerConfig,
    cache: ForwardCache,
    dhidden: np.ndarray,
    grads: dict[str, np.ndarray],
) -> None:
    """Accumulate gradients from dL/dhidden back to the projections."""
    w1 = np.asarray(p["w1"], dtype=np.float64)
    dpre = dhidden * gelu_grad(cache.pre)
    grads["w1"] += cache.fused.T @ dpre
    grads["b1"] += dpre.sum(axis=0)
    dfused = dpre @ w1.T

    k = config.token_dim
    du_s = dfused[:, 0:k]
    du_t = dfused[:, k : 2 * k]
    dp_vec = dfused[:, 2 * k : 3 * k]
    du_pool = dfused[:, 3 * k :]

    b, t, _ = cache.tokens.shape
    dtokens = np.broadcast_to(du_s[:, None, :] / t, (b, t, k)).copy()
    # route the max-pool gradient to the winning frame of each channel;
    # the (batch, frame, channel) triples are distinct, so += is safe
    bidx = np.arange(b)[:, None]
    jidx = np.arange(k)[None, :]
    dtokens[bidx, cache.argmax_t, jidx] += du_pool
    grads["p_s"] += np.einsum("bti,btj->ij", cache.spatial, dtokens)

    if config.use_temporal:
        grads["p_tf"] += cache.fast_mean.T @ (0.5 * du_t)
        grads["p_ts"] += cache.slow_mean.T @ (0.5 * du_t)
    grads["e_p"] += cache.prompt.T @ dp_vec


def _grads_stage1(
    params: dict[str, np.ndarray], config: ScorerConfig, batch: Stage1Batch
) -> tuple[float, dict[str, np.ndarray]]:
    if not config.use_level_stage:
        raise StageDisabled("stage 1 is disabled (use_level_stage is off)")
    grads = _zero_grads(config)
    cache = forward(params, config, batch.features, want_cache=True)
    logits = cache.output.level_logits  # (B, 4, 5)
    levels = np.asarray(batch.levels, dtype=np.int64)
    bsz = logits.shape[0]
    lse = _logsumexp(logits)
    picked = np.take_along_axis(logits, levels[..., None], axis=-1).squeeze(-1)
    loss = float((lse - picked).mean())

    softmax = np.exp(logits - lse[..., None])
    onehot = np.zeros_like(softmax)
    np.put_along_axis(onehot, levels[..., None], 1.0, axis=-1)
    dlogits = (softmax - onehot) / (bsz * N_DIMENSIONS)
    dflat = dlogits.reshape(bsz, N_DIMENSIONS * N_LEVELS)
    grads["w_l"] += cache.hidden.T @ dflat
    grads["b_l"] += dflat.sum(axis=0)
    dhidden = dflat @ np.asarray(params["w_l"], dtype=np.float64).T
    _backbone_backward(params, config, cache, dhidden, grads)
    return loss, grads


def _grads_stage2(
    params: dict[str, np.ndarray], config: ScorerConfig, batch: Stage2Batch
) -> tuple[float, dict[str, np.ndarray]]:
    grads = _zero_grads(config)
    cache = forward(params, config, batch.features, want_cache=True)
    pred = cache.output.scores
    gt = np.asarray(batch.scores, dtype=np.float64)
    bsz = pred.shape[0]
    diff = pred - gt
    loss = float(np.abs(diff).mean())
    dscores = np.sign(diff) / (bsz * N_DIMENSIONS)
    grads["w_r"] += cache.hidden.T @ dscores
    grads["b_r"] += dscores.sum(axis=0)
    if config.finetune_encoders_stage2:
        dhidden = dscores @ np.asarray(params["w_r"], dtype=np.float64).T
        _backbone_backward(params, config, cache, dhidden, grads)
    return loss, grads


def _grads_stage3(
    params: dict[str, np.ndarray], config: ScorerConfig, batch: Stage3Batch
) -> tuple[float, dict[str, np.ndarray]]:
    grads = _zero_grads(config)
    out_a = forward(params, config, batch.features_a)
    out_b = forward(params, config, batch.features_b)
    u1 = np.asarray(params["u1"], dtype=np.float64)
    u2 = np.asarray(params["u2"], dtype=np.float64)
    delta = out_a.hidden - out_b.hidden
    z = np.tanh(delta @ u1)
    logits = z @ u2
    y = np.asarray(batch.labels, dtype=np.float64)
    mask = np.asarray(batch.mask, dtype=bool)
    n = int(mask.sum())
    if n == 0:
        raise VqbenchError("all pair entries are masked out; loss undefined")
    per = np.maximum(logits, 0.0) - logits * y + np.log1p(np.exp(-np.abs(logits)))
    loss = float(per[mask].sum() / n)
    dlogits = (sigmoid(logits) - y) * mask / n
    grads["u2"] += z.T @ dlogits
    dz = dlogits @ u2.T
    da = dz * (1.0 - z * z)
    grads["u1"] += delta.T @ da
    return loss, grads


def stage_gradients(
    params: dict[str, np.ndarray],
    config: ScorerConfig,
    stage: int,
    batch: Stage1Batch | Stage2Batch | Stage3Batch,
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and full gradient dict for one batch of one training stage."""
    if stage == 1:
        if not isinstance(batch, Stage1Batch):
            raise VqbenchError("stage 1 needs a Stage1Batch")
        return _grads_stage1(params, config, batch)
    if stage == 2:
        if not isinstance(batch, Stage2Batch):
            raise VqbenchError("stage 2 needs a Stage2Batch")
        return _grads_stage2(params, config, batch)
    if stage == 3:
        if not isinstance(batch, Stage3Batch):
            raise VqbenchError("stage 3 needs a Stage3Batch")
        return _grads_stage3(params, config, batch)
    raise VqbenchError(f"stage must be 1, 2 or 3, got {stage}")
