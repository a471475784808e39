"""Parameter tensors: shapes, initialization, per-stage training groups.

Parameters live as float32 arrays (the checkpoint format is float32, so
keeping them float32 in memory makes save/load round trips bit-exact);
all arithmetic on them happens in float64.
"""

from __future__ import annotations

import numpy as np

from ..rng import derive_seed, uniform_field
from .config import N_DIMENSIONS, N_LEVELS, ScorerConfig

PARAM_ORDER = ("p_s", "p_tf", "p_ts", "e_p", "w1", "b1", "w_l", "b_l", "w_r", "b_r", "u1", "u2")

_INIT_SALT = 0x1A17


def param_shapes(config: ScorerConfig) -> dict[str, tuple[int, ...]]:
    return {
        "p_s": (config.spatial_dim, config.token_dim),
        "p_tf": (config.temporal_dim, config.token_dim),
        "p_ts": (config.temporal_dim, config.token_dim),
        "e_p": (config.prompt_buckets, config.token_dim),
        "w1": (config.fused_dim, config.hidden_dim),
        "b1": (config.hidden_dim,),
        "w_l": (config.hidden_dim, N_DIMENSIONS * N_LEVELS),
        "b_l": (N_DIMENSIONS * N_LEVELS,),
        "w_r": (config.hidden_dim, N_DIMENSIONS),
        "b_r": (N_DIMENSIONS,),
        "u1": (config.hidden_dim, config.judge_dim),
        "u2": (config.judge_dim, N_DIMENSIONS),
    }


def init_params(config: ScorerConfig) -> dict[str, np.ndarray]:
    """Deterministic init: Glorot uniform matrices, zero biases.

    The regression bias starts at 50, the midpoint of the score scale,
    so early training is not spent walking the bias across [0, 100].
    """
    params: dict[str, np.ndarray] = {}
    for index, name in enumerate(PARAM_ORDER):
        shape = param_shapes(config)[name]
        if len(shape) == 1:
            tensor = np.zeros(shape, dtype=np.float64)
            if name == "b_r":
                tensor += 50.0
        else:
            fan_in, fan_out = shape
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            u = uniform_field(derive_seed(config.seed, _INIT_SALT, index), shape)
            tensor = (2.0 * u - 1.0) * limit
        params[name] = tensor.astype(np.float32)
    return params


def stage_param_names(config: ScorerConfig, stage: int) -> tuple[str, ...]:
    """Names of the tensors a training stage updates."""
    if stage == 1:
        return ("p_s", "p_tf", "p_ts", "e_p", "w1", "b1", "w_l", "b_l")
    if stage == 2:
        if config.finetune_encoders_stage2:
            return ("w_r", "b_r", "p_s", "p_tf", "p_ts", "e_p", "w1", "b1")
        return ("w_r", "b_r")
    if stage == 3:
        return ("u1", "u2")
    raise ValueError(f"stage must be 1, 2 or 3, got {stage}")
