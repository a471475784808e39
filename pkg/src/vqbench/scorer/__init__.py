"""A small deterministic four-dimension video quality scorer.

Hand-crafted per-patch and frame-difference descriptors are projected
into a shared token space, fused with a hashed prompt embedding, and fed
to a one-hidden-layer head that emits per-dimension quality scores,
five-way quality-level logits, and (through a separate judge head)
pairwise preference probabilities. Training runs in three stages:
quality levels, score regression, pairwise judge.
"""

from .config import ScorerConfig
from .features import (
    FeatureBundle,
    concept_histogram,
    extract_features,
    fnv1a64,
    prompt_histogram,
    spatial_descriptors,
    stack_features,
    temporal_descriptors,
)
from .forward import (
    LEVEL_NAMES,
    OutOfRange,
    ScorerOutput,
    forward,
    judge_pair,
    loss_language,
    loss_mos,
    loss_pairs,
    mos_to_level,
    sigmoid,
)
from .grads import stage_gradients
from .params import PARAM_ORDER, init_params, param_shapes, stage_param_names
from .train import (
    EmptyDataset,
    LabeledClip,
    StageDisabled,
    TrainResult,
    build_preference_pairs,
    predict_scores,
    train,
)

__all__ = [
    "ScorerConfig",
    "FeatureBundle",
    "concept_histogram",
    "extract_features",
    "fnv1a64",
    "prompt_histogram",
    "spatial_descriptors",
    "stack_features",
    "temporal_descriptors",
    "LEVEL_NAMES",
    "OutOfRange",
    "ScorerOutput",
    "forward",
    "judge_pair",
    "loss_language",
    "loss_mos",
    "loss_pairs",
    "mos_to_level",
    "sigmoid",
    "stage_gradients",
    "PARAM_ORDER",
    "init_params",
    "param_shapes",
    "stage_param_names",
    "EmptyDataset",
    "LabeledClip",
    "StageDisabled",
    "TrainResult",
    "build_preference_pairs",
    "predict_scores",
    "train",
]
