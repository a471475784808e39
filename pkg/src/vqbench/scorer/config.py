"""Scorer hyperparameters and derived dimensions."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

N_DIMENSIONS = 4
N_LEVELS = 5


@dataclass
class ScorerConfig:
    """Architecture and training settings; defaults are the canonical run."""

    frames: int = 24
    height: int = 64
    width: int = 64
    patch_grid: int = 8
    token_dim: int = 32
    judge_dim: int = 32
    prompt_buckets: int = 64
    hidden_dim: int = 64
    use_temporal: bool = True
    use_level_stage: bool = True
    finetune_encoders_stage2: bool = True
    lr_stage1: float = 1e-2
    lr_stage2: float = 1e-3
    lr_stage3: float = 1e-3
    momentum: float = 0.9
    batch_size: int = 16
    epochs_stage1: int = 400
    epochs_stage2: int = 400
    epochs_stage3: int = 400
    stage3_pairs: int = 2000
    dead_zone: float = 2.0
    seed: int = 0

    @property
    def spatial_dim(self) -> int:
        # per patch: (mean, std) for each of 3 channels
        return self.patch_grid * self.patch_grid * 6

    @property
    def temporal_dim(self) -> int:
        return 6

    @property
    def fused_dim(self) -> int:
        return 4 * self.token_dim

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScorerConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)
