"""Ten-split evaluation protocol.

Scores are compared on the held-out fifth of ten deterministic 4:1
splits (seeds 0..9) and each metric is reported as mean +/- sample
standard deviation over the ten test partitions.
"""

from __future__ import annotations

import json
from typing import Mapping

import numpy as np

from .errors import VqbenchError
from .metrics import METRIC_NAMES, ScoreVector, evaluate_scores
from .store import SplitSpec, ten_splits
from .subjective import DIMENSIONS

N_SPLITS = 10


def subset_vector(vec: ScoreVector, ids: tuple[str, ...]) -> ScoreVector:
    index = dict(zip(vec.ids, vec.values))
    missing = [i for i in ids if i not in index]
    if missing:
        raise VqbenchError(f"scores missing for ids {missing[:5]}")
    return ScoreVector(tuple(ids), tuple(index[i] for i in ids))


def run_protocol(
    pred: Mapping[str, ScoreVector], gt: Mapping[str, ScoreVector]
) -> dict[str, dict[str, dict]]:
    """Evaluate predictions against truth over the ten conventional splits."""
    if set(pred) != set(gt):
        raise VqbenchError(f"dimension sets differ: {sorted(pred)} vs {sorted(gt)}")
    id_sets = {frozenset(v.ids) for v in gt.values()} | {frozenset(v.ids) for v in pred.values()}
    if len(id_sets) != 1:
        raise VqbenchError("all score vectors must cover the same video ids")
    ids = sorted(next(iter(id_sets)))
    splits: list[SplitSpec] = ten_splits(ids)

    per_split = []
    for split in splits:
        sub_pred = {d: subset_vector(v, split.test_ids) for d, v in pred.items()}
        sub_gt = {d: subset_vector(v, split.test_ids) for d, v in gt.items()}
        per_split.append(evaluate_scores(sub_pred, sub_gt))

    report: dict[str, dict[str, dict]] = {}
    for dim in DIMENSIONS:
        if dim not in pred:
            continue
        report[dim] = {}
        for metric in METRIC_NAMES:
            values = np.asarray([r[dim][metric] for r in per_split], dtype=np.float64)
            report[dim][metric] = {
                "mean": float(values.mean()),
                "std": float(values.std(ddof=1)),
                "per_split": [float(v) for v in values],
            }
    return report


def protocol_to_json(report: Mapping[str, Mapping[str, Mapping]]) -> str:
    rounded = {
        dim: {
            metric: {
                "mean": round(entry["mean"], 6),
                "std": round(entry["std"], 6),
                "per_split": [round(v, 6) for v in entry["per_split"]],
            }
            for metric, entry in metrics.items()
        }
        for dim, metrics in report.items()
    }
    return json.dumps(rounded, indent=2)


def protocol_to_text(report: Mapping[str, Mapping[str, Mapping]]) -> str:
    lines = []
    for dim, metrics in report.items():
        parts = [f"{metric}={entry['mean']:.4f}+/-{entry['std']:.4f}" for metric, entry in metrics.items()]
        lines.append(f"{dim:9s} " + "  ".join(parts))
    return "\n".join(lines)
