"""Agreement metrics between predicted scores and ground-truth opinion scores.

SRCC uses the classic 1 - 6*sum(d^2)/(N(N^2-1)) form when both sides are
tie-free and falls back to Pearson over fractional ranks otherwise. KRCC
is tau-a (tied pairs excluded from both concordant and discordant counts),
with tau-b available behind a flag. All-constant inputs have no defined
rank order and raise DegenerateConstantInput.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import VqbenchError
from .subjective import DIMENSIONS

METRIC_NAMES = ("srcc", "plcc", "krcc")


class DegenerateConstantInput(VqbenchError):
    """A score vector is constant, so rank agreement is undefined."""


@dataclass(frozen=True)
class ScoreVector:
    """Scores for a list of videos, in a fixed id order."""

    ids: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.ids) != len(self.values):
            raise ValueError("ids and values must have equal length")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, float]]) -> "ScoreVector":
        ids, values = zip(*pairs) if pairs else ((), ())
        return cls(tuple(ids), tuple(float(v) for v in values))

    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def _aligned_arrays(gt, pred) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(gt, ScoreVector) and isinstance(pred, ScoreVector):
        if gt.ids != pred.ids:
            raise VqbenchError("score vectors are not aligned: id sequences differ")
    a = gt.array() if isinstance(gt, ScoreVector) else np.asarray(gt, dtype=np.float64)
    b = pred.array() if isinstance(pred, ScoreVector) else np.asarray(pred, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise VqbenchError(f"score vectors must be 1-d and equal length, got {a.shape} vs {b.shape}")
    if a.size < 2:
        raise VqbenchError("need at least two aligned scores")
    for name, v in (("gt", a), ("pred", b)):
        if np.ptp(v) == 0.0:
            raise DegenerateConstantInput(f"{name} scores are all equal; rank order undefined")
    return a, b


def rank(values: Sequence[float]) -> np.ndarray:
    """Fractional (average) ranks, 1-based; ties share the mean rank."""
    a = np.asarray(values, dtype=np.float64)
    order = np.argsort(a, kind="stable")
    ranks = np.empty(a.size, dtype=np.float64)
    i = 0
    while i < a.size:
        j = i
        while j + 1 < a.size and a[order[j + 1]] == a[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt((da * da).sum() * (db * db).sum())
    if denom == 0.0:
        raise DegenerateConstantInput("a vector is constant; correlation undefined")
    return float((da * db).sum() / denom)


def srcc(gt, pred) -> float:
    """Spearman rank correlation."""
    a, b = _aligned_arrays(gt, pred)
    n = a.size
    ra, rb = rank(a), rank(b)
    if np.unique(a).size == n and np.unique(b).size == n:
        d = ra - rb
        return float(1.0 - 6.0 * (d * d).sum() / (n * (n * n - 1)))
    return _pearson(ra, rb)


def plcc(gt, pred) -> float:
    """Pearson linear correlation."""
    a, b = _aligned_arrays(gt, pred)
    return _pearson(a, b)


def krcc(gt, pred, tau_b: bool = False) -> float:
    """Kendall rank correlation, tau-a by default."""
    a, b = _aligned_arrays(gt, pred)
    n = a.size
    iu = np.triu_indices(n, k=1)
    sa = np.sign(a[:, None] - a[None, :])[iu]
    sb = np.sign(b[:, None] - b[None, :])[iu]
    prod = sa * sb
    concordant = int((prod > 0).sum())
    discordant = int((prod < 0).sum())
    if not tau_b:
        return float((concordant - discordant) / (n * (n - 1) / 2))
    n0 = n * (n - 1) // 2
    n1 = int((sa == 0).sum())
    n2 = int((sb == 0).sum())
    denom = np.sqrt(float(n0 - n1) * float(n0 - n2))
    if denom == 0.0:
        raise DegenerateConstantInput("all pairs tied; tau-b undefined")
    return float((concordant - discordant) / denom)


def evaluate_scores(
    pred: Mapping[str, ScoreVector], gt: Mapping[str, ScoreVector]
) -> dict[str, dict[str, float]]:
    """Per-dimension SRCC/PLCC/KRCC between aligned prediction and truth."""
    if set(pred) != set(gt):
        raise VqbenchError(f"dimension sets differ: {sorted(pred)} vs {sorted(gt)}")
    report: dict[str, dict[str, float]] = {}
    for dim in DIMENSIONS:
        if dim not in pred:
            continue
        report[dim] = {
            "srcc": srcc(gt[dim], pred[dim]),
            "plcc": plcc(gt[dim], pred[dim]),
            "krcc": krcc(gt[dim], pred[dim]),
        }
    return report


def report_to_json(report: Mapping[str, Mapping[str, float]]) -> str:
    """Serialize a metric report with six-decimal values."""
    rounded = {
        dim: {metric: round(float(value), 6) for metric, value in metrics.items()}
        for dim, metrics in report.items()
    }
    return json.dumps(rounded, indent=2)


def read_score_csv(path: str) -> dict[str, ScoreVector]:
    """Read per-dimension score vectors from a CSV file.

    Accepts either the MOS table layout (video_id,dimension,mos,rater_count)
    or the plain prediction layout (video_id,dimension,score).
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if "mos" in header:
            value_col = "mos"
        elif "score" in header:
            value_col = "score"
        else:
            raise VqbenchError(f"score CSV needs a 'mos' or 'score' column, got header {header}")
        for col in ("video_id", "dimension"):
            if col not in header:
                raise VqbenchError(f"score CSV needs a {col!r} column, got header {header}")
        acc: dict[str, list[tuple[str, float]]] = {}
        for row in reader:
            dim = row["dimension"]
            if dim not in DIMENSIONS:
                raise VqbenchError(f"unknown dimension {dim!r} in {path}")
            acc.setdefault(dim, []).append((row["video_id"], float(row[value_col])))
    return {dim: ScoreVector.from_pairs(pairs) for dim, pairs in acc.items()}


def write_score_csv(scores: Mapping[str, ScoreVector], path: str) -> None:
    """Write per-dimension scores as video_id,dimension,score rows."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id", "dimension", "score"])
        for dim in DIMENSIONS:
            if dim not in scores:
                continue
            vec = scores[dim]
            for vid, val in zip(vec.ids, vec.values):
                writer.writerow([vid, dim, f"{val:.6f}"])
