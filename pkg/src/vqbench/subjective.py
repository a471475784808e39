"""Subjective rating normalization: raw 1..5 scores to mean opinion scores.

Each subject's ratings are z-scored per dimension with that subject's own
mean and sample standard deviation, linearly rescaled to [0, 100], and
averaged over subjects per (video, dimension). Subjects who gave the same
score to everything carry no ranking information; the default policy drops
them with a warning, the alternative maps their rescaled score to the
midpoint 50.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

from .errors import VqbenchError

DIMENSIONS = ("static", "temporal", "dynamic", "tv")

CONSTANT_RATER_POLICIES = ("drop", "midpoint")


class FewerThanTwoRatings(VqbenchError):
    """A subject has fewer than two ratings in a dimension."""


class NoSurvivingRaters(VqbenchError):
    """Every rater of a video/dimension was dropped as constant."""


class ConstantRaterWarning(UserWarning):
    """A zero-variance subject was dropped from a dimension."""


@dataclass(frozen=True)
class RawRating:
    """One subject's score for one video on one dimension."""

    subject_id: str
    video_id: str
    dimension: str
    score: int

    def __post_init__(self):
        if self.dimension not in DIMENSIONS:
            raise ValueError(f"unknown dimension {self.dimension!r}")
        if not isinstance(self.score, int) or not 1 <= self.score <= 5:
            raise ValueError(f"score must be an integer in 1..5, got {self.score!r}")


@dataclass(frozen=True)
class MosRow:
    video_id: str
    dimension: str
    mos: float
    rater_count: int


def rating_count(ratings: list[RawRating]) -> int:
    return len(ratings)


def subject_stats(ratings: list[RawRating], subject_id: str, dimension: str) -> tuple[float, float]:
    """Mean and sample standard deviation of one subject's scores in one dimension."""
    scores = [r.score for r in ratings if r.subject_id == subject_id and r.dimension == dimension]
    if len(scores) < 2:
        raise FewerThanTwoRatings(
            f"subject {subject_id!r} has {len(scores)} rating(s) in dimension {dimension!r}; need >= 2"
        )
    mean = sum(scores) / len(scores)
    var = sum((s - mean) ** 2 for s in scores) / (len(scores) - 1)
    return mean, math.sqrt(var)


def rescale_z(z: float) -> float:
    """Map a z-score to [0, 100]: 100*(z+3)/6, clipped."""
    return min(100.0, max(0.0, 100.0 * (z + 3.0) / 6.0))


def compute_mos(ratings: list[RawRating], policy: str = "drop") -> list[MosRow]:
    """Aggregate raw ratings into per-(video, dimension) mean opinion scores.

    Args:
        ratings: raw rating records; every subject must have at least two
            ratings in each dimension they rated.
        policy: constant-rater handling, "drop" (default) or "midpoint".

    Returns:
        Rows sorted by video_id then canonical dimension order.
    """
    if policy not in CONSTANT_RATER_POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {CONSTANT_RATER_POLICIES}")

    by_subject: dict[tuple[str, str], list[RawRating]] = {}
    for r in ratings:
        by_subject.setdefault((r.subject_id, r.dimension), []).append(r)

    # Rescaled scores keyed by (video, dimension).
    contributions: dict[tuple[str, str], list[float]] = {}
    seen: set[tuple[str, str]] = set()
    for (subject_id, dimension), group in by_subject.items():
        for r in group:
            seen.add((r.video_id, r.dimension))
        scores = [r.score for r in group]
        if len(scores) < 2:
            raise FewerThanTwoRatings(
                f"subject {subject_id!r} has {len(scores)} rating(s) in dimension {dimension!r}; need >= 2"
            )
        mean = sum(scores) / len(scores)
        var = sum((s - mean) ** 2 for s in scores) / (len(scores) - 1)
        std = math.sqrt(var)
        if std == 0.0:
            if policy == "drop":
                warnings.warn(
                    f"subject {subject_id!r} rated every video {scores[0]} in dimension "
                    f"{dimension!r}; dropped",
                    ConstantRaterWarning,
                    stacklevel=2,
                )
                continue
            for r in group:
                contributions.setdefault((r.video_id, r.dimension), []).append(50.0)
            continue
        for r in group:
            z = (r.score - mean) / std
            contributions.setdefault((r.video_id, r.dimension), []).append(rescale_z(z))

    missing = seen - set(contributions)
    if missing:
        video_id, dimension = sorted(missing)[0]
        raise NoSurvivingRaters(
            f"no surviving raters for video {video_id!r} dimension {dimension!r} after dropping constant raters"
        )

    dim_order = {d: i for i, d in enumerate(DIMENSIONS)}
    rows = [
        MosRow(video_id, dimension, sum(vals) / len(vals), len(vals))
        for (video_id, dimension), vals in contributions.items()
    ]
    rows.sort(key=lambda row: (row.video_id, dim_order[row.dimension]))
    return rows


def read_ratings_csv(path: str) -> list[RawRating]:
    """Read `subject_id,video_id,dimension,score` rows."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["subject_id", "video_id", "dimension", "score"]
        if reader.fieldnames != expected:
            raise VqbenchError(f"ratings CSV header must be {','.join(expected)}, got {reader.fieldnames}")
        out = []
        for row in reader:
            try:
                score = int(row["score"])
            except (TypeError, ValueError):
                raise VqbenchError(f"non-integer score {row['score']!r} for video {row['video_id']!r}")
            try:
                out.append(RawRating(row["subject_id"], row["video_id"], row["dimension"], score))
            except ValueError as exc:
                raise VqbenchError(str(exc))
    return out


def write_ratings_csv(ratings: list[RawRating], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject_id", "video_id", "dimension", "score"])
        for r in ratings:
            writer.writerow([r.subject_id, r.video_id, r.dimension, r.score])


def write_mos_csv(rows: list[MosRow], path: str) -> None:
    """Write `video_id,dimension,mos,rater_count` with six-decimal scores."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id", "dimension", "mos", "rater_count"])
        for row in rows:
            writer.writerow([row.video_id, row.dimension, f"{row.mos:.6f}", row.rater_count])


def read_mos_csv(path: str) -> list[MosRow]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["video_id", "dimension", "mos", "rater_count"]
        if reader.fieldnames != expected:
            raise VqbenchError(f"MOS CSV header must be {','.join(expected)}, got {reader.fieldnames}")
        return [
            MosRow(row["video_id"], row["dimension"], float(row["mos"]), int(row["rater_count"]))
            for row in reader
        ]
