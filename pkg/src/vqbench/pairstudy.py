"""Pairwise comparison study: pair enumeration, sampling, votes, win rates.

Videos for one prompt form a group; every unordered pair within a group is
a comparison task. Annotator judgments aggregate by majority vote per
(pair, dimension), with even splits recorded as ties worth half a win to
each side.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import VqbenchError, jsonl_records
from .rng import Xorshift64Star
from .subjective import DIMENSIONS
from .taxonomy import PromptCategories

CHOICES = ("A", "B")

GROUP_BY_CHOICES = ("all", "spatial", "temporal", "attribute", "complexity")


class MissingVariant(VqbenchError):
    """A model does not have the required number of videos for a prompt."""


class GroupTooSmall(VqbenchError):
    """A group needs at least two videos to form a pair."""


class SampleLargerThanPool(VqbenchError):
    """Requested more pairs than the pool contains."""


class EmptyJudgments(VqbenchError):
    """Majority vote over zero judgments."""


class MissingPrediction(VqbenchError):
    """A verdict has no matching predicted choice."""


class UnknownVideo(VqbenchError):
    """A pair references a video missing from the metadata."""


@dataclass(frozen=True)
class VideoMeta:
    video_id: str
    model_id: str
    prompt_id: str
    variant: int
    open_source: bool


@dataclass(slots=True)
class PairSpec:
    """One unordered comparison; video_a sorts before video_b."""

    pair_id: str
    video_a: str
    video_b: str
    prompt_id: str


@dataclass(frozen=True)
class PairJudgment:
    pair_id: str
    annotator_id: str
    dimension: str
    choice: str
    displayed_swap: bool
    timestamp: str

    def __post_init__(self):
        if self.dimension not in DIMENSIONS:
            raise ValueError(f"unknown dimension {self.dimension!r}")
        if self.choice not in CHOICES:
            raise ValueError(f"choice must be 'A' or 'B', got {self.choice!r}")


@dataclass(frozen=True)
class PairVerdict:
    pair_id: str
    dimension: str
    winner: str
    votes_a: int
    votes_b: int


@dataclass
class WinRateRow:
    model_id: str
    dimension: str
    category: str
    wins: float
    losses: float
    ties: int

    @property
    def win_rate(self) -> float:
        return (self.wins + 0.5 * self.ties) / (self.wins + self.losses + self.ties)


def make_pair_id(video_a: str, video_b: str) -> str:
    """Stable 16-hex-char id for a canonical (video_a, video_b) pair."""
    return hashlib.blake2b(f"{video_a}|{video_b}".encode(), digest_size=8).hexdigest()


def build_groups(
    meta: Sequence[VideoMeta], open_variants: int = 4, closed_variants: int = 1
) -> dict[str, list[VideoMeta]]:
    """Group videos by prompt, checking per-model variant counts."""
    groups: dict[str, list[VideoMeta]] = {}
    counts: dict[tuple[str, str], int] = {}
    open_flag: dict[str, bool] = {}
    for m in meta:
        groups.setdefault(m.prompt_id, []).append(m)
        counts[(m.prompt_id, m.model_id)] = counts.get((m.prompt_id, m.model_id), 0) + 1
        open_flag[m.model_id] = m.open_source
    for (prompt_id, model_id), got in sorted(counts.items()):
        want = open_variants if open_flag[model_id] else closed_variants
        if got != want:
            raise MissingVariant(
                f"model {model_id!r} has {got} video(s) for prompt {prompt_id!r}, expected {want}"
            )
    # Every model in the study must appear in every prompt group.
    roster = sorted(open_flag)
    for prompt_id in sorted(groups):
        present = {m.model_id for m in groups[prompt_id]}
        for model_id in roster:
            if model_id not in present:
                raise MissingVariant(
                    f"model {model_id!r} has no videos for prompt {prompt_id!r}"
                )
    for group in groups.values():
        group.sort(key=lambda m: m.video_id)
    return groups


def enumerate_pairs(group: Sequence[VideoMeta]) -> list[PairSpec]:
    """All unordered pairs within one group, in lexicographic listing order."""
    if len(group) < 2:
        raise GroupTooSmall(f"group has {len(group)} video(s); need >= 2 to form pairs")
    ids = sorted(m.video_id for m in group)
    prompt_id = group[0].prompt_id
    pairs = []
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            pairs.append(PairSpec(make_pair_id(a, b), a, b, prompt_id))
    return pairs


def enumerate_all_pairs(groups: Mapping[str, Sequence[VideoMeta]]) -> list[PairSpec]:
    """Pairs of every group, groups taken in sorted prompt order."""
    out: list[PairSpec] = []
    for prompt_id in sorted(groups):
        out.extend(enumerate_pairs(groups[prompt_id]))
    return out


def sample_pairs(pairs: Sequence[PairSpec], n: int, seed: int) -> list[PairSpec]:
    """n distinct pairs by seeded partial Fisher-Yates over the pool."""
    if n > len(pairs):
        raise SampleLargerThanPool(f"cannot sample {n} pairs from a pool of {len(pairs)}")
    return Xorshift64Star(seed).sample(pairs, n)


def majority_vote(judgments: Sequence[PairJudgment]) -> PairVerdict:
    """Collapse the judgments of one (pair, dimension) into a verdict."""
    if not judgments:
        raise EmptyJudgments("cannot vote with zero judgments")
    pair_id = judgments[0].pair_id
    dimension = judgments[0].dimension
    for j in judgments:
        if j.pair_id != pair_id or j.dimension != dimension:
            raise VqbenchError("majority_vote expects judgments of a single pair and dimension")
    votes_a = sum(1 for j in judgments if j.choice == "A")
    votes_b = len(judgments) - votes_a
    winner = "A" if votes_a > votes_b else "B" if votes_b > votes_a else "Tie"
    return PairVerdict(pair_id, dimension, winner, votes_a, votes_b)


def aggregate_judgments(judgments: Sequence[PairJudgment]) -> list[PairVerdict]:
    """Majority-vote every (pair, dimension) present in the judgment list."""
    grouped: dict[tuple[str, str], list[PairJudgment]] = {}
    for j in judgments:
        grouped.setdefault((j.pair_id, j.dimension), []).append(j)
    dim_order = {d: i for i, d in enumerate(DIMENSIONS)}
    keys = sorted(grouped, key=lambda k: (k[0], dim_order[k[1]]))
    return [majority_vote(grouped[k]) for k in keys]


def pair_accuracy(predicted: Mapping[str, str], verdicts: Sequence[PairVerdict], dimension: str) -> float:
    """Share of verdicts a predictor matched; ties count half either way."""
    relevant = [v for v in verdicts if v.dimension == dimension]
    if not relevant:
        raise EmptyJudgments(f"no verdicts for dimension {dimension!r}")
    credit = 0.0
    for v in relevant:
        if v.pair_id not in predicted:
            raise MissingPrediction(f"no prediction for pair {v.pair_id!r}")
        if v.winner == "Tie":
            credit += 0.5
        elif predicted[v.pair_id] == v.winner:
            credit += 1.0
    return credit / len(relevant)


def _pair_categories(cats: PromptCategories, group_by: str) -> Iterable[str]:
    if group_by == "complexity":
        return (cats.complexity,)
    return sorted(getattr(cats, group_by))


def win_rates(
    verdicts: Sequence[PairVerdict],
    pairs: Sequence[PairSpec],
    meta: Sequence[VideoMeta],
    categories: Mapping[str, PromptCategories] | None = None,
    group_by: str = "all",
    dimension: str | None = None,
) -> list[WinRateRow]:
    """Per-model win rates, optionally split by prompt category.

    For aspect groupings a pair contributes once per subcategory its
    prompt carries (prompts without that aspect contribute nowhere).
    """
    if group_by not in GROUP_BY_CHOICES:
        raise VqbenchError(f"group_by must be one of {GROUP_BY_CHOICES}, got {group_by!r}")
    if group_by != "all" and categories is None:
        raise VqbenchError(f"group_by {group_by!r} needs prompt categories")
    pair_index = {p.pair_id: p for p in pairs}
    meta_index = {m.video_id: m for m in meta}
    rows: dict[tuple[str, str, str], WinRateRow] = {}

    def row(model_id: str, dim: str, category: str) -> WinRateRow:
        key = (model_id, dim, category)
        if key not in rows:
            rows[key] = WinRateRow(model_id, dim, category, 0.0, 0.0, 0)
        return rows[key]

    for v in verdicts:
        if dimension is not None and v.dimension != dimension:
            continue
        if v.pair_id not in pair_index:
            raise VqbenchError(f"verdict references unknown pair {v.pair_id!r}")
        pair = pair_index[v.pair_id]
        for vid in (pair.video_a, pair.video_b):
            if vid not in meta_index:
                raise UnknownVideo(f"pair {pair.pair_id!r} references unknown video {vid!r}")
        model_a = meta_index[pair.video_a].model_id
        model_b = meta_index[pair.video_b].model_id
        if group_by == "all":
            cats: Iterable[str] = ("all",)
        else:
            assert categories is not None
            if pair.prompt_id not in categories:
                raise VqbenchError(f"no categories for prompt {pair.prompt_id!r}")
            cats = _pair_categories(categories[pair.prompt_id], group_by)
        for category in cats:
            ra = row(model_a, v.dimension, category)
            rb = row(model_b, v.dimension, category)
            if v.winner == "A":
                ra.wins += 1.0
                rb.losses += 1.0
            elif v.winner == "B":
                rb.wins += 1.0
                ra.losses += 1.0
            else:
                ra.ties += 1
                rb.ties += 1

    dim_order = {d: i for i, d in enumerate(DIMENSIONS)}
    return sorted(rows.values(), key=lambda r: (r.model_id, dim_order[r.dimension], r.category))


# ---------------------------------------------------------------------------
# Serialization

def _dump(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"))


def pair_to_json_line(p: PairSpec) -> str:
    return _dump(
        {
            "pair_id": p.pair_id,
            "video_a": p.video_a,
            "video_b": p.video_b,
            "prompt_id": p.prompt_id,
        }
    )


def write_pairs_jsonl(pairs: Sequence[PairSpec], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(pair_to_json_line(p) + "\n")


def read_pairs_jsonl(path: str) -> list[PairSpec]:
    return [
        PairSpec(d["pair_id"], d["video_a"], d["video_b"], d["prompt_id"])
        for d in jsonl_records(path, required=("pair_id", "video_a", "video_b", "prompt_id"))
    ]


def write_judgments_jsonl(judgments: Sequence[PairJudgment], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for j in judgments:
            fh.write(judgment_to_json(j) + "\n")


def judgment_to_json(j: PairJudgment) -> str:
    return _dump(
        {
            "pair_id": j.pair_id,
            "annotator_id": j.annotator_id,
            "dimension": j.dimension,
            "choice": j.choice,
            "displayed_swap": j.displayed_swap,
            "timestamp": j.timestamp,
        }
    )


_JUDGMENT_FIELDS = ("pair_id", "annotator_id", "dimension", "choice", "displayed_swap", "timestamp")


def read_judgments_jsonl(path: str) -> list[PairJudgment]:
    return [
        PairJudgment(
            d["pair_id"],
            d["annotator_id"],
            d["dimension"],
            d["choice"],
            bool(d["displayed_swap"]),
            d["timestamp"],
        )
        for d in jsonl_records(path, required=_JUDGMENT_FIELDS)
    ]


def write_verdicts_jsonl(verdicts: Sequence[PairVerdict], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in verdicts:
            fh.write(
                _dump(
                    {
                        "pair_id": v.pair_id,
                        "dimension": v.dimension,
                        "winner": v.winner,
                        "votes_a": v.votes_a,
                        "votes_b": v.votes_b,
                    }
                )
                + "\n"
            )


def read_verdicts_jsonl(path: str) -> list[PairVerdict]:
    return [
        PairVerdict(d["pair_id"], d["dimension"], d["winner"], d["votes_a"], d["votes_b"])
        for d in jsonl_records(path, required=("pair_id", "dimension", "winner", "votes_a", "votes_b"))
    ]


def write_meta_jsonl(meta: Sequence[VideoMeta], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for m in meta:
            fh.write(
                _dump(
                    {
                        "video_id": m.video_id,
                        "model_id": m.model_id,
                        "prompt_id": m.prompt_id,
                        "variant": m.variant,
                        "open_source": m.open_source,
                    }
                )
                + "\n"
            )


def read_meta_jsonl(path: str) -> list[VideoMeta]:
    out = []
    for d in jsonl_records(
        path, required=("video_id", "model_id", "prompt_id", "variant", "open_source")
    ):
        out.append(
            VideoMeta(
                d["video_id"], d["model_id"], d["prompt_id"], int(d["variant"]), bool(d["open_source"])
            )
        )
    return out


def write_win_rates_csv(rows: Sequence[WinRateRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model_id", "dimension", "category", "wins", "losses", "ties", "win_rate"])
        for r in rows:
            writer.writerow(
                [r.model_id, r.dimension, r.category, f"{r.wins:g}", f"{r.losses:g}", r.ties, f"{r.win_rate:.6f}"]
            )
