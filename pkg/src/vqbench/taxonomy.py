"""Keyword-driven prompt categorization.

Prompts are tagged along three aspects (spatial content, temporal
content, attribute content) by whole-token keyword matching against an
editable keyword table, and binned into a complexity label by counting
non-stop-word tokens.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources

from .errors import VqbenchError, jsonl_records

ASPECTS = ("spatial", "temporal", "attribute")

COMPLEXITY_LABELS = ("simple", "medium", "complex")

# Function words only. Keyword tokens (then/before/after, from/into/through,
# out, left, right, first, second, number words) stay out of this list so a
# keyword can never be swallowed by the complexity count.
STOP_WORDS = frozenset(
    """
    the a an
    and or but nor so yet
    i you he she it we they him her his its them their
    this that these those
    in on at to of with by for over under between during against without
    is are was were be been being am do does did not
    """.split()
)

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass
class PromptCategories:
    """Aspect tags plus the complexity bin for one prompt."""

    spatial: set[str]
    temporal: set[str]
    attribute: set[str]
    complexity: str
    non_stop_count: int

    def to_json_obj(self) -> dict:
        # Empty aspect sets serialize as the literal string "null".
        def enc(s: set[str]):
            return sorted(s) if s else "null"

        return {
            "spatial": enc(self.spatial),
            "temporal": enc(self.temporal),
            "attribute": enc(self.attribute),
            "complexity": self.complexity,
            "non_stop_count": self.non_stop_count,
        }


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on any non-alphanumeric run."""
    return _TOKEN_RE.findall(text.lower())


def _strip_plural(token: str) -> list[str]:
    """The token plus its naive singular candidates ("s"/"es" stripped)."""
    forms = [token]
    if token.endswith("es") and len(token) > 2:
        forms.append(token[:-2])
    if token.endswith("s") and len(token) > 1:
        forms.append(token[:-1])
    return forms


def _keyword_hits(keyword: str, tokens: list[str]) -> bool:
    words = keyword.split()
    if len(words) == 1:
        return any(keyword in _strip_plural(t) for t in tokens)
    # Multi-word keywords match a run of consecutive tokens.
    for i in range(len(tokens) - len(words) + 1):
        if all(w in _strip_plural(tokens[i + j]) for j, w in enumerate(words)):
            return True
    return False


def load_keyword_table(path: str | None = None) -> dict[str, dict[str, list[str]]]:
    """Load and validate a keyword table (the packaged default if no path)."""
    if path is None:
        raw = resources.files("vqbench.data").joinpath("keywords.json").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    try:
        table = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise VqbenchError(f"keyword table is not valid JSON: {exc}") from exc
    if set(table) != set(ASPECTS):
        raise VqbenchError(f"keyword table aspects must be exactly {set(ASPECTS)}, got {set(table)}")
    for aspect, subcats in table.items():
        if not subcats:
            raise VqbenchError(f"aspect {aspect!r} has no subcategories")
        for subcat, keywords in subcats.items():
            if not keywords:
                raise VqbenchError(f"subcategory {aspect}/{subcat} has no keywords")
            for kw in keywords:
                if kw != kw.lower() or not kw.strip():
                    raise VqbenchError(f"keyword {kw!r} in {aspect}/{subcat} is not a lowercase stem")
    return table


def count_non_stop_words(text: str) -> int:
    """Number of tokens not in the stop list."""
    return sum(1 for t in tokenize(text) if t not in STOP_WORDS)


def complexity_label(non_stop_count: int) -> str:
    if non_stop_count <= 8:
        return "simple"
    if non_stop_count <= 11:
        return "medium"
    return "complex"


def categorize(text: str, table: dict[str, dict[str, list[str]]]) -> PromptCategories:
    """Tag one prompt against the keyword table.

    A subcategory is included iff at least one of its keywords matches a
    whole token (after lowercasing and naive plural stripping); aspect
    sets may come back empty.
    """
    tokens = tokenize(text)
    hits: dict[str, set[str]] = {}
    for aspect in ASPECTS:
        hits[aspect] = {
            subcat
            for subcat, keywords in table[aspect].items()
            if any(_keyword_hits(kw, tokens) for kw in keywords)
        }
    n = sum(1 for t in tokens if t not in STOP_WORDS)
    return PromptCategories(
        spatial=hits["spatial"],
        temporal=hits["temporal"],
        attribute=hits["attribute"],
        complexity=complexity_label(n),
        non_stop_count=n,
    )


def from_json_obj(obj: dict) -> PromptCategories:
    """Inverse of PromptCategories.to_json_obj."""

    def dec(v) -> set[str]:
        return set() if v == "null" else set(v)

    return PromptCategories(
        spatial=dec(obj["spatial"]),
        temporal=dec(obj["temporal"]),
        attribute=dec(obj["attribute"]),
        complexity=obj["complexity"],
        non_stop_count=int(obj["non_stop_count"]),
    )


def write_categories_jsonl(rows: dict[str, PromptCategories], path: str) -> None:
    """One line per prompt id, sorted, categories as to_json_obj."""
    with open(path, "w", encoding="utf-8") as fh:
        for prompt_id in sorted(rows):
            obj = {"prompt_id": prompt_id, **rows[prompt_id].to_json_obj()}
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")


def read_categories_jsonl(path: str) -> dict[str, PromptCategories]:
    out: dict[str, PromptCategories] = {}
    fields = ("prompt_id", "spatial", "temporal", "attribute", "complexity", "non_stop_count")
    for obj in jsonl_records(path, required=fields):
        out[obj["prompt_id"]] = from_json_obj(obj)
    return out
