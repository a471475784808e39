"""Shared exception base for data and validation failures.

Every named error in the package subclasses :class:`VqbenchError`, so the
CLI can map any of them to the validation exit code in one place.  The
:func:`jsonl_records` helper funnels malformed record files into that same
error type, naming the file and line.
"""

import json
from typing import Iterator, Sequence


class VqbenchError(Exception):
    """A domain validation failure (bad input data, broken precondition)."""


class ShapeMismatch(VqbenchError):
    """An array does not match its declared or expected shape."""


def jsonl_records(path: str, required: Sequence[str] = ()) -> Iterator[dict]:
    """Yield one dict per non-blank line of a JSONL file.

    A line that fails to decode, decodes to a non-object, or lacks one of
    ``required`` raises :class:`VqbenchError` naming the file and line.
    """
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise VqbenchError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise VqbenchError(
                    f"{path}:{lineno}: expected a JSON object, got {type(record).__name__}"
                )
            missing = [name for name in required if name not in record]
            if missing:
                raise VqbenchError(f"{path}:{lineno}: record missing fields {missing}")
            yield record
