"""Reading and writing the aggregation pipeline's wire formats.

The bridge talks to the aggregation package exclusively through files, so the
two formats are re-validated here rather than imported:

- dataset JSONL: ``{"id": str, "text": str, "label": 0|1|2}`` with an optional
  integer ``"token_count"``; unknown keys are tolerated and preserved.
- score-matrix JSONL: ``{"passage_id": str, "source": str, "constituents":
  [{"text": str, "scores": [neg, neu, pos]}]}``; consumers tolerate extra
  keys, which is where the bridge attaches flags like
  ``"fallback_whole_passage"``.

Rows written by the bridge are always normalized to sum exactly to 1 (up to
float rounding), so downstream loading never trips strict-sum validation.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import BridgeError

VALID_LABELS = (0, 1, 2)
SOURCES = ("sentence", "aspect", "external")


def read_dataset(path: str | Path) -> list[dict]:
    """Load and validate dataset JSONL, preserving unknown keys.

    Returns the raw records (dicts) in file order. Ids must be unique
    non-empty strings, texts non-blank strings, labels 0/1/2; an optional
    ``token_count`` must be a non-negative integer.
    """
    path = Path(path)
    if not path.is_file():
        raise BridgeError(f"dataset file not found: {path}")
    records: list[dict] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BridgeError(f"{where}: invalid JSON: {exc.msg}") from None
            if not isinstance(record, dict):
                raise BridgeError(f"{where}: expected a JSON object")
            for name in ("id", "text", "label"):
                if name not in record:
                    raise BridgeError(f"{where}: missing field {name!r}")
            rid, text, label = record["id"], record["text"], record["label"]
            if not isinstance(rid, str) or not rid:
                raise BridgeError(f"{where}: field 'id' must be a non-empty string")
            if rid in seen:
                raise BridgeError(f"{where}: duplicate passage id {rid!r}")
            seen.add(rid)
            if not isinstance(text, str) or not text.strip():
                raise BridgeError(f"{where}: passage {rid!r} has empty text")
            if isinstance(label, bool) or label not in VALID_LABELS:
                raise BridgeError(
                    f"{where}: label must be 0, 1, or 2, got {label!r}"
                )
            count = record.get("token_count")
            if count is not None and (
                isinstance(count, bool) or not isinstance(count, int) or count < 0
            ):
                raise BridgeError(
                    f"{where}: field 'token_count' must be a non-negative integer"
                )
            records.append(record)
    return records


def write_dataset(path: str | Path, records: Iterable[Mapping]) -> None:
    """Write dataset records as JSONL, one object per line."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(json.dumps(dict(record), ensure_ascii=False) + "\n")


def normalize_row(scores: Sequence[float]) -> list[float]:
    """Validate a (negative, neutral, positive) row and scale it to sum 1."""
    values = [float(v) for v in scores]
    if len(values) != 3:
        raise BridgeError(f"expected 3 scores, got {len(values)}")
    if any(not math.isfinite(v) or v < 0 for v in values):
        raise BridgeError(f"scores must be finite and non-negative, got {values}")
    total = sum(values)
    if total <= 0:
        raise BridgeError(f"scores sum to {total}; cannot normalize")
    return [v / total for v in values]


def score_matrix_record(
    passage_id: str,
    source: str,
    rows: Sequence[tuple[str, Sequence[float]]],
    extra: Mapping | None = None,
) -> dict:
    """Build one score-matrix JSONL record from (text, scores) rows."""
    if source not in SOURCES:
        raise BridgeError(f"source must be one of {SOURCES}, got {source!r}")
    if not rows:
        raise BridgeError(f"passage {passage_id!r}: a score matrix needs at least one row")
    constituents = []
    for text, scores in rows:
        if not isinstance(text, str) or not text:
            raise BridgeError(
                f"passage {passage_id!r}: constituent text must be a non-empty string"
            )
        constituents.append({"text": text, "scores": normalize_row(scores)})
    record = {"passage_id": passage_id, "source": source, "constituents": constituents}
    if extra:
        record.update(extra)
    return record


def write_score_matrices(path: str | Path, records: Iterable[Mapping]) -> None:
    """Write score-matrix records as JSONL, one passage per line."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(json.dumps(dict(record), ensure_ascii=False) + "\n")
