"""Dataset loading, validation, and deterministic seeded train/validation/test splits.

Supported on-disk formats:
  * JSONL: one object per line with fields ``id`` (str), ``text`` (str),
    ``label`` (int, 0=negative / 1=neutral / 2=positive) and an optional
    ``token_count`` (int) carrying an externally computed subword count.
  * CSV: header ``id,text,label[,token_count]``, RFC-4180 quoting.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .classes import VALID_LABELS

if TYPE_CHECKING:
    from .scorer import ConstituentScore


class DatasetError(ValueError):
    """A dataset file or split request violates the dataset contract."""


@dataclass
class LabeledPassage:
    """One passage with its gold sentiment label.

    ``token_count`` is an externally supplied true-tokenizer count; when absent,
    consumers fall back to a whitespace count. ``constituents`` may hold
    precomputed per-constituent scores attached by a caller; it never comes
    from the dataset file itself.
    """

    id: str
    text: str
    label: int
    token_count: int | None = None
    constituents: list["ConstituentScore"] | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise DatasetError("passage id must be a non-empty string")
        if not isinstance(self.text, str) or not self.text.strip():
            raise DatasetError(f"passage {self.id!r}: text is empty")
        if isinstance(self.label, bool) or self.label not in VALID_LABELS:
            raise DatasetError(
                f"passage {self.id!r}: label must be 0, 1 or 2, got {self.label!r}"
            )
        if self.token_count is not None:
            if isinstance(self.token_count, bool) or not isinstance(self.token_count, int):
                raise DatasetError(f"passage {self.id!r}: token_count must be an integer")
            if self.token_count < 0:
                raise DatasetError(f"passage {self.id!r}: token_count must be >= 0")


@dataclass
class DatasetSplit:
    """Train/validation/test partition of a dataset.

    The three parts partition the input exactly; sizes land within one passage
    of ``round(ratio * N)``.
    """

    train: list[LabeledPassage]
    validation: list[LabeledPassage]
    test: list[LabeledPassage]
    seed: int
    ratios: tuple[float, float, float] = field(default=(0.7, 0.1, 0.2))


def _passage_from_record(record: dict, where: str) -> LabeledPassage:
    for name in ("id", "text", "label"):
        if name not in record:
            raise DatasetError(f"{where}: missing field {name!r}")
    rid, text, label = record["id"], record["text"], record["label"]
    if not isinstance(rid, str):
        raise DatasetError(f"{where}: field 'id' must be a string")
    if not isinstance(text, str):
        raise DatasetError(f"{where}: field 'text' must be a string")
    if isinstance(label, bool) or not isinstance(label, int):
        raise DatasetError(f"{where}: field 'label' must be an integer")
    token_count = record.get("token_count")
    if token_count is not None and (
        isinstance(token_count, bool) or not isinstance(token_count, int)
    ):
        raise DatasetError(f"{where}: field 'token_count' must be an integer")
    try:
        return LabeledPassage(id=rid, text=text, label=label, token_count=token_count)
    except DatasetError as exc:
        raise DatasetError(f"{where}: {exc}") from None


def _load_jsonl(path: Path) -> list[LabeledPassage]:
    passages = []
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            if not isinstance(record, dict):
                raise DatasetError(f"{path}:{lineno}: expected a JSON object")
            passages.append(_passage_from_record(record, f"{path}:{lineno}"))
    return passages


def _load_csv(path: Path) -> list[LabeledPassage]:
    passages = []
    with path.open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for name in ("id", "text", "label"):
            if name not in header:
                raise DatasetError(f"{path}: missing column {name!r} in CSV header")
        for row in reader:
            where = f"{path}:{reader.line_num}"
            record: dict = {"id": row["id"], "text": row["text"]}
            try:
                record["label"] = int(row["label"])
            except (TypeError, ValueError):
                raise DatasetError(
                    f"{where}: field 'label' must be an integer, got {row['label']!r}"
                ) from None
            raw_count = row.get("token_count")
            if raw_count not in (None, ""):
                try:
                    record["token_count"] = int(raw_count)
                except ValueError:
                    raise DatasetError(
                        f"{where}: field 'token_count' must be an integer, got {raw_count!r}"
                    ) from None
            passages.append(_passage_from_record(record, where))
    return passages


def load_dataset(path: str | Path, format: str | None = None) -> list[LabeledPassage]:
    """Load and validate a dataset, returning passages in file order.

    ``format`` is ``"jsonl"`` or ``"csv"``; when omitted it is inferred from the
    file suffix. Raises :class:`DatasetError` naming the offending line and
    field on any malformed record, duplicate id, or out-of-domain label.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"dataset file not found: {path}")
    if format is None:
        format = path.suffix.lstrip(".").lower()
    if format == "jsonl":
        passages = _load_jsonl(path)
    elif format == "csv":
        passages = _load_csv(path)
    else:
        raise DatasetError(f"unknown dataset format {format!r} (expected csv or jsonl)")

    seen: dict[str, int] = {}
    for index, passage in enumerate(passages, start=1):
        if passage.id in seen:
            raise DatasetError(
                f"{path}: duplicate id {passage.id!r} (record {index} repeats record {seen[passage.id]})"
            )
        seen[passage.id] = index
    return passages


def split_dataset(
    passages: list[LabeledPassage],
    ratios: tuple[float, float, float] = (0.7, 0.1, 0.2),
    seed: int = 42,
) -> DatasetSplit:
    """Shuffle with a seeded PRNG and cut at rounded boundaries.

    Deterministic for fixed ``(passages, ratios, seed)``: the shuffle uses a
    Philox counter-based generator, so splits reproduce across platforms.
    Raises :class:`DatasetError` on empty input, bad ratios, or when rounding
    leaves any part empty.
    """
    if not passages:
        raise DatasetError("cannot split an empty dataset")
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise DatasetError(f"ratios must be three positive fractions, got {ratios!r}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DatasetError(f"ratios must sum to 1, got {sum(ratios)!r}")

    n = len(passages)
    rng = np.random.Generator(np.random.Philox(seed))
    order = rng.permutation(n)
    shuffled = [passages[i] for i in order]

    # Cumulative cuts keep every part within one passage of round(ratio * N).
    cut1 = round(ratios[0] * n)
    cut2 = round((ratios[0] + ratios[1]) * n)
    parts = (shuffled[:cut1], shuffled[cut1:cut2], shuffled[cut2:])
    for name, part in zip(("train", "validation", "test"), parts):
        if not part:
            raise DatasetError(
                f"{name} split is empty for N={n} and ratios {ratios}; use a larger dataset"
            )
    return DatasetSplit(
        train=parts[0], validation=parts[1], test=parts[2], seed=seed, ratios=tuple(ratios)
    )
