"""Per-constituent sentiment scoring and the score-matrix wire format.

A passage becomes an N x 3 :class:`ScoreMatrix`: one probability row per
constituent, columns fixed as (negative, neutral, positive). Rows come either
from a pluggable :class:`ConstituentScorer` applied to segmenter output, or
from score-matrix JSONL produced by an external model runner:

    {"passage_id": str, "source": "sentence"|"aspect"|"external",
     "constituents": [{"text": str, "scores": [neg, neu, pos]}]}

Unknown keys in wire records are tolerated so producers can attach metadata.
"""

from __future__ import annotations

import json
import logging
import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .ingest import LabeledPassage
from .segmenter import SentenceSegmenter, Span, segment

logger = logging.getLogger(__name__)

SOURCES = ("sentence", "aspect", "external")

# Row sums within STRICT_SUM_TOL of 1 renormalize silently (covers rounded
# model outputs). Larger drifts up to MAX_SUM_DEVIATION - seen in published
# aspect scores, which arrive visibly unnormalized - renormalize with a
# warning; beyond that the row is treated as corrupt.
STRICT_SUM_TOL = 1e-4 + 1e-9
MAX_SUM_DEVIATION = 0.1

LEXICON_SMOOTHING = 0.5
LEXICON_NEUTRAL_DAMPING = 0.25

_TOKEN_RE = re.compile(r"[a-z0-9']+")


class ScoreMatrixError(ValueError):
    """A score row or score-matrix file violates the scoring contract."""


@dataclass(frozen=True)
class SentimentDistribution:
    """Probabilities over (negative, neutral, positive), summing to 1."""

    negative: float
    neutral: float
    positive: float

    @classmethod
    def from_values(
        cls, values, *, renormalize: bool = False, tol: float = 1e-6
    ) -> "SentimentDistribution":
        vals = [float(v) for v in values]
        if len(vals) != 3:
            raise ScoreMatrixError(f"expected 3 scores, got {len(vals)}")
        if any(not math.isfinite(v) or v < 0 for v in vals):
            raise ScoreMatrixError(f"scores must be finite and non-negative, got {vals}")
        total = sum(vals)
        if renormalize:
            if total <= 0:
                raise ScoreMatrixError(f"scores sum to {total}; cannot normalize")
            vals = [v / total for v in vals]
            total = sum(vals)
        if abs(total - 1.0) > tol or any(v > 1.0 + tol for v in vals):
            raise ScoreMatrixError(f"scores {vals} do not form a distribution")
        return cls(*vals)

    def as_array(self) -> np.ndarray:
        return np.array([self.negative, self.neutral, self.positive], dtype=float)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.negative, self.neutral, self.positive)


@dataclass(frozen=True)
class ConstituentScore:
    """One constituent's text and its sentiment distribution."""

    text: str
    scores: SentimentDistribution
    span: Span | None = None

    def __post_init__(self) -> None:
        if not self.text:
            raise ScoreMatrixError("constituent text must be non-empty")


@dataclass
class ScoreMatrix:
    """All constituent rows for one passage, in constituent order."""

    passage_id: str
    rows: list[ConstituentScore]
    source: str

    def __post_init__(self) -> None:
        if not self.rows:
            raise ScoreMatrixError(f"passage {self.passage_id!r}: score matrix has no rows")
        if self.source not in SOURCES:
            raise ScoreMatrixError(
                f"passage {self.passage_id!r}: source must be one of {SOURCES}, got {self.source!r}"
            )

    @property
    def n(self) -> int:
        return len(self.rows)

    def values(self) -> np.ndarray:
        """The N x 3 matrix of row distributions."""
        return np.array([row.scores.as_array() for row in self.rows])


class ConstituentScorer(ABC):
    """Strategy interface: produce a distribution for one constituent."""

    @abstractmethod
    def score(self, passage_id: str, index: int, text: str) -> SentimentDistribution:
        """Score constituent ``index`` of passage ``passage_id``."""


def _load_word_list(name: str) -> frozenset[str]:
    text = resources.files("sentagg").joinpath(f"data/{name}").read_text("utf-8")
    return frozenset(
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


_DEFAULT_POSITIVE: frozenset[str] | None = None
_DEFAULT_NEGATIVE: frozenset[str] | None = None


def _default_word_lists() -> tuple[frozenset[str], frozenset[str]]:
    global _DEFAULT_POSITIVE, _DEFAULT_NEGATIVE
    if _DEFAULT_POSITIVE is None:
        _DEFAULT_POSITIVE = _load_word_list("positive_words.txt")
        _DEFAULT_NEGATIVE = _load_word_list("negative_words.txt")
    return _DEFAULT_POSITIVE, _DEFAULT_NEGATIVE


def lexicon_score(
    text: str,
    positive: frozenset[str] | None = None,
    negative: frozenset[str] | None = None,
) -> SentimentDistribution:
    """Deterministic word-list scorer.

    With ``pos``/``neg`` counting positive/negative word hits over ``n``
    lowercase alphanumeric tokens, the unnormalized class weights are
    ``(neg + a, b * (n - pos - neg) + a, pos + a)`` with smoothing ``a = 0.5``
    and neutral damping ``b = 0.25``, normalized to sum 1. Empty text yields
    the uniform distribution.
    """
    if positive is None or negative is None:
        default_pos, default_neg = _default_word_lists()
        positive = positive if positive is not None else default_pos
        negative = negative if negative is not None else default_neg
    tokens = _TOKEN_RE.findall(text.lower())
    pos = sum(1 for t in tokens if t in positive)
    neg = sum(1 for t in tokens if t in negative)
    n_neutral = len(tokens) - pos - neg
    weights = (
        neg + LEXICON_SMOOTHING,
        LEXICON_NEUTRAL_DAMPING * n_neutral + LEXICON_SMOOTHING,
        pos + LEXICON_SMOOTHING,
    )
    return SentimentDistribution.from_values(weights, renormalize=True)


class LexiconScorer(ConstituentScorer):
    """Built-in scorer backed by checked-in positive/negative word lists."""

    def __init__(
        self,
        positive: frozenset[str] | None = None,
        negative: frozenset[str] | None = None,
    ):
        default_pos, default_neg = _default_word_lists()
        self.positive = positive if positive is not None else default_pos
        self.negative = negative if negative is not None else default_neg

    def score(self, passage_id: str, index: int, text: str) -> SentimentDistribution:
        return lexicon_score(text, self.positive, self.negative)


class FileBackedScorer(ConstituentScorer):
    """Serves precomputed rows looked up by passage id and constituent index."""

    def __init__(self, matrices: Mapping[str, ScoreMatrix]):
        self.matrices = dict(matrices)

    def score(self, passage_id: str, index: int, text: str) -> SentimentDistribution:
        matrix = self.matrices.get(passage_id)
        if matrix is None:
            raise ScoreMatrixError(f"no stored scores for passage {passage_id!r}")
        if index >= matrix.n:
            raise ScoreMatrixError(
                f"passage {passage_id!r}: no stored score for constituent {index} "
                f"(file has {matrix.n} rows)"
            )
        return matrix.rows[index].scores


def score_passage(
    passage: LabeledPassage,
    scorer: ConstituentScorer,
    segmenter: SentenceSegmenter | None = None,
) -> ScoreMatrix:
    """Segment a passage and score each sentence span, in span order."""
    spans = segmenter.segment(passage.text) if segmenter else segment(passage.text)
    rows = []
    for index, span in enumerate(spans):
        try:
            dist = scorer.score(passage.id, index, span.text)
        except ScoreMatrixError:
            raise
        except Exception as exc:
            raise ScoreMatrixError(
                f"passage {passage.id!r}: scorer failed on constituent {index} "
                f"({span.text[:60]!r}): {exc}"
            ) from exc
        rows.append(ConstituentScore(text=span.text, scores=dist, span=span))
    return ScoreMatrix(passage_id=passage.id, rows=rows, source="sentence")


def _row_from_record(entry: dict, where: str) -> tuple[ConstituentScore, float]:
    if "text" not in entry or "scores" not in entry:
        raise ScoreMatrixError(f"{where}: constituent needs 'text' and 'scores'")
    text = entry["text"]
    if not isinstance(text, str) or not text:
        raise ScoreMatrixError(f"{where}: constituent text must be a non-empty string")
    raw = entry["scores"]
    if not isinstance(raw, list) or len(raw) != 3:
        raise ScoreMatrixError(f"{where}: scores must be a list of 3 numbers")
    values = []
    for v in raw:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ScoreMatrixError(f"{where}: scores must be finite numbers, got {raw}")
        if v < 0:
            raise ScoreMatrixError(f"{where}: negative score {v} in {raw}")
        values.append(float(v))
    deviation = abs(sum(values) - 1.0)
    if deviation > MAX_SUM_DEVIATION:
        raise ScoreMatrixError(
            f"{where}: row sum {sum(values):.4f} deviates from 1 beyond "
            f"{MAX_SUM_DEVIATION}; treating as corrupt"
        )
    scores = SentimentDistribution.from_values(values, renormalize=True)
    return ConstituentScore(text=text, scores=scores), deviation


def load_score_matrices(path: str | Path) -> dict[str, ScoreMatrix]:
    """Load and validate score-matrix JSONL, keyed by passage id.

    Rows are renormalized to sum 1; drifts beyond ``STRICT_SUM_TOL`` are
    counted and logged, drifts beyond ``MAX_SUM_DEVIATION`` raise.
    """
    path = Path(path)
    if not path.is_file():
        raise ScoreMatrixError(f"score-matrix file not found: {path}")
    matrices: dict[str, ScoreMatrix] = {}
    renormalized = 0
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ScoreMatrixError(f"{where}: invalid JSON: {exc.msg}") from None
            if not isinstance(record, dict):
                raise ScoreMatrixError(f"{where}: expected a JSON object")
            for name in ("passage_id", "source", "constituents"):
                if name not in record:
                    raise ScoreMatrixError(f"{where}: missing field {name!r}")
            passage_id = record["passage_id"]
            if not isinstance(passage_id, str) or not passage_id:
                raise ScoreMatrixError(f"{where}: passage_id must be a non-empty string")
            if passage_id in matrices:
                raise ScoreMatrixError(f"{where}: duplicate passage_id {passage_id!r}")
            constituents = record["constituents"]
            if not isinstance(constituents, list) or not constituents:
                raise ScoreMatrixError(f"{where}: constituents must be a non-empty list")
            rows = []
            for k, entry in enumerate(constituents):
                if not isinstance(entry, dict):
                    raise ScoreMatrixError(f"{where}: constituent {k} must be an object")
                row, deviation = _row_from_record(entry, f"{where} constituent {k}")
                if deviation > STRICT_SUM_TOL:
                    renormalized += 1
                rows.append(row)
            try:
                matrices[passage_id] = ScoreMatrix(
                    passage_id=passage_id, rows=rows, source=record["source"]
                )
            except ScoreMatrixError as exc:
                raise ScoreMatrixError(f"{where}: {exc}") from None
    if renormalized:
        logger.warning(
            "%s: renormalized %d unnormalized score row(s)", path, renormalized
        )
    return matrices


def write_score_matrices(path: str | Path, matrices: Iterable[ScoreMatrix]) -> None:
    """Write matrices in the score-matrix JSONL wire format."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        for matrix in matrices:
            record = {
                "passage_id": matrix.passage_id,
                "source": matrix.source,
                "constituents": [
                    {"text": row.text, "scores": list(row.scores.as_tuple())}
                    for row in matrix.rows
                ],
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
