"""Collapse a score matrix to a single passage-level prediction.

Three strategies:

- ``average``: columnwise mean of the N x 3 matrix. Means of distributions
  are themselves a distribution, so no renormalization is needed.
- ``awon``: average with opinionless rows excluded - rows whose neutral
  score strictly exceeds ``AWON_NEUTRAL_THRESHOLD`` are dropped before
  averaging. If every row is opinionless the strategy falls back to the
  plain average and flags the prediction.
- ``mlp``: a trained classifier over the 19 summary-statistic features
  (see :mod:`.features` and :mod:`.mlp`).

The predicted label is the argmax of the final distribution, ties awarded
to the lowest class index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .classes import VALID_LABELS
from .features import featurize
from .scorer import ScoreMatrixError, ScoreMatrix, SentimentDistribution

STRATEGIES = ("average", "awon", "mlp")

AWON_NEUTRAL_THRESHOLD = 0.9


@dataclass(frozen=True)
class Prediction:
    """A passage-level sentiment call and the distribution behind it."""

    passage_id: str
    strategy: str
    scores: SentimentDistribution
    label: int
    fallback: bool = False


def _label_of(scores: np.ndarray) -> int:
    # np.argmax awards ties to the lowest index.
    return int(np.argmax(scores))


def aggregate_average(matrix: ScoreMatrix) -> SentimentDistribution:
    """Columnwise mean over all rows."""
    means = matrix.values().mean(axis=0)
    return SentimentDistribution.from_values(means, renormalize=True)


def aggregate_awon(
    matrix: ScoreMatrix, threshold: float = AWON_NEUTRAL_THRESHOLD
) -> tuple[SentimentDistribution, bool]:
    """Columnwise mean over opinionated rows only.

    A row is opinionless when its neutral score strictly exceeds
    ``threshold``. Returns the distribution and whether the all-rows
    fallback fired.
    """
    values = matrix.values()
    opinionated = values[:, 1] <= threshold
    if not opinionated.any():
        return aggregate_average(matrix), True
    means = values[opinionated].mean(axis=0)
    return SentimentDistribution.from_values(means, renormalize=True), False


def predict(
    matrix: ScoreMatrix,
    strategy: str,
    model=None,
    threshold: float = AWON_NEUTRAL_THRESHOLD,
) -> Prediction:
    """Run one strategy over one score matrix."""
    if strategy == "average":
        scores = aggregate_average(matrix)
        fallback = False
    elif strategy == "awon":
        scores, fallback = aggregate_awon(matrix, threshold=threshold)
    elif strategy == "mlp":
        if model is None:
            raise ValueError("strategy 'mlp' requires a trained model")
        proba = model.predict_proba(featurize(matrix)[None, :])[0]
        scores = SentimentDistribution.from_values(proba, renormalize=True)
        fallback = False
    else:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    return Prediction(
        passage_id=matrix.passage_id,
        strategy=strategy,
        scores=scores,
        label=_label_of(scores.as_array()),
        fallback=fallback,
    )


def predict_all(
    matrices: Iterable[ScoreMatrix],
    strategy: str,
    model=None,
    threshold: float = AWON_NEUTRAL_THRESHOLD,
) -> list[Prediction]:
    return [
        predict(matrix, strategy, model=model, threshold=threshold)
        for matrix in matrices
    ]


def write_predictions(path: str | Path, predictions: Iterable[Prediction]) -> None:
    """Write predictions as JSONL, one object per passage."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        for pred in predictions:
            record = {
                "passage_id": pred.passage_id,
                "strategy": pred.strategy,
                "scores": list(pred.scores.as_tuple()),
                "label": pred.label,
                "fallback": pred.fallback,
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_predictions(path: str | Path) -> list[Prediction]:
    """Read predictions JSONL, validating each record."""
    path = Path(path)
    if not path.is_file():
        raise ScoreMatrixError(f"predictions file not found: {path}")
    predictions = []
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
            for name in ("passage_id", "strategy", "scores", "label"):
                if name not in record:
                    raise ScoreMatrixError(f"{where}: missing field {name!r}")
            label = record["label"]
            if isinstance(label, bool) or label not in VALID_LABELS:
                raise ScoreMatrixError(f"{where}: label must be 0, 1, or 2, got {label!r}")
            strategy = record["strategy"]
            if strategy not in STRATEGIES:
                raise ScoreMatrixError(f"{where}: unknown strategy {strategy!r}")
            raw = record["scores"]
            if (
                not isinstance(raw, list)
                or len(raw) != 3
                or any(
                    isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v)
                    for v in raw
                )
            ):
                raise ScoreMatrixError(f"{where}: scores must be a list of 3 finite numbers")
            try:
                scores = SentimentDistribution.from_values(raw, renormalize=True)
            except ScoreMatrixError as exc:
                raise ScoreMatrixError(f"{where}: {exc}") from None
            predictions.append(
                Prediction(
                    passage_id=str(record["passage_id"]),
                    strategy=strategy,
                    scores=scores,
                    label=int(label),
                    fallback=bool(record.get("fallback", False)),
                )
            )
    return predictions
