"""Accuracy, macro-F1, and reporting over passage-level predictions.

Both metrics derive from a 3x3 :class:`ConfusionMatrix` with rows indexed by
gold label and columns by predicted label. Reports come in three shapes: a
per-strategy results table, a token-length-binned report (half-open bins
``[e_i, e_{i+1})`` with the last bin open-ended), and an optional SVG bar
chart of accuracy per bin.

Token counts prefer the value stored on the passage (``token_count``, e.g.
a subword count attached by an external tokenizer) and fall back to a
whitespace token count, keeping this package tokenizer-free.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .aggregate import Prediction, predict
from .classes import N_CLASSES
from .ingest import LabeledPassage
from .scorer import ConstituentScorer, LexiconScorer, ScoreMatrix, score_passage

logger = logging.getLogger(__name__)

DEFAULT_BIN_EDGES = (0, 16, 32, 64, 128, 256)


class EvaluationError(ValueError):
    """Evaluation inputs violate the metric or report contract."""


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[g][p] = number of examples with gold g predicted p."""

    counts: np.ndarray

    @classmethod
    def from_pairs(cls, gold: Sequence[int], pred: Sequence[int]) -> "ConfusionMatrix":
        gold = np.asarray(gold, dtype=int)
        pred = np.asarray(pred, dtype=int)
        if gold.shape != pred.shape or gold.ndim != 1:
            raise EvaluationError("gold and predicted labels must be equal-length 1-D")
        for name, arr in (("gold", gold), ("predicted", pred)):
            if arr.size and (arr.min() < 0 or arr.max() >= N_CLASSES):
                raise EvaluationError(f"{name} labels must be in [0, {N_CLASSES})")
        counts = np.zeros((N_CLASSES, N_CLASSES), dtype=int)
        np.add.at(counts, (gold, pred), 1)
        return cls(counts=counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def accuracy(cm: ConfusionMatrix) -> float:
    """Proportion of correctly classified examples."""
    if cm.total == 0:
        raise EvaluationError("cannot compute accuracy of an empty confusion matrix")
    return float(np.trace(cm.counts)) / cm.total


def macro_f1(cm: ConfusionMatrix) -> float:
    """Unweighted mean of per-class F1, treating undefined quantities as 0."""
    if cm.total == 0:
        raise EvaluationError("cannot compute macro-F1 of an empty confusion matrix")
    f1s = []
    for c in range(N_CLASSES):
        true_pos = float(cm.counts[c, c])
        pred_c = float(cm.counts[:, c].sum())
        gold_c = float(cm.counts[c, :].sum())
        precision = true_pos / pred_c if pred_c else 0.0
        recall = true_pos / gold_c if gold_c else 0.0
        f1s.append(2 * precision * recall / (precision + recall) if precision + recall else 0.0)
    return float(np.mean(f1s))


def whitespace_token_count(text: str) -> int:
    return len(text.split())


@dataclass(frozen=True)
class BinRow:
    """Metrics over one token-length bin; ``high=None`` means unbounded."""

    low: int
    high: int | None
    n: int
    accuracy: float | None
    macro_f1: float | None

    def label(self) -> str:
        return f"{self.low}+" if self.high is None else f"{self.low}-{self.high - 1}"


@dataclass(frozen=True)
class BinnedReport:
    bin_edges: tuple[int, ...]
    bins: tuple[BinRow, ...]
    overall_n: int
    overall_accuracy: float
    overall_macro_f1: float


def binned_report(
    examples: Sequence[tuple[LabeledPassage, Prediction]],
    bin_edges: Sequence[int] = DEFAULT_BIN_EDGES,
    token_counter: Callable[[str], int] = whitespace_token_count,
) -> BinnedReport:
    """Bucket examples by token length and compute metrics per bucket.

    Bins are half-open ``[e_i, e_{i+1})``; the last extends to infinity.
    Empty bins report ``n=0`` with ``None`` metrics.
    """
    if not examples:
        raise EvaluationError("binned report needs at least one example")
    edges = tuple(int(e) for e in bin_edges)
    if len(edges) < 1 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise EvaluationError(f"bin edges must be strictly ascending, got {bin_edges}")

    assigned: list[list[tuple[int, int]]] = [[] for _ in edges]
    gold_all, pred_all = [], []
    for passage, prediction in examples:
        if prediction.passage_id != passage.id:
            raise EvaluationError(
                f"prediction for {prediction.passage_id!r} paired with passage {passage.id!r}"
            )
        count = passage.token_count
        if count is None:
            count = token_counter(passage.text)
        if count < edges[0]:
            raise EvaluationError(
                f"passage {passage.id!r} has {count} tokens, below the first bin edge {edges[0]}"
            )
        index = int(np.searchsorted(edges, count, side="right")) - 1
        assigned[index].append((passage.label, prediction.label))
        gold_all.append(passage.label)
        pred_all.append(prediction.label)

    bins = []
    for i, pairs in enumerate(assigned):
        low = edges[i]
        high = edges[i + 1] if i + 1 < len(edges) else None
        if pairs:
            cm = ConfusionMatrix.from_pairs([g for g, _ in pairs], [p for _, p in pairs])
            bins.append(BinRow(low, high, len(pairs), accuracy(cm), macro_f1(cm)))
        else:
            bins.append(BinRow(low, high, 0, None, None))

    overall = ConfusionMatrix.from_pairs(gold_all, pred_all)
    return BinnedReport(
        bin_edges=edges,
        bins=tuple(bins),
        overall_n=overall.total,
        overall_accuracy=accuracy(overall),
        overall_macro_f1=macro_f1(overall),
    )


@dataclass(frozen=True)
class ResultRow:
    """One (strategy, dataset, split) line of the results table."""

    strategy: str
    dataset: str
    split: str
    n: int
    accuracy: float | None
    macro_f1: float | None


def evaluate_predictions(
    passages: Sequence[LabeledPassage], predictions: Sequence[Prediction]
) -> ConfusionMatrix:
    """Pair predictions with passages by id and build the confusion matrix."""
    by_id = {p.passage_id: p for p in predictions}
    missing = [p.id for p in passages if p.id not in by_id]
    if missing:
        shown = ", ".join(repr(i) for i in missing[:10])
        raise EvaluationError(
            f"{len(missing)} passage(s) have no prediction: {shown}"
        )
    gold = [p.label for p in passages]
    pred = [by_id[p.id].label for p in passages]
    return ConfusionMatrix.from_pairs(gold, pred)


def compare_strategies(
    passages: Sequence[LabeledPassage],
    strategies: Sequence[str],
    *,
    matrices: dict[str, ScoreMatrix] | None = None,
    scorer: ConstituentScorer | None = None,
    model=None,
    dataset: str = "dataset",
    split: str = "test",
    threshold: float | None = None,
) -> list[ResultRow]:
    """Run each strategy over the same passages and tabulate metrics.

    Score matrices are looked up by passage id when ``matrices`` is given,
    otherwise produced by segmenting and scoring each passage (``scorer``
    defaults to the lexicon scorer). A strategy that fails is recorded with
    ``n=0`` and empty metrics rather than aborting the comparison.
    """
    if not passages:
        raise EvaluationError("compare_strategies needs at least one passage")
    if matrices is not None:
        missing = [p.id for p in passages if p.id not in matrices]
        if missing:
            shown = ", ".join(repr(i) for i in missing[:10])
            raise EvaluationError(f"{len(missing)} passage(s) have no score matrix: {shown}")
        per_passage = [matrices[p.id] for p in passages]
    else:
        active = scorer if scorer is not None else LexiconScorer()
        per_passage = [score_passage(p, active) for p in passages]

    kwargs = {} if threshold is None else {"threshold": threshold}
    rows = []
    for strategy in strategies:
        try:
            predictions = [
                predict(matrix, strategy, model=model, **kwargs) for matrix in per_passage
            ]
            cm = evaluate_predictions(passages, predictions)
            rows.append(
                ResultRow(strategy, dataset, split, cm.total, accuracy(cm), macro_f1(cm))
            )
        except Exception as exc:
            logger.warning("strategy %r failed: %s", strategy, exc)
            rows.append(ResultRow(strategy, dataset, split, 0, None, None))
    return rows


def write_results_csv(path: str | Path, rows: Iterable[ResultRow]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["strategy", "dataset", "split", "n", "accuracy", "macro_f1"])
        for row in rows:
            writer.writerow(
                [
                    row.strategy,
                    row.dataset,
                    row.split,
                    row.n,
                    "" if row.accuracy is None else repr(row.accuracy),
                    "" if row.macro_f1 is None else repr(row.macro_f1),
                ]
            )


def write_binned_csv(path: str | Path, report: BinnedReport) -> None:
    """CSV rows per bin; an empty bin_high marks the open-ended last bin."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["bin_low", "bin_high", "n", "accuracy", "macro_f1"])
        for row in report.bins:
            writer.writerow(
                [
                    row.low,
                    "" if row.high is None else row.high,
                    row.n,
                    "" if row.accuracy is None else repr(row.accuracy),
                    "" if row.macro_f1 is None else repr(row.macro_f1),
                ]
            )


def write_binned_json(path: str | Path, report: BinnedReport) -> None:
    document = {
        "bin_edges": list(report.bin_edges),
        "bins": [
            {
                "low": row.low,
                "high": row.high,
                "n": row.n,
                "accuracy": row.accuracy,
                "macro_f1": row.macro_f1,
            }
            for row in report.bins
        ],
        "overall": {
            "n": report.overall_n,
            "accuracy": report.overall_accuracy,
            "macro_f1": report.overall_macro_f1,
        },
    }
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        json.dump(document, handle, indent=2)
        handle.write("\n")


def write_binned_svg(path: str | Path, report: BinnedReport) -> None:
    """Standalone SVG bar chart of accuracy per token-length bin."""
    width, height = 640, 360
    margin_left, margin_right, margin_top, margin_bottom = 60, 20, 40, 60
    plot_w = width - margin_left - margin_right
    plot_h = height - margin_top - margin_bottom
    n_bins = len(report.bins)
    slot = plot_w / n_bins
    bar_w = slot * 0.7

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">'
        "Accuracy by token-length bin</text>",
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = margin_top + plot_h * (1 - tick)
        parts.append(
            f'<line x1="{margin_left}" y1="{y:.1f}" x2="{width - margin_right}" '
            f'y2="{y:.1f}" stroke="#ddd"/>'
        )
        parts.append(
            f'<text x="{margin_left - 8}" y="{y + 4:.1f}" text-anchor="end">{tick:g}</text>'
        )
    for i, row in enumerate(report.bins):
        x = margin_left + i * slot + (slot - bar_w) / 2
        label_y = height - margin_bottom + 16
        if row.accuracy is not None:
            bar_h = plot_h * row.accuracy
            y = margin_top + plot_h - bar_h
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" height="{bar_h:.1f}" '
                'fill="#4878a8"/>'
            )
            parts.append(
                f'<text x="{x + bar_w / 2:.1f}" y="{y - 4:.1f}" text-anchor="middle">'
                f"{row.accuracy:.2f}</text>"
            )
        cx = x + bar_w / 2
        parts.append(
            f'<text x="{cx:.1f}" y="{label_y}" text-anchor="middle">{row.label()}</text>'
        )
        parts.append(
            f'<text x="{cx:.1f}" y="{label_y + 14}" text-anchor="middle" fill="#666">'
            f"n={row.n}</text>"
        )
    parts.append(
        f'<line x1="{margin_left}" y1="{margin_top + plot_h}" x2="{width - margin_right}" '
        f'y2="{margin_top + plot_h}" stroke="#333"/>'
    )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
