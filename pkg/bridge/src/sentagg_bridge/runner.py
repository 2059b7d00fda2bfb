"""Bridge execution: dataset in, score-matrix JSONL out.

Per mode:

- ``sentence``: each passage is split by the aggregation package's segmenter
  (via its CLI) and every span is scored by the classifier backend. The span
  texts are written verbatim so downstream row/constituent alignment is exact.
- ``aspect``: aspect terms are extracted and scored per passage. A passage in
  which no aspect is detected still gets one row — the backend's whole-text
  fallback — flagged with ``"fallback_whole_passage": true`` so evaluations
  can count how often the aspect model came up empty.
- ``whole-passage``: one row per passage scoring the full text.

All rows are normalized to sum to 1 before writing, so the output always
loads cleanly into the aggregation pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import BridgeError
from .jobs import BridgeJob
from .segmenter_client import DEFAULT_SEGMENT_COMMAND, segment_with_primary
from .wire import read_dataset, score_matrix_record, write_score_matrices


@dataclass(frozen=True)
class BridgeReport:
    """What a bridge run produced."""

    passages: int
    rows: int
    fallbacks: int
    output: Path

    def summary(self) -> str:
        parts = [
            f"scored {self.passages} passages",
            f"{self.rows} constituent rows",
        ]
        if self.fallbacks:
            parts.append(f"{self.fallbacks} whole-passage fallbacks")
        return ", ".join(parts) + f" -> {self.output}"


def run_bridge(
    job: BridgeJob,
    backend,
    *,
    segment_command: Sequence[str] = DEFAULT_SEGMENT_COMMAND,
    abbrev_file: Path | None = None,
) -> BridgeReport:
    """Execute ``job`` with ``backend`` and write the score-matrix file."""
    dataset = read_dataset(job.dataset)
    if job.mode == "sentence":
        records, rows, fallbacks = _run_sentence(
            job, backend, dataset, segment_command, abbrev_file
        )
    elif job.mode == "aspect":
        records, rows, fallbacks = _run_aspect(job, backend, dataset)
    else:
        records, rows, fallbacks = _run_whole_passage(job, backend, dataset)
    write_score_matrices(job.output, records)
    return BridgeReport(
        passages=len(dataset), rows=rows, fallbacks=fallbacks, output=job.output
    )


def _batches(texts: Sequence[str], size: int) -> Iterator[list[str]]:
    for start in range(0, len(texts), size):
        yield list(texts[start : start + size])


def _score_in_batches(
    backend, texts: Sequence[str], batch_size: int
) -> list[tuple[float, float, float]]:
    scores: list[tuple[float, float, float]] = []
    for batch in _batches(texts, batch_size):
        batch_scores = backend.score_texts(batch)
        if len(batch_scores) != len(batch):
            raise BridgeError(
                f"backend returned {len(batch_scores)} scores for a batch of "
                f"{len(batch)} texts"
            )
        scores.extend(batch_scores)
    return scores


def _run_sentence(
    job: BridgeJob,
    backend,
    dataset: list[dict],
    segment_command: Sequence[str],
    abbrev_file: Path | None,
):
    segments = segment_with_primary(
        job.dataset, command=segment_command, abbrev_file=abbrev_file
    )
    missing = [rec["id"] for rec in dataset if rec["id"] not in segments]
    if missing:
        raise BridgeError(
            f"segmenter returned no spans for passage ids: {missing[:5]}"
        )

    # Flatten every span across the dataset so batching crosses passage
    # boundaries; the backend sees uniform batches regardless of how long
    # individual passages are.
    flat_texts: list[str] = []
    spans_per_passage: list[tuple[str, list[str]]] = []
    for rec in dataset:
        spans = segments[rec["id"]]
        if not spans:
            raise BridgeError(f"segmenter returned zero spans for {rec['id']!r}")
        spans_per_passage.append((rec["id"], spans))
        flat_texts.extend(spans)

    flat_scores = _score_in_batches(backend, flat_texts, job.batch_size)

    records = []
    cursor = 0
    total_rows = 0
    for passage_id, spans in spans_per_passage:
        scores = flat_scores[cursor : cursor + len(spans)]
        cursor += len(spans)
        rows = list(zip(spans, scores))
        records.append(score_matrix_record(passage_id, "sentence", rows))
        total_rows += len(rows)
    return records, total_rows, 0


def _run_whole_passage(job: BridgeJob, backend, dataset: list[dict]):
    texts = [rec["text"] for rec in dataset]
    scores = _score_in_batches(backend, texts, job.batch_size)
    records = []
    for rec, row_scores in zip(dataset, scores):
        rows = [(rec["text"], row_scores)]
        records.append(score_matrix_record(rec["id"], "external", rows))
    return records, len(records), 0


def _run_aspect(job: BridgeJob, backend, dataset: list[dict]):
    texts = [rec["text"] for rec in dataset]
    per_text_aspects = []
    for batch_start in range(0, len(texts), job.batch_size):
        batch = texts[batch_start : batch_start + job.batch_size]
        batch_aspects = backend.extract_aspects(batch)
        if len(batch_aspects) != len(batch):
            raise BridgeError(
                f"backend returned aspects for {len(batch_aspects)} texts in a "
                f"batch of {len(batch)}"
            )
        per_text_aspects.extend(batch_aspects)

    records = []
    total_rows = 0
    fallbacks = 0
    for rec, aspects in zip(dataset, per_text_aspects):
        if aspects:
            rows = [(a.term, a.scores) for a in aspects]
            records.append(score_matrix_record(rec["id"], "aspect", rows))
        else:
            fallbacks += 1
            rows = [(rec["text"], backend.score_whole_text(rec["text"]))]
            records.append(
                score_matrix_record(
                    rec["id"],
                    "aspect",
                    rows,
                    extra={"fallback_whole_passage": True},
                )
            )
        total_rows += len(rows)
    return records, total_rows, fallbacks
