"""Rule-based sentence boundary detection.

The engine scans for runs of terminal punctuation (``. ! ?`` and ellipsis) and
decides each candidate with an ordered rule chain. The rule set is a documented,
deliberately conservative subset of what mature rule-based segmenters ship;
when in doubt it under-splits:

  1. ``url``          - a dot inside a URL or e-mail address never splits.
  2. ``decimal``      - a dot between digits (``3.50``) never splits.
  3. ``end_of_text``  - the last terminal in the text always closes a sentence.
  4. ``abbreviation`` - a dot after a known abbreviation (checked-in list,
                        matched case-insensitively, entries stored without the
                        trailing period) never splits.
  5. ``initials``     - a dot after a lone uppercase letter (``J. K.``) never
                        splits; biased toward keeping person names whole.
  6. ``sentence_start`` - otherwise a candidate splits only when followed by
                        whitespace and an uppercase letter or digit (one
                        opening quote/bracket may intervene); anything else is
                        ``no_boundary_context``.

Runs of terminals (``...``, ``?!``) are a single candidate ending at the last
character. Closing quotes and brackets attach to the preceding sentence. Span
offsets are indices into the original string; constituent text is never
normalized. Text with no terminal yields one span covering the trimmed text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

TERMINALS = ".!?…"
_CLOSERS = "\"')’”]}»"
_OPENERS = "\"'(‘“[{«"

SPLIT = "split"
SUPPRESS = "suppress"

_URL_RE = re.compile(
    r"(?:https?://|www\.)[^\s<>\"']+"
    r"|[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}"
)
# Trailing punctuation after a URL belongs to the sentence, not the URL.
_URL_TRAIL = ".,;:!?)]}\"'"

_WORD_CHARS = "&-."


@dataclass(frozen=True)
class Span:
    """One sentence: ``text == passage[start:end]``, whitespace-trimmed."""

    start: int
    end: int
    text: str


@dataclass(frozen=True)
class TraceEntry:
    """Decision for one candidate terminal run starting at ``index``."""

    index: int
    terminal: str
    decision: str
    rule: str


@dataclass(frozen=True)
class _Candidate:
    run_start: int
    run_end: int
    boundary: int  # run end plus attached closing quotes/brackets
    decision: str
    rule: str


def load_abbreviations(path: str | Path) -> frozenset[str]:
    """Read one lowercase abbreviation per line (no trailing period)."""
    entries = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        entry = line.strip().lower().rstrip(".")
        if entry and not entry.startswith("#"):
            entries.add(entry)
    return frozenset(entries)


def _default_abbreviations() -> frozenset[str]:
    text = resources.files("sentagg").joinpath("data/abbreviations.txt").read_text("utf-8")
    entries = {
        line.strip().lower().rstrip(".")
        for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    }
    return frozenset(entries)


class SentenceSegmenter:
    """Immutable rule engine; safe to share across threads once built."""

    def __init__(self, abbreviations: frozenset[str] | None = None):
        self.abbreviations = (
            abbreviations if abbreviations is not None else _default_abbreviations()
        )

    def segment(self, text: str) -> list[Span]:
        """Split ``text`` into non-overlapping, trimmed sentence spans.

        Joining the spans with the original inter-span gaps reproduces the
        input exactly. Raises :class:`ValueError` on empty or whitespace-only
        input.
        """
        candidates = self._candidates(text)
        spans: list[Span] = []
        cursor = 0
        for cand in candidates:
            if cand.decision != SPLIT:
                continue
            span = _trimmed_span(text, cursor, cand.boundary)
            if span is not None:
                spans.append(span)
            cursor = cand.boundary
        tail = _trimmed_span(text, cursor, len(text))
        if tail is not None:
            spans.append(tail)
        return spans

    def rule_trace(self, text: str) -> list[TraceEntry]:
        """One entry per candidate terminal, consistent with :meth:`segment`."""
        return [
            TraceEntry(c.run_start, text[c.run_start : c.run_end], c.decision, c.rule)
            for c in self._candidates(text)
        ]

    def _candidates(self, text: str) -> list[_Candidate]:
        if not text or not text.strip():
            raise ValueError("cannot segment empty or whitespace-only text")
        protected = _protected_intervals(text)
        out = []
        i, n = 0, len(text)
        while i < n:
            if text[i] not in TERMINALS:
                i += 1
                continue
            j = i
            while j < n and text[j] in TERMINALS:
                j += 1
            out.append(self._decide(text, i, j, protected))
            i = j
        return out

    def _decide(
        self, text: str, i: int, j: int, protected: list[tuple[int, int]]
    ) -> _Candidate:
        n = len(text)
        run = text[i:j]

        for start, end in protected:
            if start <= i < end:
                return _Candidate(i, j, j, SUPPRESS, "url")

        if run == "." and 0 < i and text[i - 1].isdigit() and j < n and text[j].isdigit():
            return _Candidate(i, j, j, SUPPRESS, "decimal")

        boundary = j
        while boundary < n and text[boundary] in _CLOSERS:
            boundary += 1
        after = boundary
        while after < n and text[after].isspace():
            after += 1
        if after == n:
            return _Candidate(i, j, boundary, SPLIT, "end_of_text")

        if run == ".":
            token = _preceding_token(text, i)
            if token and token.strip(".").lower() in self.abbreviations:
                return _Candidate(i, j, boundary, SUPPRESS, "abbreviation")
            if len(token) == 1 and token.isalpha() and token.isupper():
                return _Candidate(i, j, boundary, SUPPRESS, "initials")

        if not text[boundary].isspace():
            return _Candidate(i, j, boundary, SUPPRESS, "no_boundary_context")
        lead = text[after]
        if lead in _OPENERS and after + 1 < n:
            lead = text[after + 1]
        if lead.isupper() or lead.isdigit():
            return _Candidate(i, j, boundary, SPLIT, "sentence_start")
        return _Candidate(i, j, boundary, SUPPRESS, "no_boundary_context")


def _preceding_token(text: str, i: int) -> str:
    start = i
    while start > 0 and (text[start - 1].isalnum() or text[start - 1] in _WORD_CHARS):
        start -= 1
    return text[start:i]


def _protected_intervals(text: str) -> list[tuple[int, int]]:
    intervals = []
    for match in _URL_RE.finditer(text):
        end = match.end()
        while end > match.start() and text[end - 1] in _URL_TRAIL:
            end -= 1
        if end > match.start():
            intervals.append((match.start(), end))
    return intervals


def _trimmed_span(text: str, start: int, end: int) -> Span | None:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    if start == end:
        return None
    return Span(start, end, text[start:end])


_DEFAULT_SEGMENTER: SentenceSegmenter | None = None


def _default_segmenter() -> SentenceSegmenter:
    global _DEFAULT_SEGMENTER
    if _DEFAULT_SEGMENTER is None:
        _DEFAULT_SEGMENTER = SentenceSegmenter()
    return _DEFAULT_SEGMENTER


def segment(text: str) -> list[Span]:
    """Segment with the default abbreviation table."""
    return _default_segmenter().segment(text)


def rule_trace(text: str) -> list[TraceEntry]:
    """Trace candidate decisions with the default abbreviation table."""
    return _default_segmenter().rule_trace(text)
