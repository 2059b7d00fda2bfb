"""Client for the aggregation package's sentence segmenter.

Sentence-mode constituents must be byte-for-byte identical to the spans the
aggregation package would produce for the same passage, so the bridge never
re-implements splitting: it shells out to the ``sentagg segment`` command and
parses the JSONL it emits. The command is injectable for tests and for
installations where the CLI lives under a different name.
"""

from __future__ import annotations

import json
import subprocess
import tempfile
from pathlib import Path
from typing import Sequence

from .errors import BridgeError

DEFAULT_SEGMENT_COMMAND: tuple[str, ...] = ("sentagg",)


def segment_with_primary(
    dataset: Path,
    *,
    command: Sequence[str] = DEFAULT_SEGMENT_COMMAND,
    abbrev_file: Path | None = None,
) -> dict[str, list[str]]:
    """Return ``{passage_id: [constituent text, ...]}`` for every passage.

    ``dataset`` is a labeled-passage JSONL file; it is handed to the segment
    command unmodified so the spans are exactly what the aggregation pipeline
    itself would consume.
    """
    with tempfile.TemporaryDirectory(prefix="sentagg-bridge-") as tmp:
        out_path = Path(tmp) / "segments.jsonl"
        argv = [*command, "segment", "--input", str(dataset), "--output", str(out_path)]
        if abbrev_file is not None:
            argv.extend(["--abbrev-file", str(abbrev_file)])
        try:
            proc = subprocess.run(argv, capture_output=True, text=True)
        except FileNotFoundError as exc:
            raise BridgeError(
                f"segment command not found: {command[0]!r}; is the "
                "aggregation package installed?"
            ) from exc
        if proc.returncode != 0:
            detail = proc.stderr.strip().splitlines()
            excerpt = detail[-1] if detail else "(no stderr)"
            raise BridgeError(
                f"segment command failed with exit code {proc.returncode}: {excerpt}"
            )
        return _parse_segments(out_path)


def _parse_segments(path: Path) -> dict[str, list[str]]:
    segments: dict[str, list[str]] = {}
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BridgeError(
                    f"segment output line {line_no} is not valid JSON: {exc}"
                ) from exc
            try:
                passage_id = record["passage_id"]
                constituents = [c["text"] for c in record["constituents"]]
            except (KeyError, TypeError) as exc:
                raise BridgeError(
                    f"segment output line {line_no} is missing expected keys"
                ) from exc
            if passage_id in segments:
                raise BridgeError(
                    f"segment output repeats passage id {passage_id!r}"
                )
            segments[passage_id] = constituents
    return segments
