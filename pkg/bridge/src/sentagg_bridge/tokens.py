"""Token-count augmentation.

Length-binned evaluation needs a ``token_count`` on every passage, counted
with the same tokenizer the scoring model uses. This module rewrites a
dataset with that field filled in. The counter is injectable; the default
loads the named tokenizer lazily.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable

from .errors import BridgeError
from .wire import read_dataset, write_dataset


def transformers_token_counter(
    tokenizer_id: str, revision: str | None = None
) -> Callable[[str], int]:
    """Count tokens with a pretrained tokenizer (no special tokens)."""
    try:
        from transformers import AutoTokenizer
    except ImportError as exc:  # pragma: no cover - environment-specific
        raise BridgeError(
            "the 'transformers' package is required to count model tokens; "
            "install it with 'pip install sentagg-bridge[models]'"
        ) from exc
    tokenizer = AutoTokenizer.from_pretrained(tokenizer_id, revision=revision)

    def count(text: str) -> int:
        return len(tokenizer.encode(text, add_special_tokens=False))

    return count


def bridge_tokens(
    dataset: Path,
    output: Path,
    *,
    tokenizer_id: str,
    revision: str | None = None,
    count_tokens: Callable[[str], int] | None = None,
) -> int:
    """Write ``dataset`` to ``output`` with ``token_count`` set on every row.

    Returns the number of passages written. Any other keys on the records
    (including an existing ``token_count``, which is replaced) pass through
    untouched.
    """
    if count_tokens is None:
        count_tokens = transformers_token_counter(tokenizer_id, revision=revision)
    records = read_dataset(dataset)
    for record in records:
        count = count_tokens(record["text"])
        if not isinstance(count, int) or isinstance(count, bool) or count < 0:
            raise BridgeError(
                f"token counter returned {count!r} for passage {record['id']!r}; "
                "expected a non-negative integer"
            )
        record["token_count"] = count
    write_dataset(output, records)
    return len(records)
