"""Stanford Sentiment Treebank export.

SST labels phrases on a five-point scale; the aggregation pipeline is
three-class. The reduction collapses the two negative grades and the two
positive grades:

    0 (very negative), 1 (negative)  -> 0 (negative)
    2 (neutral)                      -> 1 (neutral)
    3 (positive), 4 (very positive)  -> 2 (positive)

The exporter writes one labeled-passage JSONL file per split. The dataset
loader is injectable so the export logic is testable without network access;
the default pulls the five-class SST release from the hub.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Iterable, Mapping

from .errors import BridgeError
from .wire import write_dataset

DEFAULT_SST_DATASET = "SetFit/sst5"
SPLITS = ("train", "validation", "test")

LABEL_REDUCTION = {0: 0, 1: 0, 2: 1, 3: 2, 4: 2}


def reduce_label(raw: int) -> int:
    """Collapse a five-class SST label to three classes."""
    if raw not in LABEL_REDUCTION:
        raise BridgeError(f"SST label must be 0..4, got {raw!r}")
    return LABEL_REDUCTION[raw]


def hub_loader(dataset_id: str) -> Callable[[str], Iterable[Mapping]]:
    """Split loader backed by the hub ``datasets`` library."""
    try:
        from datasets import load_dataset
    except ImportError as exc:  # pragma: no cover - environment-specific
        raise BridgeError(
            "the 'datasets' package is required to download SST; install it "
            "with 'pip install sentagg-bridge[data]'"
        ) from exc

    def load(split: str) -> Iterable[Mapping]:
        return load_dataset(dataset_id, split=split)

    return load


def export_sst(
    output_dir: Path,
    *,
    dataset_id: str = DEFAULT_SST_DATASET,
    load: Callable[[str], Iterable[Mapping]] | None = None,
) -> dict[str, Path]:
    """Export train/validation/test splits as labeled-passage JSONL files.

    Each source row must carry ``text`` and a five-class ``label``. Returns
    ``{split: written path}``.
    """
    if load is None:
        load = hub_loader(dataset_id)
    output_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    for split in SPLITS:
        records = []
        for index, row in enumerate(load(split)):
            try:
                text = row["text"]
                raw_label = row["label"]
            except (KeyError, TypeError) as exc:
                raise BridgeError(
                    f"SST split {split!r} row {index} is missing 'text'/'label'"
                ) from exc
            if isinstance(raw_label, bool) or not isinstance(raw_label, int):
                raise BridgeError(
                    f"SST split {split!r} row {index} label must be an "
                    f"integer, got {raw_label!r}"
                )
            records.append(
                {
                    "id": f"sst5-{split}-{index:05d}",
                    "text": str(text),
                    "label": reduce_label(raw_label),
                }
            )
        if not records:
            raise BridgeError(f"SST split {split!r} is empty")
        path = output_dir / f"sst-{split}.jsonl"
        write_dataset(path, records)
        written[split] = path
    return written
