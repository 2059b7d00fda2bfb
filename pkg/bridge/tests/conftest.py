import json
import shutil
from pathlib import Path

import pytest

PASSAGES = [
    {"id": "p-good", "text": "The coffee was great. Service was terrible.", "label": 2},
    {"id": "p-flat", "text": "it opened at nine and closed at five", "label": 1},
    {"id": "p-bad", "text": "Awful. Just awful! The Staff seemed bored.", "label": 0},
]


@pytest.fixture()
def dataset(tmp_path: Path) -> Path:
    path = tmp_path / "dataset.jsonl"
    with path.open("w", encoding="utf-8") as handle:
        for record in PASSAGES:
            handle.write(json.dumps(record) + "\n")
    return path


@pytest.fixture()
def sentagg_cli() -> list[str]:
    """Command for the aggregation package CLI; skip if not installed."""
    exe = shutil.which("sentagg")
    if exe is None:
        pytest.skip("the 'sentagg' command is not installed")
    return [exe]
