"""Model revision pinning.

Hub-hosted models drift; score matrices produced from unpinned models are not
comparable across runs. The lock file records one revision hash per model id:

    {"format_version": 1,
     "models": {"org/model": {"revision": "abc123..."}}}

A ``null`` revision means "known but not yet pinned" — useful as a template —
and is treated the same as a missing entry when a pin is required.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

from .errors import BridgeError

LOCK_FORMAT_VERSION = 1
DEFAULT_LOCK_NAME = "bridge.lock"


def read_lock(path: str | Path) -> dict[str, str | None]:
    """Load ``{model_id: revision}`` from a lock file; absent file means empty."""
    path = Path(path)
    if not path.is_file():
        return {}
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BridgeError(f"{path}: corrupt lock file: {exc.msg}") from None
    if not isinstance(document, dict):
        raise BridgeError(f"{path}: corrupt lock file: expected a JSON object")
    version = document.get("format_version")
    if version != LOCK_FORMAT_VERSION:
        raise BridgeError(
            f"{path}: lock format version {version!r} is not supported "
            f"(expected {LOCK_FORMAT_VERSION})"
        )
    models = document.get("models")
    if not isinstance(models, dict):
        raise BridgeError(f"{path}: corrupt lock file: missing 'models' object")
    lock: dict[str, str | None] = {}
    for model_id, entry in models.items():
        if not isinstance(entry, dict) or "revision" not in entry:
            raise BridgeError(
                f"{path}: corrupt lock file: entry for {model_id!r} needs a 'revision'"
            )
        revision = entry["revision"]
        if revision is not None and (not isinstance(revision, str) or not revision):
            raise BridgeError(
                f"{path}: corrupt lock file: revision for {model_id!r} must be a "
                "non-empty string or null"
            )
        lock[model_id] = revision
    return lock


def write_lock(path: str | Path, lock: Mapping[str, str | None]) -> None:
    """Write the lock file with models sorted by id."""
    document = {
        "format_version": LOCK_FORMAT_VERSION,
        "models": {
            model_id: {"revision": lock[model_id]} for model_id in sorted(lock)
        },
    }
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        json.dump(document, handle, indent=2)
        handle.write("\n")


def pin(path: str | Path, model_id: str, revision: str) -> None:
    """Set one model's revision, creating the lock file if needed."""
    if not model_id or not revision:
        raise BridgeError("pin requires a model id and a revision")
    lock = read_lock(path)
    lock[model_id] = revision
    write_lock(path, lock)


def revision_for(
    lock: Mapping[str, str | None],
    model_id: str,
    *,
    lock_path: str | Path,
    allow_unpinned: bool = False,
) -> str | None:
    """The pinned revision for ``model_id``, or an error when pinning is required.

    With ``allow_unpinned=True`` a missing or null entry yields ``None``
    (meaning "latest"), which makes runs non-reproducible and is for
    exploration only.
    """
    revision = lock.get(model_id)
    if revision is None and not allow_unpinned:
        raise BridgeError(
            f"model {model_id!r} has no pinned revision in {lock_path}; "
            f"pin one with: sentagg-bridge lock pin {model_id} <revision> "
            "(or pass --allow-unpinned for a non-reproducible run)"
        )
    return revision
