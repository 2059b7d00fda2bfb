"""Command-line interface for the scorer bridge.

Subcommands:

- ``score``       run models over a dataset, write a score-matrix JSONL file
- ``tokens``      rewrite a dataset with model-tokenizer token counts
- ``export-sst``  export SST splits as three-class labeled-passage files
- ``lock``        pin, show, or resolve model revisions

All commands exit 0 on success and 2 on any error, printing a single
``error: ...`` line to stderr so shell pipelines can fail fast.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path

from .backends import backend_from_spec
from .errors import BridgeError
from .jobs import (
    DEFAULT_ASPECT_MODEL,
    DEFAULT_BATCH_SIZE,
    DEFAULT_CLASSIFIER_MODEL,
    DEFAULT_POLARITY_MODEL,
    DEFAULT_TOKENIZER_MODEL,
    MODES,
    BridgeJob,
)
from .lockfile import DEFAULT_LOCK_NAME, pin, read_lock, revision_for, write_lock
from .runner import run_bridge
from .segmenter_client import DEFAULT_SEGMENT_COMMAND
from .sst import DEFAULT_SST_DATASET, SPLITS, export_sst
from .tokens import bridge_tokens, transformers_token_counter


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sentagg-bridge",
        description=(
            "Score passages with pretrained sentiment models and emit "
            "constituent score matrices for the aggregation pipeline."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    score = sub.add_parser(
        "score", help="score a dataset and write a score-matrix JSONL file"
    )
    score.add_argument("--input", required=True, type=Path, help="labeled-passage JSONL")
    score.add_argument("--output", required=True, type=Path, help="score-matrix JSONL to write")
    score.add_argument("--mode", required=True, choices=MODES)
    score.add_argument(
        "--model",
        default=DEFAULT_CLASSIFIER_MODEL,
        help=f"classifier model id (default: {DEFAULT_CLASSIFIER_MODEL})",
    )
    score.add_argument(
        "--aspect-model",
        default=None,
        help=f"aspect-extraction model id for --mode aspect (e.g. {DEFAULT_ASPECT_MODEL})",
    )
    score.add_argument(
        "--polarity-model",
        default=None,
        help=f"aspect-polarity model id for --mode aspect (e.g. {DEFAULT_POLARITY_MODEL})",
    )
    score.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE)
    score.add_argument(
        "--backend",
        default="auto",
        help="'auto' or 'module:attr' naming a backend factory (default: auto)",
    )
    score.add_argument("--lock", type=Path, default=Path(DEFAULT_LOCK_NAME))
    score.add_argument(
        "--allow-unpinned",
        action="store_true",
        help="run models whose revision is not pinned (not reproducible)",
    )
    score.add_argument(
        "--segment-command",
        default=shlex.join(DEFAULT_SEGMENT_COMMAND),
        help="command for the aggregation package CLI (default: sentagg)",
    )
    score.add_argument(
        "--abbrev-file",
        type=Path,
        default=None,
        help="extra abbreviation list passed through to the segmenter",
    )

    tokens = sub.add_parser(
        "tokens", help="rewrite a dataset with model-tokenizer token counts"
    )
    tokens.add_argument("--input", required=True, type=Path)
    tokens.add_argument("--output", required=True, type=Path)
    tokens.add_argument(
        "--tokenizer",
        default=DEFAULT_TOKENIZER_MODEL,
        help=f"tokenizer model id (default: {DEFAULT_TOKENIZER_MODEL})",
    )
    tokens.add_argument(
        "--counter",
        default="auto",
        help="'auto' or 'module:attr' naming a token-counter factory",
    )
    tokens.add_argument("--lock", type=Path, default=Path(DEFAULT_LOCK_NAME))
    tokens.add_argument("--allow-unpinned", action="store_true")

    sst = sub.add_parser(
        "export-sst", help="export SST splits as three-class JSONL datasets"
    )
    sst.add_argument("--output-dir", required=True, type=Path)
    sst.add_argument("--dataset", default=DEFAULT_SST_DATASET)
    sst.add_argument(
        "--from-json",
        type=Path,
        default=None,
        help=(
            "read splits from a local JSON file mapping split name to rows "
            "instead of downloading"
        ),
    )

    lock = sub.add_parser("lock", help="manage pinned model revisions")
    lock.add_argument("--lock", type=Path, default=Path(DEFAULT_LOCK_NAME))
    lock_sub = lock.add_subparsers(dest="lock_command", required=True)
    lock_pin = lock_sub.add_parser("pin", help="record a model revision")
    lock_pin.add_argument("model_id")
    lock_pin.add_argument("revision")
    lock_sub.add_parser("show", help="print the lock file contents")
    lock_resolve = lock_sub.add_parser(
        "resolve", help="look up a model's current revision on the hub and pin it"
    )
    lock_resolve.add_argument("model_id")

    return parser


def cmd_score(args: argparse.Namespace) -> int:
    job = BridgeJob(
        dataset=args.input,
        output=args.output,
        mode=args.mode,
        classifier_model=args.model,
        aspect_model=args.aspect_model,
        polarity_model=args.polarity_model,
        batch_size=args.batch_size,
    )
    lock = read_lock(args.lock)
    revisions = {
        model_id: revision_for(
            lock, model_id, lock_path=args.lock, allow_unpinned=args.allow_unpinned
        )
        for model_id in job.model_ids()
    }
    backend = backend_from_spec(args.backend, job, revisions)
    report = run_bridge(
        job,
        backend,
        segment_command=tuple(shlex.split(args.segment_command)),
        abbrev_file=args.abbrev_file,
    )
    print(report.summary())
    return 0


def cmd_tokens(args: argparse.Namespace) -> int:
    lock = read_lock(args.lock)
    revision = revision_for(
        lock, args.tokenizer, lock_path=args.lock, allow_unpinned=args.allow_unpinned
    )
    if args.counter == "auto":
        counter = transformers_token_counter(args.tokenizer, revision=revision)
    else:
        from .backends import load_factory

        factory = load_factory(args.counter)
        counter = factory(tokenizer_id=args.tokenizer, revision=revision)
    written = bridge_tokens(
        args.input,
        args.output,
        tokenizer_id=args.tokenizer,
        revision=revision,
        count_tokens=counter,
    )
    print(f"counted tokens for {written} passages -> {args.output}")
    return 0


def cmd_export_sst(args: argparse.Namespace) -> int:
    load = None
    if args.from_json is not None:
        try:
            splits = json.loads(args.from_json.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise BridgeError(f"cannot read {args.from_json}: {exc}") from exc
        if not isinstance(splits, dict):
            raise BridgeError("--from-json file must map split names to row lists")
        missing = [s for s in SPLITS if s not in splits]
        if missing:
            raise BridgeError(f"--from-json file is missing splits: {missing}")

        def load(split: str):
            return splits[split]

    written = export_sst(args.output_dir, dataset_id=args.dataset, load=load)
    for split in SPLITS:
        print(f"{split}: {written[split]}")
    return 0


def cmd_lock(args: argparse.Namespace) -> int:
    if args.lock_command == "pin":
        pin(args.lock, args.model_id, args.revision)
        print(f"pinned {args.model_id} @ {args.revision} in {args.lock}")
        return 0
    if args.lock_command == "show":
        lock = read_lock(args.lock)
        if not lock:
            print(f"{args.lock}: no pinned models")
        for model_id in sorted(lock):
            print(f"{model_id} @ {lock[model_id] or '(unpinned)'}")
        return 0
    # resolve
    try:
        from huggingface_hub import HfApi
    except ImportError as exc:
        raise BridgeError(
            "the 'huggingface_hub' package is required to resolve revisions; "
            "install it with 'pip install huggingface_hub'"
        ) from exc
    try:
        info = HfApi().model_info(args.model_id)
    except Exception as exc:  # hub errors are library-specific
        raise BridgeError(f"cannot resolve {args.model_id!r}: {exc}") from exc
    revision = info.sha
    if not revision:
        raise BridgeError(f"hub returned no revision for {args.model_id!r}")
    pin(args.lock, args.model_id, revision)
    print(f"pinned {args.model_id} @ {revision} in {args.lock}")
    return 0


_COMMANDS = {
    "score": cmd_score,
    "tokens": cmd_tokens,
    "export-sst": cmd_export_sst,
    "lock": cmd_lock,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    raise SystemExit(main())
