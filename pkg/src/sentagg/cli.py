"""Command-line surface for the sentiment aggregation pipeline.

Subcommands compose through files rather than in-process chaining, so
externally produced score matrices slot in anywhere a lexicon-scored file
would:

    sentagg segment   split a dataset's passages into sentence spans
    sentagg run       end-to-end passage predictions for one strategy
    sentagg featurize collapse score matrices to 19-float feature vectors
    sentagg train     fit the classifier on train/validation datasets
    sentagg grid      exhaustive hyperparameter search with a CSV report
    sentagg eval      score predictions against gold labels, with reports

Exit codes: 0 success, 2 usage or input validation failure, 1 internal
error. Failure messages are single lines on stderr prefixed ``error:``.
All randomness flows from explicit ``--seed`` flags (default 42).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import evaluation, mlp
from .aggregate import (
    AWON_NEUTRAL_THRESHOLD,
    STRATEGIES,
    load_predictions,
    predict,
    write_predictions,
)
from .features import featurize, write_features_csv
from .ingest import LabeledPassage, load_dataset
from .scorer import (
    LexiconScorer,
    ScoreMatrix,
    load_score_matrices,
    score_passage,
)
from .segmenter import SentenceSegmenter, load_abbreviations

DEFAULT_GRID_SPEC = "h=16,32,64,128,256;tol=1e-2..1e-6;patience=10..50"


class _Parser(argparse.ArgumentParser):
    """argparse with machine-parsable ``error:`` lines and exit code 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(2)


def parse_grid_spec(text: str) -> mlp.HyperparamGrid:
    """Parse a grid string like ``h=16,32,64;tol=1e-2..1e-6;patience=10..50``.

    Each axis is a comma-separated list of values and ranges. A float range
    ``a..b`` steps by decades (multiplying or dividing by 10); an integer
    range steps arithmetically by its start value, or by an explicit
    ``a..b:step``. Both endpoints are inclusive.
    """
    axes: dict[str, str] = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"grid axis {part!r} is not of the form key=values")
        key, _, values = part.partition("=")
        key = key.strip().lower()
        if key not in ("h", "tol", "patience"):
            raise ValueError(f"unknown grid axis {key!r}; expected h, tol, or patience")
        if key in axes:
            raise ValueError(f"grid axis {key!r} given twice")
        axes[key] = values.strip()
    for key in ("h", "tol", "patience"):
        if key not in axes:
            raise ValueError(f"grid specification is missing the {key!r} axis")
    return mlp.HyperparamGrid(
        hidden_sizes=tuple(_parse_int_axis(axes["h"], "h")),
        tolerances=tuple(_parse_float_axis(axes["tol"], "tol")),
        patiences=tuple(_parse_int_axis(axes["patience"], "patience")),
    )


def _parse_int_axis(text: str, name: str) -> list[int]:
    values: list[int] = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            raise ValueError(f"grid axis {name!r} has an empty item")
        if ".." not in item:
            values.append(_parse_int(item, name))
            continue
        span, _, step_text = item.partition(":")
        start_text, _, stop_text = span.partition("..")
        start = _parse_int(start_text, name)
        stop = _parse_int(stop_text, name)
        step = _parse_int(step_text, name) if step_text else start
        if step < 1 or stop < start:
            raise ValueError(f"grid range {item!r} on axis {name!r} cannot step from "
                             f"{start} to {stop} by {step}")
        values.extend(range(start, stop + 1, step))
    return values


def _parse_int(text: str, name: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ValueError(f"grid axis {name!r}: {text.strip()!r} is not an integer") from None


def _parse_float_axis(text: str, name: str) -> list[float]:
    values: list[float] = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            raise ValueError(f"grid axis {name!r} has an empty item")
        if ".." not in item:
            values.append(_parse_float(item, name))
            continue
        start_text, _, stop_text = item.partition("..")
        start = _parse_float(start_text, name)
        stop = _parse_float(stop_text, name)
        if start <= 0 or stop <= 0:
            raise ValueError(f"grid range {item!r} on axis {name!r} must be positive")
        ratio = 10.0 if stop >= start else 0.1
        lo, hi = min(start, stop), max(start, stop)
        value = start
        for _ in range(1000):
            values.append(value)
            if abs(value - stop) <= 1e-9 * max(abs(value), abs(stop)):
                break
            # Snap away accumulated float drift so 1e-2..1e-6 yields exact
            # decade values rather than 1.0000000000000002e-3 etc.
            value = float(f"{value * ratio:.12g}")
            if value < lo * (1 - 1e-9) or value > hi * (1 + 1e-9):
                raise ValueError(
                    f"grid range {item!r} on axis {name!r} never lands on {stop} "
                    "in decade steps"
                )
        else:
            raise ValueError(f"grid range {item!r} on axis {name!r} is too long")
    return values


def _parse_float(text: str, name: str) -> float:
    try:
        value = float(text.strip())
    except ValueError:
        raise ValueError(f"grid axis {name!r}: {text.strip()!r} is not a number") from None
    return value


def _parse_bins(text: str) -> tuple[int, ...]:
    try:
        edges = tuple(int(part.strip()) for part in text.split(",") if part.strip())
    except ValueError:
        raise ValueError(f"--bins must be comma-separated integers, got {text!r}") from None
    if not edges:
        raise ValueError("--bins must list at least one edge")
    return edges


def _segmenter_from(args) -> SentenceSegmenter | None:
    if getattr(args, "abbrev_file", None):
        return SentenceSegmenter(abbreviations=load_abbreviations(args.abbrev_file))
    return None


def _dataset_from(args) -> list[LabeledPassage]:
    return load_dataset(args.input, format=getattr(args, "format", None))


def _matrices_for(
    passages: list[LabeledPassage],
    scores_path: str | None,
    segmenter: SentenceSegmenter | None,
    jobs: int = 1,
) -> list[ScoreMatrix]:
    """One matrix per passage: from a scores file if given, else lexicon-scored."""
    if scores_path:
        stored = load_score_matrices(scores_path)
        missing = [p.id for p in passages if p.id not in stored]
        if missing:
            shown = ", ".join(repr(i) for i in missing[:10])
            raise ValueError(
                f"{len(missing)} passage(s) missing from {scores_path}: {shown}"
            )
        return [stored[p.id] for p in passages]
    scorer = LexiconScorer()
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(
                pool.map(lambda p: score_passage(p, scorer, segmenter), passages)
            )
    return [score_passage(p, scorer, segmenter) for p in passages]


def _examples_for(
    passages: list[LabeledPassage], matrices: list[ScoreMatrix]
) -> list[tuple]:
    return [(featurize(m), p.label) for p, m in zip(passages, matrices)]


def cmd_segment(args) -> int:
    passages = _dataset_from(args)
    segmenter = _segmenter_from(args) or SentenceSegmenter()
    with Path(args.output).open("w", encoding="utf-8", newline="\n") as handle:
        for passage in passages:
            spans = segmenter.segment(passage.text)
            record = {
                "passage_id": passage.id,
                "constituents": [
                    {"text": s.text, "start": s.start, "end": s.end} for s in spans
                ],
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
    print(f"segmented {len(passages)} passage(s) -> {args.output}")
    return 0


def cmd_run(args) -> int:
    if args.strategy == "mlp" and not args.model:
        raise ValueError("strategy 'mlp' requires --model")
    passages = _dataset_from(args)
    matrices = _matrices_for(passages, args.scores, _segmenter_from(args), args.jobs)
    model = mlp.load_model(args.model) if args.model else None
    predictions = [
        predict(m, args.strategy, model=model, threshold=args.threshold)
        for m in matrices
    ]
    write_predictions(args.output, predictions)
    print(f"wrote {len(predictions)} prediction(s) -> {args.output}")
    return 0


def cmd_featurize(args) -> int:
    passages = _dataset_from(args)
    matrices = _matrices_for(passages, args.scores, _segmenter_from(args), args.jobs)
    write_features_csv(
        args.output,
        (
            (passage.id, featurize(matrix), passage.label)
            for passage, matrix in zip(passages, matrices)
        ),
    )
    print(f"featurized {len(passages)} passage(s) -> {args.output}")
    return 0


def _train_examples(args) -> tuple[list, list]:
    segmenter = _segmenter_from(args)
    train_passages = load_dataset(args.input, format=args.format)
    val_passages = load_dataset(args.val, format=args.format)
    train_matrices = _matrices_for(train_passages, args.scores, segmenter)
    val_matrices = _matrices_for(val_passages, args.val_scores, segmenter)
    return (
        _examples_for(train_passages, train_matrices),
        _examples_for(val_passages, val_matrices),
    )


def cmd_train(args) -> int:
    train_set, val_set = _train_examples(args)
    hp = mlp.MlpHyperparams(
        hidden_size=args.hidden,
        early_stop_tolerance=args.tol,
        patience_epochs=args.patience,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        seed=args.seed,
    )
    model = mlp.train(train_set, val_set, hp)
    mlp.save_model(model, args.output)
    best = max(entry[2] for entry in model.training_history)
    print(
        f"trained hidden={args.hidden} tol={args.tol:g} patience={args.patience}: "
        f"best val accuracy {best:.4f} over {len(model.training_history)} epoch(s) "
        f"-> {args.output}"
    )
    return 0


def cmd_grid(args) -> int:
    train_set, val_set = _train_examples(args)
    grid = parse_grid_spec(args.grid)
    best_hp, model, table = mlp.grid_search(
        train_set,
        val_set,
        grid,
        base_seed=args.seed,
        learning_rate=args.lr,
        max_epochs=args.max_epochs,
        jobs=args.jobs,
    )
    mlp.save_model(model, args.output)
    mlp.write_grid_csv(args.grid_output, table)
    best = max(entry[2] for entry in model.training_history)
    print(
        f"searched {len(table)} configuration(s); best hidden={best_hp.hidden_size} "
        f"tol={best_hp.early_stop_tolerance:g} patience={best_hp.patience_epochs} "
        f"val accuracy {best:.4f} -> {args.output}, table -> {args.grid_output}"
    )
    return 0


def cmd_eval(args) -> int:
    passages = _dataset_from(args)
    predictions = load_predictions(args.predictions)
    known = {p.id for p in passages}
    unknown = [p.passage_id for p in predictions if p.passage_id not in known]
    if unknown:
        shown = ", ".join(repr(i) for i in unknown[:10])
        raise ValueError(
            f"{len(unknown)} prediction(s) reference unknown passage ids: {shown}"
        )

    by_strategy: dict[str, list] = {}
    for prediction in predictions:
        by_strategy.setdefault(prediction.strategy, []).append(prediction)

    rows = []
    for strategy in sorted(by_strategy):
        cm = evaluation.evaluate_predictions(passages, by_strategy[strategy])
        rows.append(
            evaluation.ResultRow(
                strategy=strategy,
                dataset=args.dataset_name,
                split=args.split_name,
                n=cm.total,
                accuracy=evaluation.accuracy(cm),
                macro_f1=evaluation.macro_f1(cm),
            )
        )
    evaluation.write_results_csv(args.output, rows)
    for row in rows:
        print(
            f"{row.strategy}: n={row.n} accuracy={row.accuracy:.4f} "
            f"macro_f1={row.macro_f1:.4f}"
        )

    if args.binned_output or args.svg:
        if len(by_strategy) != 1:
            raise ValueError(
                "binned reports need a single-strategy predictions file, "
                f"got strategies {sorted(by_strategy)}"
            )
        (only,) = by_strategy.values()
        by_id = {p.passage_id: p for p in only}
        examples = [(p, by_id[p.id]) for p in passages]
        report = evaluation.binned_report(examples, bin_edges=args.bins)
        if args.binned_output:
            evaluation.write_binned_csv(args.binned_output, report)
            json_path = Path(args.binned_output).with_suffix(".json")
            evaluation.write_binned_json(json_path, report)
            print(f"binned report -> {args.binned_output}, {json_path}")
        if args.svg:
            evaluation.write_binned_svg(args.svg, report)
            print(f"chart -> {args.svg}")
    print(f"results -> {args.output}")
    return 0


def _add_dataset_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="dataset file (JSONL or CSV)")
    parser.add_argument(
        "--format", choices=("csv", "jsonl"), default=None,
        help="dataset format (default: inferred from the file suffix)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sentagg", description=__doc__.split("\n\n")[0])
    commands = parser.add_subparsers(dest="command", required=True)

    segment = commands.add_parser("segment", help="split passages into sentence spans")
    _add_dataset_flags(segment)
    segment.add_argument("--output", required=True, help="constituents JSONL to write")
    segment.add_argument("--abbrev-file", help="override the abbreviation list")
    segment.set_defaults(func=cmd_segment)

    run = commands.add_parser("run", help="produce passage predictions")
    _add_dataset_flags(run)
    run.add_argument("--output", required=True, help="predictions JSONL to write")
    run.add_argument("--scores", help="score-matrix JSONL (default: lexicon scoring)")
    run.add_argument("--strategy", required=True, choices=STRATEGIES)
    run.add_argument("--model", help="model file (required for --strategy mlp)")
    run.add_argument(
        "--threshold", type=float, default=AWON_NEUTRAL_THRESHOLD,
        help="neutral score above which a row is opinionless (default %(default)s)",
    )
    run.add_argument("--abbrev-file", help="override the abbreviation list")
    run.add_argument("--jobs", type=int, default=1, help="scoring threads")
    run.set_defaults(func=cmd_run)

    featurize_cmd = commands.add_parser(
        "featurize", help="write feature vectors for each passage"
    )
    _add_dataset_flags(featurize_cmd)
    featurize_cmd.add_argument(
        "--output", required=True, help="feature CSV to write (passage_id,f0..f18,label)"
    )
    featurize_cmd.add_argument(
        "--scores", help="score-matrix JSONL (default: lexicon scoring)"
    )
    featurize_cmd.add_argument("--abbrev-file", help="override the abbreviation list")
    featurize_cmd.add_argument("--jobs", type=int, default=1, help="scoring threads")
    featurize_cmd.set_defaults(func=cmd_featurize)

    def add_training_flags(sub: argparse.ArgumentParser) -> None:
        _add_dataset_flags(sub)
        sub.add_argument("--val", required=True, help="validation dataset file")
        sub.add_argument("--scores", help="score-matrix JSONL for --input")
        sub.add_argument("--val-scores", help="score-matrix JSONL for --val")
        sub.add_argument("--output", required=True, help="model JSON to write")
        sub.add_argument("--abbrev-file", help="override the abbreviation list")
        sub.add_argument("--seed", type=int, default=42)
        sub.add_argument("--lr", type=float, default=1e-3, help="learning rate")
        sub.add_argument("--max-epochs", type=int, default=200)

    train = commands.add_parser("train", help="fit the classifier once")
    add_training_flags(train)
    train.add_argument("--hidden", type=int, default=128, help="hidden layer size")
    train.add_argument("--tol", type=float, default=1e-6, help="early-stop tolerance")
    train.add_argument("--patience", type=int, default=50, help="early-stop patience")
    train.add_argument("--batch-size", type=int, default=None)
    train.set_defaults(func=cmd_train)

    grid = commands.add_parser("grid", help="exhaustive hyperparameter search")
    add_training_flags(grid)
    grid.add_argument(
        "--grid", default=DEFAULT_GRID_SPEC,
        help="axes as h=...;tol=...;patience=... (default %(default)r)",
    )
    grid.add_argument("--grid-output", required=True, help="search table CSV to write")
    grid.add_argument("--jobs", type=int, default=1, help="parallel grid cells")
    grid.set_defaults(func=cmd_grid)

    eval_cmd = commands.add_parser("eval", help="score predictions against gold labels")
    _add_dataset_flags(eval_cmd)
    eval_cmd.add_argument("--predictions", required=True, help="predictions JSONL")
    eval_cmd.add_argument("--output", required=True, help="results CSV to write")
    eval_cmd.add_argument(
        "--binned-output",
        help="token-length-binned CSV to write (a .json twin is written alongside)",
    )
    eval_cmd.add_argument("--svg", help="accuracy-per-bin SVG chart to write")
    eval_cmd.add_argument(
        "--bins", type=_parse_bins, default=evaluation.DEFAULT_BIN_EDGES,
        help="comma-separated ascending bin edges (default 0,16,32,64,128,256)",
    )
    eval_cmd.add_argument("--dataset-name", default="dataset")
    eval_cmd.add_argument("--split-name", default="test")
    eval_cmd.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error: internal: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
