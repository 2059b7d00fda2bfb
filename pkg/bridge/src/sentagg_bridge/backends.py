"""Model backends.

A backend turns text into three-class sentiment scores. Two flavors exist:

- :class:`ClassifierBackend` — scores each text directly (used by the
  ``sentence`` and ``whole-passage`` modes);
- :class:`AspectBackend` — extracts aspect terms from each text and scores
  each term in context (used by the ``aspect`` mode), plus a whole-text
  fallback for passages in which no aspect is detected.

The real implementations wrap third-party model runtimes and import them
lazily, so the bridge package itself has no heavyweight dependencies. Tests
(and callers who want custom scoring) can inject any object satisfying the
same interface via a ``module:attr`` backend spec.
"""

from __future__ import annotations

import importlib
from dataclasses import dataclass
from typing import Callable, Mapping, Protocol, Sequence, runtime_checkable

from .errors import BridgeError
from .jobs import BridgeJob

# Column order of every score triple: (negative, neutral, positive).
LABEL_COLUMNS: Mapping[str, int] = {"negative": 0, "neutral": 1, "positive": 2}


@dataclass(frozen=True)
class AspectScore:
    """One scored aspect term within a passage."""

    term: str
    scores: tuple[float, float, float]


@runtime_checkable
class ClassifierBackend(Protocol):
    """Scores whole texts; one (negative, neutral, positive) triple each."""

    def score_texts(
        self, texts: Sequence[str]
    ) -> list[tuple[float, float, float]]: ...


@runtime_checkable
class AspectBackend(Protocol):
    """Extracts and scores aspect terms; falls back to whole-text scores."""

    def extract_aspects(self, texts: Sequence[str]) -> list[list[AspectScore]]: ...

    def score_whole_text(self, text: str) -> tuple[float, float, float]: ...


def column_for_label(label: str) -> int:
    """Map a model's label name onto the fixed column order."""
    key = label.strip().lower()
    if key not in LABEL_COLUMNS:
        raise BridgeError(
            f"model produced unmapped label {label!r}; expected one of "
            f"{sorted(LABEL_COLUMNS)}"
        )
    return LABEL_COLUMNS[key]


def scores_from_label_list(items: Sequence[Mapping]) -> tuple[float, float, float]:
    """Convert ``[{'label': ..., 'score': ...}, ...]`` into a column triple."""
    scores = [0.0, 0.0, 0.0]
    seen = set()
    for item in items:
        col = column_for_label(str(item["label"]))
        if col in seen:
            raise BridgeError(f"model repeated label {item['label']!r} in one result")
        seen.add(col)
        scores[col] = float(item["score"])
    if seen != {0, 1, 2}:
        missing = sorted(name for name, col in LABEL_COLUMNS.items() if col not in seen)
        raise BridgeError(f"model result is missing labels: {missing}")
    return (scores[0], scores[1], scores[2])


class TransformersClassifierBackend:
    """Text classification through a ``transformers`` pipeline.

    The pipeline is constructed on first use so that importing this module
    never requires ``torch``/``transformers`` to be installed.
    """

    def __init__(self, model_id: str, revision: str | None = None) -> None:
        self.model_id = model_id
        self.revision = revision
        self._pipeline = None

    def _load(self):
        if self._pipeline is None:
            try:
                from transformers import pipeline
            except ImportError as exc:  # pragma: no cover - environment-specific
                raise BridgeError(
                    "the 'transformers' and 'torch' packages are required to "
                    "run classifier models; install them with "
                    "'pip install sentagg-bridge[models]'"
                ) from exc
            self._pipeline = pipeline(
                "text-classification",
                model=self.model_id,
                revision=self.revision,
                top_k=None,
            )
        return self._pipeline

    def score_texts(self, texts: Sequence[str]) -> list[tuple[float, float, float]]:
        pipe = self._load()
        results = pipe(list(texts))
        return [scores_from_label_list(items) for items in results]


class SetFitAbsaBackend:
    """Aspect extraction + polarity scoring through a SetFit ABSA model pair.

    Lazily imports ``setfit``; like the classifier backend, constructing this
    object is free and the model loads on first call.
    """

    def __init__(
        self,
        aspect_model_id: str,
        polarity_model_id: str,
        aspect_revision: str | None = None,
        polarity_revision: str | None = None,
    ) -> None:
        self.aspect_model_id = aspect_model_id
        self.polarity_model_id = polarity_model_id
        self.aspect_revision = aspect_revision
        self.polarity_revision = polarity_revision
        self._model = None

    def _load(self):
        if self._model is None:
            try:
                from setfit import AbsaModel
            except ImportError as exc:
                raise BridgeError(
                    "the 'setfit' package is required to run aspect models; "
                    "install it with 'pip install sentagg-bridge[models]'"
                ) from exc
            self._model = AbsaModel.from_pretrained(
                self.aspect_model_id,
                self.polarity_model_id,
                revision=self.aspect_revision,
                polarity_revision=self.polarity_revision,
            )
        return self._model

    def extract_aspects(self, texts: Sequence[str]) -> list[list[AspectScore]]:
        model = self._load()
        predictions = model.predict(list(texts))
        results: list[list[AspectScore]] = []
        for per_text in predictions:
            aspects: list[AspectScore] = []
            for item in per_text:
                term = str(item["span"])
                polarity = str(item["polarity"]).strip().lower()
                col = column_for_label(polarity)
                # SetFit polarity heads emit a hard label, not a distribution;
                # encode it as a one-hot row.
                scores = [0.0, 0.0, 0.0]
                scores[col] = 1.0
                aspects.append(AspectScore(term, (scores[0], scores[1], scores[2])))
            results.append(aspects)
        return results

    def score_whole_text(self, text: str) -> tuple[float, float, float]:
        # Aspect models score terms, not passages; a passage with no detected
        # aspect carries no polarity signal, so the fallback row is neutral.
        return (0.0, 1.0, 0.0)


def backend_from_spec(
    spec: str,
    job: BridgeJob,
    revisions: Mapping[str, str | None],
):
    """Build the backend named by ``spec``.

    ``"auto"`` selects the standard backend for the job's mode. Any other
    value must be ``module:attr`` naming a factory callable, which is invoked
    as ``factory(job=job, revisions=revisions)`` and must return an object
    implementing the interface the mode needs.
    """
    if spec == "auto":
        if job.mode == "aspect":
            return SetFitAbsaBackend(
                job.aspect_model,
                job.polarity_model,
                aspect_revision=revisions.get(job.aspect_model),
                polarity_revision=revisions.get(job.polarity_model),
            )
        return TransformersClassifierBackend(
            job.classifier_model, revision=revisions.get(job.classifier_model)
        )

    factory = load_factory(spec)
    backend = factory(job=job, revisions=dict(revisions))
    required = AspectBackend if job.mode == "aspect" else ClassifierBackend
    if not isinstance(backend, required):
        raise BridgeError(
            f"backend {spec!r} does not implement the interface required by "
            f"mode {job.mode!r} ({required.__name__})"
        )
    return backend


def load_factory(spec: str) -> Callable:
    """Resolve a ``module:attr`` dotted path to a callable."""
    module_name, sep, attr = spec.partition(":")
    if not sep or not module_name or not attr:
        raise BridgeError(
            f"backend spec must be 'auto' or 'module:attr', got {spec!r}"
        )
    try:
        module = importlib.import_module(module_name)
    except ImportError as exc:
        raise BridgeError(f"cannot import backend module {module_name!r}: {exc}") from exc
    target = module
    for part in attr.split("."):
        try:
            target = getattr(target, part)
        except AttributeError as exc:
            raise BridgeError(
                f"backend module {module_name!r} has no attribute {attr!r}"
            ) from exc
    if not callable(target):
        raise BridgeError(f"backend spec {spec!r} does not name a callable")
    return target
