"""Bridge job configuration.

A job names a dataset, an output path, a constituent mode, the models to run,
and a batch size. Three modes:

- ``sentence``: one row per sentence span, spans produced by the aggregation
  package's own segmenter (invoked through its CLI so splits are identical);
- ``aspect``: one row per detected aspect, via an aspect-extraction +
  polarity model pair;
- ``whole-passage``: a single row per passage — the baseline configuration.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import BridgeError

MODES = ("sentence", "aspect", "whole-passage")

DEFAULT_CLASSIFIER_MODEL = "j-hartmann/sentiment-roberta-large-english-3-classes"
DEFAULT_ASPECT_MODEL = "tomaarsen/setfit-absa-bge-small-en-v1.5-restaurants-aspect"
DEFAULT_POLARITY_MODEL = "tomaarsen/setfit-absa-bge-small-en-v1.5-restaurants-polarity"
DEFAULT_TOKENIZER_MODEL = DEFAULT_CLASSIFIER_MODEL
DEFAULT_BATCH_SIZE = 16


@dataclass(frozen=True)
class BridgeJob:
    """One scoring run over one dataset."""

    dataset: Path
    output: Path
    mode: str
    classifier_model: str = DEFAULT_CLASSIFIER_MODEL
    aspect_model: str | None = None
    polarity_model: str | None = None
    batch_size: int = DEFAULT_BATCH_SIZE

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise BridgeError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.batch_size < 1:
            raise BridgeError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.mode == "aspect" and not (self.aspect_model and self.polarity_model):
            raise BridgeError(
                "mode 'aspect' requires both an aspect-extraction model and a "
                "polarity model"
            )
        if self.mode != "aspect" and not self.classifier_model:
            raise BridgeError(f"mode {self.mode!r} requires a classifier model")

    def model_ids(self) -> tuple[str, ...]:
        """The hub model ids this job loads, in load order."""
        if self.mode == "aspect":
            return (self.aspect_model, self.polarity_model)
        return (self.classifier_model,)
