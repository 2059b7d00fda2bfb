"""Scorer bridge: pretrained sentiment models -> constituent score matrices.

This package feeds the sentence-level aggregation pipeline. It exports
datasets, counts model-tokenizer tokens, and scores passages with hub models,
writing the score-matrix JSONL files the aggregation CLI consumes. It talks
to the aggregation package only through files and its command line, never by
importing it.
"""

from .backends import (
    AspectBackend,
    AspectScore,
    ClassifierBackend,
    SetFitAbsaBackend,
    TransformersClassifierBackend,
    backend_from_spec,
)
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
from .lockfile import read_lock, revision_for, write_lock
from .runner import BridgeReport, run_bridge
from .segmenter_client import segment_with_primary
from .sst import LABEL_REDUCTION, export_sst, reduce_label
from .tokens import bridge_tokens

__version__ = "0.1.0"

__all__ = [
    "AspectBackend",
    "AspectScore",
    "BridgeError",
    "BridgeJob",
    "BridgeReport",
    "ClassifierBackend",
    "DEFAULT_ASPECT_MODEL",
    "DEFAULT_BATCH_SIZE",
    "DEFAULT_CLASSIFIER_MODEL",
    "DEFAULT_POLARITY_MODEL",
    "DEFAULT_TOKENIZER_MODEL",
    "LABEL_REDUCTION",
    "MODES",
    "SetFitAbsaBackend",
    "TransformersClassifierBackend",
    "backend_from_spec",
    "bridge_tokens",
    "export_sst",
    "read_lock",
    "reduce_label",
    "revision_for",
    "run_bridge",
    "segment_with_primary",
    "write_lock",
]
