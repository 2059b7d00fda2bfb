"""Divide-and-conquer sentiment analysis for long passages.

Passages are segmented into sentences, each constituent is scored with a
3-class sentiment distribution (negative, neutral, positive), and the
resulting N x 3 score matrix is aggregated back into one passage-level
prediction - by plain averaging, by averaging with opinionless rows
excluded, or by a small trained classifier over summary-statistic features.
"""

from .aggregate import (
    AWON_NEUTRAL_THRESHOLD,
    STRATEGIES,
    Prediction,
    aggregate_average,
    aggregate_awon,
    load_predictions,
    predict,
    predict_all,
    write_predictions,
)
from .classes import CLASS_NAMES, N_CLASSES, NEGATIVE, NEUTRAL, POSITIVE
from .evaluation import (
    DEFAULT_BIN_EDGES,
    BinnedReport,
    ConfusionMatrix,
    EvaluationError,
    ResultRow,
    accuracy,
    binned_report,
    compare_strategies,
    evaluate_predictions,
    macro_f1,
)
from .features import (
    FEATURE_LAYOUT_VERSION,
    N_FEATURES,
    feature_names,
    featurize,
    featurize_batch,
    write_features_csv,
)
from .ingest import (
    DatasetError,
    DatasetSplit,
    LabeledPassage,
    load_dataset,
    split_dataset,
)
from .mlp import (
    GridCell,
    HyperparamGrid,
    MlpHyperparams,
    MlpModel,
    ModelError,
    grid_search,
    load_model,
    loss_and_grad,
    save_model,
    train,
)
from .scorer import (
    ConstituentScore,
    ConstituentScorer,
    FileBackedScorer,
    LexiconScorer,
    ScoreMatrix,
    ScoreMatrixError,
    SentimentDistribution,
    lexicon_score,
    load_score_matrices,
    score_passage,
    write_score_matrices,
)
from .segmenter import SentenceSegmenter, Span, load_abbreviations, rule_trace, segment

__version__ = "0.1.0"

__all__ = [
    "AWON_NEUTRAL_THRESHOLD",
    "CLASS_NAMES",
    "DEFAULT_BIN_EDGES",
    "FEATURE_LAYOUT_VERSION",
    "N_CLASSES",
    "N_FEATURES",
    "NEGATIVE",
    "NEUTRAL",
    "POSITIVE",
    "STRATEGIES",
    "BinnedReport",
    "ConfusionMatrix",
    "ConstituentScore",
    "ConstituentScorer",
    "DatasetError",
    "DatasetSplit",
    "EvaluationError",
    "FileBackedScorer",
    "GridCell",
    "HyperparamGrid",
    "LabeledPassage",
    "LexiconScorer",
    "MlpHyperparams",
    "MlpModel",
    "ModelError",
    "Prediction",
    "ResultRow",
    "ScoreMatrix",
    "ScoreMatrixError",
    "SentenceSegmenter",
    "SentimentDistribution",
    "Span",
    "accuracy",
    "aggregate_average",
    "aggregate_awon",
    "binned_report",
    "compare_strategies",
    "evaluate_predictions",
    "feature_names",
    "featurize",
    "featurize_batch",
    "grid_search",
    "lexicon_score",
    "load_abbreviations",
    "load_dataset",
    "load_model",
    "load_predictions",
    "load_score_matrices",
    "loss_and_grad",
    "macro_f1",
    "predict",
    "predict_all",
    "rule_trace",
    "save_model",
    "score_passage",
    "segment",
    "split_dataset",
    "train",
    "write_features_csv",
    "write_predictions",
    "write_score_matrices",
]
