"""Summary-statistic features over a passage's score matrix.

A score matrix of N rows collapses to a fixed 19-float vector: six statistics
per class column, in class order (negative, neutral, positive), plus the row
count. For class c the block occupies positions [6c, 6c+5]:

    mean, min, max, std, range, argmax_count

``std`` is the population standard deviation (divide by N). ``argmax_count``
is the number of rows whose largest score is class c, with ties awarded to
the lowest class index. Position 18 is N itself.

``FEATURE_LAYOUT_VERSION`` identifies this layout in persisted models; bump
it if the ordering or definitions ever change.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable

import numpy as np

from .classes import CLASS_NAMES, N_CLASSES
from .scorer import ScoreMatrix

FEATURE_LAYOUT_VERSION = 1
N_FEATURES = 19

_STAT_NAMES = ("mean", "min", "max", "std", "range", "argmax_count")


def feature_names() -> list[str]:
    """Names for each position, e.g. ``negative_mean`` ... ``n_constituents``."""
    names = [f"{cls}_{stat}" for cls in CLASS_NAMES for stat in _STAT_NAMES]
    names.append("n_constituents")
    return names


def featurize(matrix: ScoreMatrix) -> np.ndarray:
    """Collapse one score matrix to its 19-float feature vector."""
    values = matrix.values()
    # np.argmax already awards ties to the lowest index.
    argmax = np.argmax(values, axis=1)
    features = np.empty(N_FEATURES, dtype=float)
    for c in range(N_CLASSES):
        column = values[:, c]
        lo = float(column.min())
        hi = float(column.max())
        features[6 * c : 6 * c + 6] = (
            float(column.mean()),
            lo,
            hi,
            float(column.std()),
            hi - lo,
            float(np.count_nonzero(argmax == c)),
        )
    features[18] = float(matrix.n)
    return features


def featurize_batch(matrices: list[ScoreMatrix]) -> np.ndarray:
    """Stack feature vectors for many matrices into an (M, 19) array."""
    if not matrices:
        return np.empty((0, N_FEATURES), dtype=float)
    return np.stack([featurize(matrix) for matrix in matrices])


def write_features_csv(
    path: str | Path, rows: Iterable[tuple[str, np.ndarray, int]]
) -> None:
    """Dump (passage_id, features, label) rows as CSV for inspection or reuse."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["passage_id"] + [f"f{i}" for i in range(N_FEATURES)] + ["label"])
        for passage_id, features, label in rows:
            writer.writerow([passage_id] + [repr(float(v)) for v in features] + [label])
