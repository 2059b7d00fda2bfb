"""Single-hidden-layer sentiment classifier, trained with plain numpy.

The network maps a standardized 19-float feature vector through one relu
hidden layer to 3 class logits:

    z      = (x - feature_means) / feature_stds
    h      = relu(W1 @ z + b1)          W1: (hidden_size, 19)
    logits = W2 @ h + b2                W2: (3, hidden_size)
    p      = softmax(logits)            (max-subtracted for stability)

Training is adaptive-moment (Adam) stochastic gradient descent on mean
cross-entropy over shuffled mini-batches, with early stopping on validation
accuracy: an epoch whose accuracy is below ``best + tolerance`` increments a
no-improvement counter, any other epoch resets it, and training halts once
the counter reaches ``patience_epochs`` (or at ``max_epochs``). Weights are
snapshotted whenever validation accuracy strictly improves, and the returned
model carries the best-epoch weights, so training never continues more than
``patience_epochs`` past the best validation epoch.

All randomness (weight init, shuffles) flows from one counter-based Philox
generator per run, so a fixed seed reproduces training bit-for-bit.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .classes import N_CLASSES
from .features import FEATURE_LAYOUT_VERSION, N_FEATURES

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

STD_CLAMP = 1e-8

_PARAM_NAMES = ("W1", "b1", "W2", "b2")


class ModelError(ValueError):
    """A model file or hyperparameter set violates the model contract."""


@dataclass(frozen=True)
class MlpHyperparams:
    """Training configuration. ``batch_size=None`` means min(200, |train|)."""

    hidden_size: int
    early_stop_tolerance: float
    patience_epochs: int
    learning_rate: float = 1e-3
    batch_size: int | None = None
    max_epochs: int = 200
    seed: int = 42

    def __post_init__(self) -> None:
        if self.hidden_size < 1:
            raise ModelError(f"hidden_size must be >= 1, got {self.hidden_size}")
        if not self.early_stop_tolerance > 0:
            raise ModelError(
                f"early_stop_tolerance must be > 0, got {self.early_stop_tolerance}"
            )
        if self.patience_epochs < 1:
            raise ModelError(f"patience_epochs must be >= 1, got {self.patience_epochs}")
        if not self.learning_rate > 0:
            raise ModelError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ModelError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ModelError(f"max_epochs must be >= 1, got {self.max_epochs}")


@dataclass
class MlpModel:
    """Weights, input scaler, and provenance for one trained network."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    feature_means: np.ndarray
    feature_stds: np.ndarray
    hyperparams: MlpHyperparams
    feature_layout_version: int = FEATURE_LAYOUT_VERSION
    training_history: list[tuple[int, float, float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        hidden = self.hyperparams.hidden_size
        shapes = {
            "W1": (self.W1.shape, (hidden, N_FEATURES)),
            "b1": (self.b1.shape, (hidden,)),
            "W2": (self.W2.shape, (N_CLASSES, hidden)),
            "b2": (self.b2.shape, (N_CLASSES,)),
            "feature_means": (self.feature_means.shape, (N_FEATURES,)),
            "feature_stds": (self.feature_stds.shape, (N_FEATURES,)),
        }
        for name, (got, want) in shapes.items():
            if got != want:
                raise ModelError(f"{name} has shape {got}, expected {want}")
        if not (self.feature_stds > 0).all():
            raise ModelError("feature_stds must be strictly positive")

    def _check_layout(self) -> None:
        if self.feature_layout_version != FEATURE_LAYOUT_VERSION:
            raise ModelError(
                f"model uses feature layout {self.feature_layout_version}, "
                f"this build expects {FEATURE_LAYOUT_VERSION}"
            )

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Class distributions for an (M, 19) batch of raw feature vectors."""
        self._check_layout()
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != N_FEATURES:
            raise ModelError(f"expected (M, {N_FEATURES}) features, got {X.shape}")
        Z = (X - self.feature_means) / self.feature_stds
        H = np.maximum(Z @ self.W1.T + self.b1, 0.0)
        logits = H @ self.W2.T + self.b2
        shifted = logits - logits.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        return exp / exp.sum(axis=1, keepdims=True)

    def forward(self, features: np.ndarray) -> np.ndarray:
        """Class distribution for one raw 19-float feature vector."""
        features = np.asarray(features, dtype=float)
        if features.shape != (N_FEATURES,):
            raise ModelError(f"expected a {N_FEATURES}-float vector, got {features.shape}")
        return self.predict_proba(features[None, :])[0]

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Argmax labels for an (M, 19) batch; ties go to the lowest class."""
        return np.argmax(self.predict_proba(X), axis=1)


def _as_arrays(
    examples: Sequence[tuple[np.ndarray, int]], name: str
) -> tuple[np.ndarray, np.ndarray]:
    if not examples:
        raise ModelError(f"{name} set must be non-empty")
    X = np.asarray([np.asarray(f, dtype=float) for f, _ in examples])
    y = np.asarray([int(label) for _, label in examples])
    if X.ndim != 2 or X.shape[1] != N_FEATURES:
        raise ModelError(f"{name} features must be {N_FEATURES}-float vectors")
    if ((y < 0) | (y >= N_CLASSES)).any():
        raise ModelError(f"{name} labels must be in [0, {N_CLASSES})")
    return X, y


def _cross_entropy(logits: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(exp.sum(axis=1, keepdims=True))
    n = logits.shape[0]
    loss = -log_probs[np.arange(n), y].mean()
    dlogits = probs
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    return float(loss), dlogits


def loss_and_grad(
    model: MlpModel, batch: Sequence[tuple[np.ndarray, int]]
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy over a batch and exact analytic gradients.

    Gradients come back keyed by parameter name with the parameter's shape.
    """
    X, y = _as_arrays(batch, "batch")
    Z = (X - model.feature_means) / model.feature_stds
    return _loss_and_grad_standardized(model.W1, model.b1, model.W2, model.b2, Z, y)


def _loss_and_grad_standardized(
    W1: np.ndarray,
    b1: np.ndarray,
    W2: np.ndarray,
    b2: np.ndarray,
    Z: np.ndarray,
    y: np.ndarray,
) -> tuple[float, dict[str, np.ndarray]]:
    pre = Z @ W1.T + b1
    H = np.maximum(pre, 0.0)
    logits = H @ W2.T + b2
    loss, dlogits = _cross_entropy(logits, y)
    dW2 = dlogits.T @ H
    db2 = dlogits.sum(axis=0)
    dH = dlogits @ W2
    dpre = dH * (pre > 0.0)
    dW1 = dpre.T @ Z
    db1 = dpre.sum(axis=0)
    return loss, {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2}


def _init_params(hidden_size: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Uniform +/- sqrt(6 / (fan_in + fan_out)) weights, zero biases."""
    limit1 = np.sqrt(6.0 / (N_FEATURES + hidden_size))
    limit2 = np.sqrt(6.0 / (hidden_size + N_CLASSES))
    return {
        "W1": rng.uniform(-limit1, limit1, size=(hidden_size, N_FEATURES)),
        "b1": np.zeros(hidden_size),
        "W2": rng.uniform(-limit2, limit2, size=(N_CLASSES, hidden_size)),
        "b2": np.zeros(N_CLASSES),
    }


def train(
    train_set: Sequence[tuple[np.ndarray, int]],
    val_set: Sequence[tuple[np.ndarray, int]],
    hp: MlpHyperparams,
) -> MlpModel:
    """Fit a network on ``train_set``, early-stopping on ``val_set`` accuracy."""
    X_train, y_train = _as_arrays(train_set, "train")
    X_val, y_val = _as_arrays(val_set, "validation")
    if len(np.unique(y_train)) < 2:
        raise ModelError("training set must contain at least 2 distinct labels")

    means = X_train.mean(axis=0)
    stds = np.maximum(X_train.std(axis=0), STD_CLAMP)
    Z_train = (X_train - means) / stds

    n = len(X_train)
    batch_size = hp.batch_size if hp.batch_size is not None else min(200, n)
    hp = replace(hp, batch_size=batch_size)

    rng = np.random.Generator(np.random.Philox(hp.seed))
    params = _init_params(hp.hidden_size, rng)
    moments1 = {name: np.zeros_like(p) for name, p in params.items()}
    moments2 = {name: np.zeros_like(p) for name, p in params.items()}
    step = 0

    model = MlpModel(
        W1=params["W1"],
        b1=params["b1"],
        W2=params["W2"],
        b2=params["b2"],
        feature_means=means,
        feature_stds=stds,
        hyperparams=hp,
    )

    best_accuracy = -np.inf
    best_params = {name: p.copy() for name, p in params.items()}
    no_improvement = 0
    history: list[tuple[int, float, float]] = []

    for epoch in range(1, hp.max_epochs + 1):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            loss, grads = _loss_and_grad_standardized(
                params["W1"], params["b1"], params["W2"], params["b2"],
                Z_train[idx], y_train[idx],
            )
            epoch_loss += loss * len(idx)
            step += 1
            for name in _PARAM_NAMES:
                moments1[name] = ADAM_BETA1 * moments1[name] + (1 - ADAM_BETA1) * grads[name]
                moments2[name] = ADAM_BETA2 * moments2[name] + (1 - ADAM_BETA2) * grads[name] ** 2
                m_hat = moments1[name] / (1 - ADAM_BETA1**step)
                v_hat = moments2[name] / (1 - ADAM_BETA2**step)
                params[name] = params[name] - hp.learning_rate * m_hat / (
                    np.sqrt(v_hat) + ADAM_EPS
                )
        model.W1, model.b1 = params["W1"], params["b1"]
        model.W2, model.b2 = params["W2"], params["b2"]
        val_accuracy = float((model.predict(X_val) == y_val).mean())
        history.append((epoch, epoch_loss / n, val_accuracy))

        if val_accuracy < best_accuracy + hp.early_stop_tolerance:
            no_improvement += 1
        else:
            no_improvement = 0
        if val_accuracy > best_accuracy:
            best_accuracy = val_accuracy
            best_params = {name: p.copy() for name, p in params.items()}
        if no_improvement >= hp.patience_epochs:
            break

    model.W1, model.b1 = best_params["W1"], best_params["b1"]
    model.W2, model.b2 = best_params["W2"], best_params["b2"]
    model.training_history = history
    return model


@dataclass(frozen=True)
class GridCell:
    """One grid-search configuration and its outcome."""

    hidden_size: int
    tolerance: float
    patience: int
    val_accuracy: float
    epochs_run: int


@dataclass(frozen=True)
class HyperparamGrid:
    """Axes of an exhaustive grid search."""

    hidden_sizes: tuple[int, ...]
    tolerances: tuple[float, ...]
    patiences: tuple[int, ...]

    def __post_init__(self) -> None:
        for name in ("hidden_sizes", "tolerances", "patiences"):
            if not getattr(self, name):
                raise ModelError(f"grid axis {name} must be non-empty")

    def cells(self) -> list[tuple[int, float, int]]:
        """All combinations, ordered hidden-major then tolerance then patience."""
        return list(
            itertools.product(self.hidden_sizes, self.tolerances, self.patiences)
        )


def grid_search(
    train_set: Sequence[tuple[np.ndarray, int]],
    val_set: Sequence[tuple[np.ndarray, int]],
    grid: HyperparamGrid,
    base_seed: int = 42,
    learning_rate: float = 1e-3,
    max_epochs: int = 200,
    jobs: int = 1,
) -> tuple[MlpHyperparams, MlpModel, list[GridCell]]:
    """Train every grid combination and keep the best validation accuracy.

    Cell ``i`` trains with seed ``base_seed + i`` so cells are independent
    and the whole search is reproducible: with ``jobs > 1`` cells run on a
    thread pool, but the result table stays in cell order and the winner is
    identical. Ties break toward smaller hidden size, then larger tolerance,
    then smaller patience. A cell whose training fails is recorded with
    accuracy -1 and does not abort the search.
    """
    cells = grid.cells()

    def run_cell(index: int) -> tuple[GridCell, MlpModel | None]:
        hidden, tolerance, patience = cells[index]
        hp = MlpHyperparams(
            hidden_size=hidden,
            early_stop_tolerance=tolerance,
            patience_epochs=patience,
            learning_rate=learning_rate,
            max_epochs=max_epochs,
            seed=base_seed + index,
        )
        try:
            model = train(train_set, val_set, hp)
        except Exception as exc:
            logger.warning(
                "grid cell %d (hidden=%d tol=%g patience=%d) failed: %s",
                index, hidden, tolerance, patience, exc,
            )
            return GridCell(hidden, tolerance, patience, -1.0, 0), None
        accuracy = max(entry[2] for entry in model.training_history)
        cell = GridCell(
            hidden, tolerance, patience, accuracy, len(model.training_history)
        )
        return cell, model

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run_cell, range(len(cells))))
    else:
        outcomes = [run_cell(index) for index in range(len(cells))]

    table = [cell for cell, _ in outcomes]
    best_key = None
    best_model: MlpModel | None = None
    for cell, model in outcomes:
        if model is None:
            continue
        key = (-cell.val_accuracy, cell.hidden_size, -cell.tolerance, cell.patience)
        if best_key is None or key < best_key:
            best_key = key
            best_model = model
    if best_model is None:
        raise ModelError("every grid cell failed to train")
    return best_model.hyperparams, best_model, table


def write_grid_csv(path: str | Path, table: Iterable[GridCell]) -> None:
    """Write the grid-search report in cell order."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["hidden_size", "tolerance", "patience", "val_accuracy", "epochs_run"])
        for cell in table:
            writer.writerow(
                [cell.hidden_size, repr(cell.tolerance), cell.patience,
                 repr(cell.val_accuracy), cell.epochs_run]
            )


def save_model(model: MlpModel, path: str | Path) -> None:
    """Write a model as versioned JSON; floats round-trip exactly."""
    hp = model.hyperparams
    document = {
        "format_version": MODEL_FORMAT_VERSION,
        "feature_layout_version": model.feature_layout_version,
        "hyperparams": {
            "hidden_size": hp.hidden_size,
            "early_stop_tolerance": hp.early_stop_tolerance,
            "patience_epochs": hp.patience_epochs,
            "learning_rate": hp.learning_rate,
            "batch_size": hp.batch_size,
            "max_epochs": hp.max_epochs,
            "seed": hp.seed,
        },
        "feature_means": model.feature_means.tolist(),
        "feature_stds": model.feature_stds.tolist(),
        "W1": model.W1.tolist(),
        "b1": model.b1.tolist(),
        "W2": model.W2.tolist(),
        "b2": model.b2.tolist(),
        "training_history": [list(entry) for entry in model.training_history],
    }
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        json.dump(document, handle)
        handle.write("\n")


def load_model(path: str | Path) -> MlpModel:
    """Read a model written by :func:`save_model`, validating version and shapes."""
    path = Path(path)
    if not path.is_file():
        raise ModelError(f"model file not found: {path}")
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: corrupt model file: {exc.msg}") from None
    if not isinstance(document, dict):
        raise ModelError(f"{path}: corrupt model file: expected a JSON object")
    version = document.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelError(
            f"{path}: model format version {version!r} is not supported "
            f"(expected {MODEL_FORMAT_VERSION})"
        )
    layout = document.get("feature_layout_version")
    if layout != FEATURE_LAYOUT_VERSION:
        raise ModelError(
            f"{path}: model uses feature layout {layout!r}, "
            f"this build expects {FEATURE_LAYOUT_VERSION}"
        )
    required = (
        "hyperparams", "feature_means", "feature_stds", "W1", "b1", "W2", "b2",
        "training_history",
    )
    for name in required:
        if name not in document:
            raise ModelError(f"{path}: corrupt model file: missing field {name!r}")
    try:
        hp = MlpHyperparams(**document["hyperparams"])
        model = MlpModel(
            W1=np.asarray(document["W1"], dtype=float),
            b1=np.asarray(document["b1"], dtype=float),
            W2=np.asarray(document["W2"], dtype=float),
            b2=np.asarray(document["b2"], dtype=float),
            feature_means=np.asarray(document["feature_means"], dtype=float),
            feature_stds=np.asarray(document["feature_stds"], dtype=float),
            hyperparams=hp,
            feature_layout_version=layout,
            training_history=[
                (int(e), float(l), float(a)) for e, l, a in document["training_history"]
            ],
        )
    except ModelError as exc:
        raise ModelError(f"{path}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ModelError(f"{path}: corrupt model file: {exc}") from None
    return model
