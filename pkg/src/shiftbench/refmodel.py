"""Multinomial logistic regression over raw pixels, trained with Adam.

A deliberately small reference classifier: strong enough to exploit a
color shortcut when the source distribution offers one, weak enough to
train in seconds, and fully deterministic given a seed. Images are
flattened channel-major and normalized to (-1, 1); the loss is softmax
cross-entropy with an analytic gradient; early stopping tracks
validation accuracy on a fixed evaluation schedule and keeps the best
snapshot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import EmptySplitError, SizeMismatchError
from .rng import keyed_generator
from .schema import AnnotationTable
from .shiftgen import SplitManifest

LR_GRID: tuple[float, ...] = (1e-2, 1e-3, 1e-4)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    batch_size: int = 128
    max_iterations: int = 10000
    eval_interval: int = 100
    patience: int = 20
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("learning_rate", "batch_size", "max_iterations", "eval_interval", "patience"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class LinearModel:
    weights: np.ndarray  # (n_classes, n_features)
    bias: np.ndarray  # (n_classes,)

    @classmethod
    def zeros(cls, n_classes: int, n_features: int) -> "LinearModel":
        return cls(
            weights=np.zeros((n_classes, n_features)),
            bias=np.zeros(n_classes),
        )

    def copy(self) -> "LinearModel":
        return LinearModel(self.weights.copy(), self.bias.copy())


def featurize(pixels: np.ndarray, image_side: int | None = None) -> np.ndarray:
    """Flatten an RGB image channel-major, mapping byte b to b/127.5 - 1."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise SizeMismatchError(f"expected (H, W, 3) RGB array, got shape {pixels.shape}")
    if pixels.shape[0] != pixels.shape[1]:
        raise SizeMismatchError(f"expected a square image, got shape {pixels.shape}")
    if image_side is not None and pixels.shape[0] != image_side:
        raise SizeMismatchError(
            f"expected side {image_side}, got {pixels.shape[0]}"
        )
    return pixels.astype(np.float64).transpose(2, 0, 1).ravel() / 127.5 - 1.0


def load_features(
    image_dir: str | Path, ids: tuple[str, ...], image_side: int | None = None
) -> np.ndarray:
    """Feature matrix for a list of instance ids from ``<dir>/<id>.png``."""
    image_dir = Path(image_dir)
    rows = []
    for instance_id in ids:
        with Image.open(image_dir / f"{instance_id}.png") as img:
            rows.append(featurize(np.asarray(img.convert("RGB")), image_side))
    return np.stack(rows) if rows else np.empty((0, 0))


def labels_for(table: AnnotationTable, ids: tuple[str, ...]) -> np.ndarray:
    label = table.schema.label
    assignments = {instance_id: row for instance_id, row in table.rows}
    return np.array(
        [label.index_of(assignments[i][label.name]) for i in ids], dtype=np.int64
    )


def loss_and_grad(
    model: LinearModel, features: np.ndarray, labels: np.ndarray
) -> tuple[float, tuple[np.ndarray, np.ndarray]]:
    """Mean softmax cross-entropy and its analytic gradient."""
    if features.shape[0] == 0:
        raise EmptySplitError("batch is empty")
    logits = features @ model.weights.T + model.bias
    logits -= logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(logits).sum(axis=1, keepdims=True))
    log_probs = logits - log_norm
    n = features.shape[0]
    loss = -log_probs[np.arange(n), labels].mean()
    delta = np.exp(log_probs)
    delta[np.arange(n), labels] -= 1.0
    delta /= n
    return float(loss), (delta.T @ features, delta.sum(axis=0))


def predict(model: LinearModel, features: np.ndarray) -> np.ndarray:
    """Class indices; argmax ties resolve to the lowest index."""
    return np.argmax(features @ model.weights.T + model.bias, axis=1)


def accuracy(model: LinearModel, features: np.ndarray, labels: np.ndarray) -> float:
    if features.shape[0] == 0:
        raise EmptySplitError("cannot score an empty split")
    return float((predict(model, features) == labels).mean())


def train(
    table: AnnotationTable,
    manifest: SplitManifest,
    image_dir: str | Path,
    config: TrainConfig,
    image_side: int | None = None,
) -> tuple[LinearModel, list[tuple[int, float]]]:
    """Adam training with best-snapshot early stopping.

    Runs up to max_iterations mini-batch steps (batches drawn with
    replacement from a keyed PRNG), scoring validation accuracy every
    eval_interval iterations. An evaluation that does not strictly
    improve the best accuracy consumes one unit of patience; after
    ``patience`` consecutive non-improving evaluations training stops
    and the best snapshot is returned with the (iteration, accuracy)
    history.
    """
    if not manifest.train_ids:
        raise EmptySplitError("manifest has no training instances")
    if not manifest.val_ids:
        raise EmptySplitError("manifest has no validation instances")
    x_train = load_features(image_dir, manifest.train_ids, image_side)
    y_train = labels_for(table, manifest.train_ids)
    x_val = load_features(image_dir, manifest.val_ids, image_side)
    y_val = labels_for(table, manifest.val_ids)
    return _fit(x_train, y_train, x_val, y_val, table.schema.label.cardinality,
                config, manifest.config.config_id)


def _fit(
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_val: np.ndarray,
    y_val: np.ndarray,
    n_classes: int,
    config: TrainConfig,
    run_key: str = "",
) -> tuple[LinearModel, list[tuple[int, float]]]:
    model = LinearModel.zeros(n_classes, x_train.shape[1])
    momentum = LinearModel.zeros(n_classes, x_train.shape[1])
    variance = LinearModel.zeros(n_classes, x_train.shape[1])
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    rng = keyed_generator("train", run_key, config.seed)
    history: list[tuple[int, float]] = []
    best = model.copy()
    best_accuracy = -np.inf
    stale = 0
    n = x_train.shape[0]

    for iteration in range(1, config.max_iterations + 1):
        batch = rng.integers(0, n, size=config.batch_size)
        _, (grad_w, grad_b) = loss_and_grad(model, x_train[batch], y_train[batch])
        for param, grad, m, v in (
            ("weights", grad_w, momentum.weights, variance.weights),
            ("bias", grad_b, momentum.bias, variance.bias),
        ):
            m *= beta1
            m += (1 - beta1) * grad
            v *= beta2
            v += (1 - beta2) * grad**2
            m_hat = m / (1 - beta1**iteration)
            v_hat = v / (1 - beta2**iteration)
            getattr(model, param)[...] -= (
                config.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
            )
        if iteration % config.eval_interval == 0 or iteration == config.max_iterations:
            val_accuracy = accuracy(model, x_val, y_val)
            history.append((iteration, val_accuracy))
            if val_accuracy > best_accuracy:
                best_accuracy = val_accuracy
                best = model.copy()
                stale = 0
            else:
                stale += 1
                if stale >= config.patience:
                    break
    return best, history


def evaluate(
    model: LinearModel,
    table: AnnotationTable,
    manifest: SplitManifest,
    image_dir: str | Path,
    split: str = "test",
    image_side: int | None = None,
) -> float:
    """Top-1 accuracy of a model on one split of a manifest."""
    ids = {
        "train": manifest.train_ids,
        "val": manifest.val_ids,
        "test": manifest.test_ids,
    }[split]
    if not ids:
        raise EmptySplitError(f"manifest has no {split} instances")
    features = load_features(image_dir, ids, image_side)
    return accuracy(model, features, labels_for(table, ids))


@dataclass(frozen=True)
class GridResult:
    learning_rate: float
    val_accuracy: float
    test_accuracy: float
    history: tuple[tuple[int, float], ...]


def grid_search(
    table: AnnotationTable,
    manifest: SplitManifest,
    image_dir: str | Path,
    seed: int,
    learning_rates: tuple[float, ...] = LR_GRID,
    max_iterations: int = 10000,
    image_side: int | None = None,
) -> GridResult:
    """Train once per learning rate, keep the best validation accuracy.

    Ties go to the earlier grid entry. Returns the winner's test
    accuracy alongside its training history.
    """
    x_test = load_features(image_dir, manifest.test_ids, image_side)
    y_test = labels_for(table, manifest.test_ids)
    best: GridResult | None = None
    for lr in learning_rates:
        config = TrainConfig(learning_rate=lr, max_iterations=max_iterations, seed=seed)
        model, history = train(table, manifest, image_dir, config, image_side)
        val_accuracy = max(acc for _, acc in history)
        if best is None or val_accuracy > best.val_accuracy:
            best = GridResult(
                learning_rate=lr,
                val_accuracy=val_accuracy,
                test_accuracy=accuracy(model, x_test, y_test),
                history=tuple(history),
            )
    assert best is not None
    return best


def save_history(result: GridResult, path: str | Path) -> None:
    payload = {
        "learning_rate": result.learning_rate,
        "val_accuracy": result.val_accuracy,
        "test_accuracy": result.test_accuracy,
        "history": [[it, acc] for it, acc in result.history],
    }
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
