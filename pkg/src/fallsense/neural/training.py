"""Mini-batch SGD with momentum, stratified splits and finite-difference gradient checks."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from ..errors import DataError, EmptyDataset, ShapeMismatch
from .base import Model
from .functional import batch_cross_entropy


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 50
    seed: int = 0
    train_fraction: float = 0.7

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise DataError("learning_rate must be non-negative")
        if not 0.0 <= self.momentum < 1.0:
            raise DataError("momentum must lie in [0, 1)")
        if self.batch_size < 1 or self.epochs < 0:
            raise DataError("batch_size must be >= 1 and epochs >= 0")
        if not 0.0 < self.train_fraction < 1.0:
            raise DataError("train_fraction must lie in (0, 1)")

    def as_dict(self) -> dict:
        return asdict(self)


# Settings that converge on the synthetic datasets. The CNN sees raw amplitude
# differences in the hundreds and diverges at the default step size.
IMU_RECIPE = TrainConfig(learning_rate=1e-2, epochs=60)
CSI_RECIPE = TrainConfig(learning_rate=1e-4, epochs=25)


def stratified_split(labels, fraction: float = 0.7, seed: int = 0) -> np.ndarray:
    """Boolean mask selecting round(fraction * n_c) members of every class for training."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    mask = np.zeros(len(labels), dtype=bool)
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        n_train = int(round(fraction * len(members)))
        chosen = rng.permutation(members)[:n_train]
        mask[chosen] = True
    return mask


def evaluate(model: Model, inputs, labels, batch_size: int = 512) -> tuple[float, float]:
    """Mean cross-entropy and accuracy in inference mode."""
    inputs = np.asarray(inputs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    probs = np.concatenate([
        model.forward(inputs[i:i + batch_size]) for i in range(0, len(inputs), batch_size)
    ]) if len(inputs) else np.zeros((0, model.n_classes))
    loss = batch_cross_entropy(probs, labels) if len(labels) else float("nan")
    acc = float(np.mean(np.argmax(probs, axis=1) == labels)) if len(labels) else float("nan")
    return loss, acc


def train(model: Model, inputs, labels, cfg: TrainConfig = TrainConfig(),
          val_inputs=None, val_labels=None):
    """Train a private copy of ``model``; return (trained model, per-epoch history).

    Shuffling and dropout masks come from one generator seeded with
    ``cfg.seed``, so identical calls give bitwise-identical weights.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(inputs) == 0:
        raise EmptyDataset("training set is empty")
    if inputs.shape[1:] != model.INPUT_SHAPE or len(labels) != len(inputs):
        raise ShapeMismatch(f"inputs {inputs.shape} / labels {labels.shape} do not fit the model")

    model = model.copy()
    rng = np.random.default_rng(cfg.seed)
    velocity = {k: np.zeros_like(model.params[k]) for k in model.trainable}
    history = []
    n = len(inputs)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total_loss = 0.0
        correct = 0
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            loss, grads, probs = model.loss_and_grads(inputs[batch], labels[batch], True, rng)
            total_loss += loss * len(batch)
            correct += int(np.sum(np.argmax(probs, axis=1) == labels[batch]))
            for k in model.trainable:
                v = velocity[k]
                v *= cfg.momentum
                v -= cfg.learning_rate * grads[k]
                model.params[k] += v
        record = {"epoch": epoch + 1, "loss": total_loss / n, "accuracy": correct / n}
        if val_inputs is not None and len(val_inputs):
            record["val_loss"], record["val_accuracy"] = evaluate(model, val_inputs, val_labels)
        history.append(record)
    model.snap()
    return model, history


def gradient_check(model: Model, x, label: int, epsilon: float = 1e-5,
                   n_samples: int = 128, seed: int = 0) -> float:
    """Max relative error between backprop and central differences on sampled parameters.

    Dropout is disabled. Parameters are drawn uniformly over all trainable
    entries.
    """
    if not 1e-6 <= epsilon <= 1e-4:
        raise DataError("epsilon must lie in [1e-6, 1e-4]")
    xb = np.asarray(x, dtype=np.float64)[None]
    yb = np.array([label])
    model = model.copy()
    _, grads, _ = model.loss_and_grads(xb, yb)

    names = model.trainable
    sizes = np.array([model.params[k].size for k in names])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    rng = np.random.default_rng(seed)
    picks = rng.choice(offsets[-1], size=min(n_samples, offsets[-1]), replace=False)

    worst = 0.0
    for flat in np.sort(picks):
        which = int(np.searchsorted(offsets, flat, side="right") - 1)
        name = names[which]
        idx = np.unravel_index(flat - offsets[which], model.params[name].shape)
        arr = model.params[name]
        orig = arr[idx]
        arr[idx] = orig + epsilon
        f_plus = model.loss_and_grads(xb, yb)[0]
        arr[idx] = orig - epsilon
        f_minus = model.loss_and_grads(xb, yb)[0]
        arr[idx] = orig
        numeric = (f_plus - f_minus) / (2.0 * epsilon)
        analytic = grads[name][idx]
        rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
        worst = max(worst, rel)
    return worst
