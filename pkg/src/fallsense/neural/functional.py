"""Small numerical building blocks shared by both networks."""

from __future__ import annotations

import math

import numpy as np

from ..errors import LabelOutOfRange

PROB_FLOOR = 1e-12


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = z - np.max(z, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def cross_entropy(pred, label: int) -> float:
    """-log(pred[label]) with pred floored at 1e-12."""
    pred = np.asarray(pred, dtype=np.float64)
    if not 0 <= label < pred.shape[-1]:
        raise LabelOutOfRange(f"label {label} outside [0, {pred.shape[-1]})")
    return -math.log(max(float(pred[label]), PROB_FLOOR))


def batch_cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= probs.shape[1]):
        raise LabelOutOfRange(f"labels must lie in [0, {probs.shape[1]})")
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.maximum(picked, PROB_FLOOR))))


def one_hot(labels: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((len(labels), n))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def dropout_mask(rng: np.random.Generator, shape, rate: float) -> np.ndarray:
    """Inverted dropout: kept units are scaled by 1/(1-rate) so inference needs no rescale."""
    keep = 1.0 - rate
    return (rng.random(shape) < keep) / keep


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)
