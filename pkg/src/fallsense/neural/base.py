from __future__ import annotations

import copy
from collections import OrderedDict

import numpy as np

from ..errors import ShapeMismatch
from .functional import batch_cross_entropy


def snap_float32(a: np.ndarray) -> np.ndarray:
    """Round to the nearest float32 value, kept in float64 storage."""
    return np.asarray(a, dtype=np.float32).astype(np.float64)


class Model:
    """Parameter container shared by the MLP and CNN.

    Parameters live in float64 arrays whose values are float32-representable
    after construction and after training, so the float32 weight file
    round-trips bit-exactly.
    """

    KIND = -1
    # (layer name, parameter names) in file order
    LAYERS: tuple = ()
    FROZEN: tuple = ()  # stored but not trained

    def __init__(self, params: "OrderedDict[str, np.ndarray]"):
        self.params = OrderedDict((k, np.asarray(v, dtype=np.float64)) for k, v in params.items())
        self._check_shapes()

    def expected_shapes(self) -> dict:
        raise NotImplementedError

    def _check_shapes(self):
        expected = self.expected_shapes()
        if set(expected) != set(self.params):
            raise ShapeMismatch(f"parameter names {sorted(self.params)} != {sorted(expected)}")
        for name, shape in expected.items():
            if self.params[name].shape != shape:
                raise ShapeMismatch(f"{name}: expected {shape}, got {self.params[name].shape}")

    @property
    def trainable(self) -> list[str]:
        return [k for k in self.params if k not in self.FROZEN]

    def param_counts(self) -> dict[str, int]:
        return {
            layer: sum(self.params[n].size for n in names)
            for layer, names in self.LAYERS
            if not set(names) & set(self.FROZEN)
        }

    def copy(self):
        return copy.deepcopy(self)

    def snap(self):
        for k in self.params:
            self.params[k] = snap_float32(self.params[k])
        return self

    def forward(self, x, train: bool = False, rng=None) -> np.ndarray:
        """Class probabilities for one input or a batch."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == len(self.INPUT_SHAPE)
        xb = x[None] if single else x
        if xb.shape[1:] != self.INPUT_SHAPE:
            raise ShapeMismatch(f"input shape {x.shape} incompatible with {self.INPUT_SHAPE}")
        if train and rng is None:
            raise ValueError("training-mode forward needs an rng for dropout")
        probs = self._forward(xb, train, rng)[0]
        return probs[0] if single else probs

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.forward(x), axis=-1)

    def loss_and_grads(self, xb, labels, train=False, rng=None):
        """Mean cross-entropy, gradients for trainable params, probabilities."""
        xb = np.asarray(xb, dtype=np.float64)
        if xb.shape[1:] != self.INPUT_SHAPE:
            raise ShapeMismatch(f"batch shape {xb.shape} incompatible with {self.INPUT_SHAPE}")
        labels = np.asarray(labels, dtype=np.int64)
        probs, cache = self._forward(xb, train, rng)
        loss = batch_cross_entropy(probs, labels)
        grads = self._backward(cache, probs, labels)
        return loss, grads, probs

    def _forward(self, xb, train, rng):
        raise NotImplementedError

    def _backward(self, cache, probs, labels):
        raise NotImplementedError
