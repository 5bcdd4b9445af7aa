"""Feature classifier: 20 -> 128 -> 64 -> 32 -> C with ReLU, dropout 0.10 / 0.05, softmax."""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from .base import Model
from .functional import dropout_mask, glorot_uniform, one_hot, relu, softmax

N_FEATURES = 20
HIDDEN = (128, 64, 32)
DEFAULT_CLASSES = 11
DROPOUT1 = 0.10
DROPOUT2 = 0.05


class MlpModel(Model):
    KIND = 0
    INPUT_SHAPE = (N_FEATURES,)
    LAYERS = (
        ("dense1", ("dense1_w", "dense1_b")),
        ("dense2", ("dense2_w", "dense2_b")),
        ("dense3", ("dense3_w", "dense3_b")),
        ("out", ("out_w", "out_b")),
        ("norm", ("norm_mean", "norm_std")),
    )
    FROZEN = ("norm_mean", "norm_std")

    @property
    def n_classes(self) -> int:
        return self.params["out_b"].shape[0]

    def expected_shapes(self) -> dict:
        c = self.params["out_b"].shape[0] if "out_b" in self.params else DEFAULT_CLASSES
        dims = (N_FEATURES, *HIDDEN, c)
        shapes = {}
        for (layer, (w, b)), (i, o) in zip(self.LAYERS[:4], zip(dims, dims[1:])):
            shapes[w] = (i, o)
            shapes[b] = (o,)
        shapes["norm_mean"] = (N_FEATURES,)
        shapes["norm_std"] = (N_FEATURES,)
        return shapes

    @classmethod
    def create(cls, n_classes: int = DEFAULT_CLASSES, seed: int = 0) -> "MlpModel":
        rng = np.random.default_rng(seed)
        dims = (N_FEATURES, *HIDDEN, n_classes)
        params = OrderedDict()
        for (layer, (w, b)), (i, o) in zip(cls.LAYERS[:4], zip(dims, dims[1:])):
            params[w] = glorot_uniform(rng, (i, o), i, o)
            params[b] = np.zeros(o)
        params["norm_mean"] = np.zeros(N_FEATURES)
        params["norm_std"] = np.ones(N_FEATURES)
        return cls(params).snap()

    def set_normalization(self, features: np.ndarray):
        """Store per-feature z-score parameters from training features."""
        features = np.asarray(features, dtype=np.float64)
        std = features.std(axis=0)
        std[std < 1e-12] = 1.0
        self.params["norm_mean"] = features.mean(axis=0)
        self.params["norm_std"] = std
        self.snap()
        return self

    def _forward(self, xb, train, rng):
        p = self.params
        xn = (xb - p["norm_mean"]) / p["norm_std"]
        z1 = xn @ p["dense1_w"] + p["dense1_b"]
        h1 = relu(z1)
        m1 = dropout_mask(rng, h1.shape, DROPOUT1) if train else None
        h1d = h1 * m1 if train else h1
        z2 = h1d @ p["dense2_w"] + p["dense2_b"]
        h2 = relu(z2)
        m2 = dropout_mask(rng, h2.shape, DROPOUT2) if train else None
        h2d = h2 * m2 if train else h2
        z3 = h2d @ p["dense3_w"] + p["dense3_b"]
        h3 = relu(z3)
        logits = h3 @ p["out_w"] + p["out_b"]
        probs = softmax(logits)
        return probs, (xn, z1, h1d, m1, z2, h2d, m2, z3, h3)

    def _backward(self, cache, probs, labels):
        p = self.params
        xn, z1, h1d, m1, z2, h2d, m2, z3, h3 = cache
        n = len(labels)
        g = {}
        dl = (probs - one_hot(labels, probs.shape[1])) / n
        g["out_w"] = h3.T @ dl
        g["out_b"] = dl.sum(axis=0)
        dz3 = (dl @ p["out_w"].T) * (z3 > 0)
        g["dense3_w"] = h2d.T @ dz3
        g["dense3_b"] = dz3.sum(axis=0)
        dh2 = dz3 @ p["dense3_w"].T
        if m2 is not None:
            dh2 = dh2 * m2
        dz2 = dh2 * (z2 > 0)
        g["dense2_w"] = h1d.T @ dz2
        g["dense2_b"] = dz2.sum(axis=0)
        dh1 = dz2 @ p["dense2_w"].T
        if m1 is not None:
            dh1 = dh1 * m1
        dz1 = dh1 * (z1 > 0)
        g["dense1_w"] = xn.T @ dz1
        g["dense1_b"] = dz1.sum(axis=0)
        return g


def mlp_forward(model: MlpModel, x, mode: str = "infer", rng=None) -> np.ndarray:
    return model.forward(x, train=(mode == "train"), rng=rng)
