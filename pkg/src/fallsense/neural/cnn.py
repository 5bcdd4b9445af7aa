"""CSI classifier.

Layer stack for a (29, 106) rate-of-change tensor::

    Conv1D valid, 32 kernels of width 3     -> (27, 32)   10208 params
    MaxPool width 2 (last step dropped)     -> (13, 32)
    Attention, score s_t = w . h_t          -> (32,)         32 params
    Dropout 0.20
    Dense 64 + ReLU                         -> (64,)       2112 params
    Dense 2 + softmax                       -> (2,)         130 params

The attention layer has a single score vector and no bias; that is the only
form consistent with 32 parameters.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from .base import Model
from .functional import dropout_mask, glorot_uniform, one_hot, relu, softmax

IN_STEPS = 29
IN_CHANNELS = 106
KERNEL = 3
FILTERS = 32
CONV_STEPS = IN_STEPS - KERNEL + 1  # 27
POOL = 2
POOL_STEPS = CONV_STEPS // POOL  # 13
DENSE = 64
N_OUT = 2
DROPOUT = 0.20


def im2col(xb: np.ndarray) -> np.ndarray:
    """(B, 29, 106) -> (B, 27, 3*106), column index = k*106 + channel."""
    return np.concatenate([xb[:, k:k + CONV_STEPS] for k in range(KERNEL)], axis=-1)


class CnnModel(Model):
    KIND = 1
    INPUT_SHAPE = (IN_STEPS, IN_CHANNELS)
    LAYERS = (
        ("conv", ("conv_w", "conv_b")),
        ("attention", ("att_w",)),
        ("dense1", ("dense1_w", "dense1_b")),
        ("out", ("out_w", "out_b")),
    )
    n_classes = N_OUT

    def expected_shapes(self) -> dict:
        return {
            "conv_w": (KERNEL, IN_CHANNELS, FILTERS),
            "conv_b": (FILTERS,),
            "att_w": (FILTERS,),
            "dense1_w": (FILTERS, DENSE),
            "dense1_b": (DENSE,),
            "out_w": (DENSE, N_OUT),
            "out_b": (N_OUT,),
        }

    @classmethod
    def create(cls, seed: int = 0) -> "CnnModel":
        rng = np.random.default_rng(seed)
        params = OrderedDict()
        params["conv_w"] = glorot_uniform(rng, (KERNEL, IN_CHANNELS, FILTERS),
                                          KERNEL * IN_CHANNELS, KERNEL * FILTERS)
        params["conv_b"] = np.zeros(FILTERS)
        params["att_w"] = glorot_uniform(rng, (FILTERS,), FILTERS, 1)
        params["dense1_w"] = glorot_uniform(rng, (FILTERS, DENSE), FILTERS, DENSE)
        params["dense1_b"] = np.zeros(DENSE)
        params["out_w"] = glorot_uniform(rng, (DENSE, N_OUT), DENSE, N_OUT)
        params["out_b"] = np.zeros(N_OUT)
        return cls(params).snap()

    def layer_outputs(self, x) -> dict[str, np.ndarray]:
        """Inference-mode intermediate activations for one input."""
        x = np.asarray(x, dtype=np.float64)[None]
        _, cache = self._forward(x, False, None)
        cols, conv, pooled, idx, att, ctx, ctxd, m, z1, h1, logits = cache
        return {"conv": conv[0], "pool": pooled[0], "attention_weights": att[0],
                "attention": ctx[0], "dense1": h1[0], "logits": logits[0]}

    def _forward(self, xb, train, rng):
        p = self.params
        b = xb.shape[0]
        cols = im2col(xb)
        conv = cols @ p["conv_w"].reshape(KERNEL * IN_CHANNELS, FILTERS) + p["conv_b"]
        pairs = conv[:, :POOL_STEPS * POOL].reshape(b, POOL_STEPS, POOL, FILTERS)
        idx = np.argmax(pairs, axis=2)
        pooled = np.take_along_axis(pairs, idx[:, :, None, :], axis=2)[:, :, 0, :]
        scores = pooled @ p["att_w"]
        att = softmax(scores, axis=1)
        ctx = np.einsum("bt,btf->bf", att, pooled)
        m = dropout_mask(rng, ctx.shape, DROPOUT) if train else None
        ctxd = ctx * m if train else ctx
        z1 = ctxd @ p["dense1_w"] + p["dense1_b"]
        h1 = relu(z1)
        logits = h1 @ p["out_w"] + p["out_b"]
        probs = softmax(logits)
        return probs, (cols, conv, pooled, idx, att, ctx, ctxd, m, z1, h1, logits)

    def _backward(self, cache, probs, labels):
        p = self.params
        cols, conv, pooled, idx, att, ctx, ctxd, m, z1, h1, logits = cache
        b = len(labels)
        g = {}
        dl = (probs - one_hot(labels, N_OUT)) / b
        g["out_w"] = h1.T @ dl
        g["out_b"] = dl.sum(axis=0)
        dz1 = (dl @ p["out_w"].T) * (z1 > 0)
        g["dense1_w"] = ctxd.T @ dz1
        g["dense1_b"] = dz1.sum(axis=0)
        dctx = dz1 @ p["dense1_w"].T
        if m is not None:
            dctx = dctx * m
        # context = sum_t a_t h_t, a = softmax(h_t . w)
        dpooled = att[:, :, None] * dctx[:, None, :]
        datt = np.einsum("btf,bf->bt", pooled, dctx)
        dscores = att * (datt - np.sum(att * datt, axis=1, keepdims=True))
        g["att_w"] = np.einsum("bt,btf->f", dscores, pooled)
        dpooled += dscores[:, :, None] * p["att_w"]
        dpairs = np.zeros((b, POOL_STEPS, POOL, FILTERS))
        np.put_along_axis(dpairs, idx[:, :, None, :], dpooled[:, :, None, :], axis=2)
        dconv = np.zeros_like(conv)
        dconv[:, :POOL_STEPS * POOL] = dpairs.reshape(b, POOL_STEPS * POOL, FILTERS)
        g["conv_w"] = np.einsum("btk,btf->kf", cols, dconv).reshape(KERNEL, IN_CHANNELS, FILTERS)
        g["conv_b"] = dconv.sum(axis=(0, 1))
        return g


def cnn_forward(model: CnnModel, x, mode: str = "infer", rng=None) -> np.ndarray:
    return model.forward(x, train=(mode == "train"), rng=rng)
