"""Composed networks used by the simulator: an MLP for Q-value regression, a
GRU regressor for viewpoint angles, an LSTM classifier for moving directions,
and the small CNN that classifies link blockage from a scene image."""

from __future__ import annotations

import numpy as np

from . import layers, recurrent
from .params import ParameterTree


class MlpNet:
    """Fully-connected net with ReLU hidden layers and a linear head."""

    def __init__(self, sizes: list[int], rng: np.random.Generator):
        self.sizes = list(sizes)
        self.tree = ParameterTree()
        for i, (n_in, n_out) in enumerate(zip(sizes, sizes[1:])):
            self.tree.add(f"w{i}", layers.glorot_uniform(rng, (n_in, n_out), n_in, n_out))
            self.tree.add(f"b{i}", np.zeros(n_out))
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        caches = []
        n_layers = len(self.sizes) - 1
        for i in range(n_layers):
            x, dense_cache = layers.dense(x, self.tree.value(f"w{i}"), self.tree.value(f"b{i}"))
            relu_mask = None
            if i < n_layers - 1:
                x, relu_mask = layers.relu(x)
            caches.append((dense_cache, relu_mask))
        self._cache = caches
        return x

    def backward(self, dy: np.ndarray) -> np.ndarray:
        for i in reversed(range(len(self.sizes) - 1)):
            dense_cache, relu_mask = self._cache[i]
            if relu_mask is not None:
                dy = layers.relu_backward(dy, relu_mask)
            dy, dw, db = layers.dense_backward(dy, dense_cache)
            self.tree.accumulate_grad(f"w{i}", dw)
            self.tree.accumulate_grad(f"b{i}", db)
        return dy


class GruRegressor:
    """GRU over a sliding window with a scalar regression head."""

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator,
                 out_dim: int = 1):
        self.in_dim = in_dim
        self.hidden = hidden
        self.out_dim = out_dim
        self.tree = ParameterTree()
        self.tree.add("wx", layers.glorot_uniform(rng, (in_dim, 3 * hidden), in_dim, hidden))
        self.tree.add("wh", layers.glorot_uniform(rng, (hidden, 3 * hidden), hidden, hidden))
        self.tree.add("b", np.zeros(3 * hidden))
        self.tree.add("w_out", layers.glorot_uniform(rng, (hidden, out_dim), hidden, out_dim))
        self.tree.add("b_out", np.zeros(out_dim))
        self._cache = None

    def forward(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        h0 = np.zeros((xs.shape[0], self.hidden))
        h, caches = recurrent.gru_forward(xs, h0, self.tree.value("wx"),
                                          self.tree.value("wh"), self.tree.value("b"))
        y, dense_cache = layers.dense(h, self.tree.value("w_out"), self.tree.value("b_out"))
        self._cache = (caches, dense_cache)
        return y

    def backward(self, dy: np.ndarray) -> None:
        caches, dense_cache = self._cache
        dh, dw, db = layers.dense_backward(dy, dense_cache)
        self.tree.accumulate_grad("w_out", dw)
        self.tree.accumulate_grad("b_out", db)
        _, _, dwx, dwh, dbg = recurrent.gru_backward(dh, caches, self.tree.value("wx"),
                                                     self.tree.value("wh"))
        self.tree.accumulate_grad("wx", dwx)
        self.tree.accumulate_grad("wh", dwh)
        self.tree.accumulate_grad("b", dbg)


class LstmClassifier:
    """LSTM over a position window with a softmax head over move directions."""

    def __init__(self, in_dim: int, hidden: int, n_classes: int,
                 rng: np.random.Generator):
        self.in_dim = in_dim
        self.hidden = hidden
        self.n_classes = n_classes
        self.tree = ParameterTree()
        self.tree.add("wx", layers.glorot_uniform(rng, (in_dim, 4 * hidden), in_dim, hidden))
        self.tree.add("wh", layers.glorot_uniform(rng, (hidden, 4 * hidden), hidden, hidden))
        self.tree.add("b", np.zeros(4 * hidden))
        self.tree.add("w_out", layers.glorot_uniform(rng, (hidden, n_classes), hidden, n_classes))
        self.tree.add("b_out", np.zeros(n_classes))
        self._cache = None

    def forward(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        h0 = np.zeros((xs.shape[0], self.hidden))
        c0 = np.zeros_like(h0)
        h, _, caches = recurrent.lstm_forward(xs, h0, c0, self.tree.value("wx"),
                                              self.tree.value("wh"), self.tree.value("b"))
        logits, dense_cache = layers.dense(h, self.tree.value("w_out"),
                                           self.tree.value("b_out"))
        probs = layers.softmax(logits)
        self._cache = (caches, dense_cache, probs)
        return probs

    def backward(self, dprobs: np.ndarray) -> None:
        caches, dense_cache, probs = self._cache
        dlogits = layers.softmax_backward(dprobs, probs)
        dh, dw, db = layers.dense_backward(dlogits, dense_cache)
        self.tree.accumulate_grad("w_out", dw)
        self.tree.accumulate_grad("b_out", db)
        _, _, dwx, dwh, dbg = recurrent.lstm_backward(dh, caches, self.tree.value("wx"),
                                                      self.tree.value("wh"))
        self.tree.accumulate_grad("wx", dwx)
        self.tree.accumulate_grad("wh", dwh)
        self.tree.accumulate_grad("b", dbg)


class SceneCnn:
    """conv(2x2) -> relu -> conv(2x2) -> relu -> maxpool -> fc -> relu -> fc
    -> softmax over {blocked, clear}. Zero padding keeps the spatial extent
    through the convolutions; the pool halves it with ceil rounding."""

    def __init__(self, image_hw: int, in_channels: int, filters: int,
                 fc_units: int, n_classes: int, rng: np.random.Generator):
        self.image_hw = image_hw
        pooled = (image_hw + 1) // 2
        self.flat_dim = pooled * pooled * filters
        self.tree = ParameterTree()
        self.tree.add("k1", layers.glorot_uniform(
            rng, (2, 2, in_channels, filters), 4 * in_channels, filters))
        self.tree.add("c1_b", np.zeros(filters))
        self.tree.add("k2", layers.glorot_uniform(
            rng, (2, 2, filters, filters), 4 * filters, filters))
        self.tree.add("c2_b", np.zeros(filters))
        self.tree.add("w_fc", layers.glorot_uniform(
            rng, (self.flat_dim, fc_units), self.flat_dim, fc_units))
        self.tree.add("b_fc", np.zeros(fc_units))
        self.tree.add("w_out", layers.glorot_uniform(
            rng, (fc_units, n_classes), fc_units, n_classes))
        self.tree.add("b_out", np.zeros(n_classes))
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y1, c1 = layers.conv2d(x, self.tree.value("k1"), self.tree.value("c1_b"))
        a1, m1 = layers.relu(y1)
        y2, c2 = layers.conv2d(a1, self.tree.value("k2"), self.tree.value("c2_b"))
        a2, m2 = layers.relu(y2)
        pooled, pc = layers.maxpool2x2(a2)
        flat = pooled.reshape(x.shape[0], -1)
        fc, fc_cache = layers.dense(flat, self.tree.value("w_fc"), self.tree.value("b_fc"))
        fa, fm = layers.relu(fc)
        logits, out_cache = layers.dense(fa, self.tree.value("w_out"),
                                         self.tree.value("b_out"))
        probs = layers.softmax(logits)
        self._cache = (c1, m1, c2, m2, pc, pooled.shape, fc_cache, fm, out_cache, probs)
        return probs

    def backward(self, dprobs: np.ndarray) -> None:
        (c1, m1, c2, m2, pc, pooled_shape, fc_cache, fm, out_cache, probs) = self._cache
        dlogits = layers.softmax_backward(dprobs, probs)
        dfa, dw, db = layers.dense_backward(dlogits, out_cache)
        self.tree.accumulate_grad("w_out", dw)
        self.tree.accumulate_grad("b_out", db)
        dfc = layers.relu_backward(dfa, fm)
        dflat, dw, db = layers.dense_backward(dfc, fc_cache)
        self.tree.accumulate_grad("w_fc", dw)
        self.tree.accumulate_grad("b_fc", db)
        dpooled = dflat.reshape(pooled_shape)
        da2 = layers.maxpool2x2_backward(dpooled, pc)
        dy2 = layers.relu_backward(da2, m2)
        da1, dk, db = layers.conv2d_backward(dy2, c2)
        self.tree.accumulate_grad("k2", dk)
        self.tree.accumulate_grad("c2_b", db)
        dy1 = layers.relu_backward(da1, m1)
        _, dk, db = layers.conv2d_backward(dy1, c1)
        self.tree.accumulate_grad("k1", dk)
        self.tree.accumulate_grad("c1_b", db)
