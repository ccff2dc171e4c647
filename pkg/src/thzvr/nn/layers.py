"""Dense, convolution, pooling, and activation primitives as forward/backward
function pairs. Shapes are batch-first; conv inputs are (B, H, W, C)."""

from __future__ import annotations

import numpy as np


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...],
                   fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def dense(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    if x.shape[-1] != w.shape[0]:
        raise ValueError(f"dense shape mismatch: {x.shape} @ {w.shape}")
    return x @ w + b, (x, w)


def dense_backward(dy: np.ndarray, cache):
    x, w = cache
    dx = dy @ w.T
    dw = x.T @ dy
    db = dy.sum(axis=0)
    return dx, dw, db


def relu(x: np.ndarray):
    mask = x > 0
    return x * mask, mask


def relu_backward(dy: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return dy * mask


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(dy: np.ndarray, probs: np.ndarray) -> np.ndarray:
    # J^T dy = p * (dy - <dy, p>)
    dot = (dy * probs).sum(axis=-1, keepdims=True)
    return probs * (dy - dot)


def _im2col_2x2(x: np.ndarray) -> np.ndarray:
    """Gather the four 2x2 taps with zero padding on the far edges so the
    output keeps the H x W extent. Result is (B, H, W, 4*C)."""
    b, h, w, c = x.shape
    padded = np.zeros((b, h + 1, w + 1, c), dtype=x.dtype)
    padded[:, :h, :w, :] = x
    cols = np.empty((b, h, w, 4 * c), dtype=x.dtype)
    idx = 0
    for di in range(2):
        for dj in range(2):
            cols[..., idx * c:(idx + 1) * c] = padded[:, di:di + h, dj:dj + w, :]
            idx += 1
    return cols


def conv2d(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray):
    """Same-size 2x2 convolution: x (B,H,W,C) with kernels (2,2,C,F)."""
    if kernels.shape[:2] != (2, 2) or kernels.shape[2] != x.shape[3]:
        raise ValueError(f"kernel shape {kernels.shape} incompatible with input {x.shape}")
    b, h, w, c = x.shape
    f = kernels.shape[3]
    cols = _im2col_2x2(x)
    flat = cols.reshape(b * h * w, 4 * c)
    k_flat = kernels.reshape(4 * c, f)
    y = (flat @ k_flat).reshape(b, h, w, f) + bias
    return y, (flat, k_flat, x.shape)


def conv2d_backward(dy: np.ndarray, cache):
    flat, k_flat, x_shape = cache
    b, h, w, c = x_shape
    f = k_flat.shape[1]
    dy_flat = dy.reshape(b * h * w, f)
    dk = (flat.T @ dy_flat).reshape(2, 2, c, f)
    dbias = dy_flat.sum(axis=0)
    dcols = (dy_flat @ k_flat.T).reshape(b, h, w, 4 * c)
    dx_padded = np.zeros((b, h + 1, w + 1, c))
    idx = 0
    for di in range(2):
        for dj in range(2):
            dx_padded[:, di:di + h, dj:dj + w, :] += dcols[..., idx * c:(idx + 1) * c]
            idx += 1
    return dx_padded[:, :h, :w, :], dk, dbias


def maxpool2x2(x: np.ndarray):
    """2x2 max pooling with ceil semantics: odd extents pad with -inf."""
    b, h, w, c = x.shape
    h2, w2 = (h + 1) // 2, (w + 1) // 2
    padded = np.full((b, 2 * h2, 2 * w2, c), -np.inf, dtype=x.dtype)
    padded[:, :h, :w, :] = x
    windows = padded.reshape(b, h2, 2, w2, 2, c).transpose(0, 1, 3, 5, 2, 4)
    flat = windows.reshape(b, h2, w2, c, 4)
    arg = flat.argmax(axis=-1)
    y = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    return y, (arg, x.shape)


def maxpool2x2_backward(dy: np.ndarray, cache) -> np.ndarray:
    arg, x_shape = cache
    b, h, w, c = x_shape
    h2, w2 = dy.shape[1], dy.shape[2]
    flat = np.zeros((b, h2, w2, c, 4))
    np.put_along_axis(flat, arg[..., None], dy[..., None], axis=-1)
    windows = flat.reshape(b, h2, w2, c, 2, 2).transpose(0, 1, 4, 2, 5, 3)
    padded = windows.reshape(b, 2 * h2, 2 * w2, c)
    return padded[:, :h, :w, :]
