"""GRU and LSTM cells with exact backpropagation through time.

Gate weights are packed column-blocks of one input matrix (D, G*H) and one
recurrent matrix (H, G*H): GRU blocks [update, reset, candidate], LSTM blocks
[input, forget, cell, output]. With all-zero parameters every sigmoid gate
sits at 0.5, so a GRU step halves the hidden state.
"""

from __future__ import annotations

import numpy as np

from .layers import sigmoid


def gru_step(x: np.ndarray, h: np.ndarray, wx: np.ndarray, wh: np.ndarray,
             b: np.ndarray):
    hid = h.shape[-1]
    gates_x = x @ wx + b
    gates_h = h @ wh
    z = sigmoid(gates_x[:, :hid] + gates_h[:, :hid])
    r = sigmoid(gates_x[:, hid:2 * hid] + gates_h[:, hid:2 * hid])
    rh = r * h
    n = np.tanh(gates_x[:, 2 * hid:] + rh @ wh[:, 2 * hid:])
    h_new = (1.0 - z) * h + z * n
    return h_new, (x, h, z, r, n, rh)


def gru_step_backward(dh_new: np.ndarray, cache, wx: np.ndarray, wh: np.ndarray):
    x, h, z, r, n, rh = cache
    hid = h.shape[-1]
    dz = dh_new * (n - h)
    dn = dh_new * z
    dh = dh_new * (1.0 - z)

    da_n = dn * (1.0 - n * n)
    drh = da_n @ wh[:, 2 * hid:].T
    dr = drh * h
    dh = dh + drh * r
    da_z = dz * z * (1.0 - z)
    da_r = dr * r * (1.0 - r)

    da = np.concatenate([da_z, da_r, da_n], axis=1)
    dx = da @ wx.T
    dwx = x.T @ da
    db = da.sum(axis=0)
    dwh = np.zeros_like(wh)
    dh_gates = np.concatenate([da_z, da_r], axis=1)
    dh = dh + dh_gates @ wh[:, :2 * hid].T
    dwh[:, :2 * hid] = h.T @ dh_gates
    dwh[:, 2 * hid:] = rh.T @ da_n
    return dx, dh, dwx, dwh, db


def gru_forward(xs: np.ndarray, h0: np.ndarray, wx: np.ndarray, wh: np.ndarray,
                b: np.ndarray):
    """Run a (B, T, D) sequence; returns the final hidden state and caches."""
    h = h0
    caches = []
    for t in range(xs.shape[1]):
        h, cache = gru_step(xs[:, t, :], h, wx, wh, b)
        caches.append(cache)
    return h, caches


def gru_backward(dh: np.ndarray, caches, wx: np.ndarray, wh: np.ndarray):
    """Backprop a gradient at the final hidden state through the whole window."""
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros(wx.shape[1])
    dxs = []
    for cache in reversed(caches):
        dx, dh, g_wx, g_wh, g_b = gru_step_backward(dh, cache, wx, wh)
        dwx += g_wx
        dwh += g_wh
        db += g_b
        dxs.append(dx)
    dxs.reverse()
    return np.stack(dxs, axis=1), dh, dwx, dwh, db


def lstm_step(x: np.ndarray, h: np.ndarray, c: np.ndarray, wx: np.ndarray,
              wh: np.ndarray, b: np.ndarray):
    hid = h.shape[-1]
    gates = x @ wx + h @ wh + b
    i = sigmoid(gates[:, :hid])
    f = sigmoid(gates[:, hid:2 * hid])
    g = np.tanh(gates[:, 2 * hid:3 * hid])
    o = sigmoid(gates[:, 3 * hid:])
    c_new = f * c + i * g
    tanh_c = np.tanh(c_new)
    h_new = o * tanh_c
    return h_new, c_new, (x, h, c, i, f, g, o, tanh_c)


def lstm_step_backward(dh_new: np.ndarray, dc_new: np.ndarray, cache,
                       wx: np.ndarray, wh: np.ndarray):
    x, h, c, i, f, g, o, tanh_c = cache
    do = dh_new * tanh_c
    dc_total = dc_new + dh_new * o * (1.0 - tanh_c * tanh_c)
    df = dc_total * c
    dc = dc_total * f
    di = dc_total * g
    dg = dc_total * i

    da = np.concatenate([
        di * i * (1.0 - i),
        df * f * (1.0 - f),
        dg * (1.0 - g * g),
        do * o * (1.0 - o),
    ], axis=1)
    dx = da @ wx.T
    dh = da @ wh.T
    dwx = x.T @ da
    dwh = h.T @ da
    db = da.sum(axis=0)
    return dx, dh, dc, dwx, dwh, db


def lstm_forward(xs: np.ndarray, h0: np.ndarray, c0: np.ndarray, wx: np.ndarray,
                 wh: np.ndarray, b: np.ndarray):
    h, c = h0, c0
    caches = []
    for t in range(xs.shape[1]):
        h, c, cache = lstm_step(xs[:, t, :], h, c, wx, wh, b)
        caches.append(cache)
    return h, c, caches


def lstm_backward(dh: np.ndarray, caches, wx: np.ndarray, wh: np.ndarray):
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros(wx.shape[1])
    dc = np.zeros_like(dh)
    dxs = []
    for cache in reversed(caches):
        dx, dh, dc, g_wx, g_wh, g_b = lstm_step_backward(dh, dc, cache, wx, wh)
        dwx += g_wx
        dwh += g_wh
        db += g_b
        dxs.append(dx)
    dxs.reverse()
    return np.stack(dxs, axis=1), dh, dwx, dwh, db
