"""Training losses. MSE sums squared errors over output components before
averaging over the batch; cross entropy clamps probabilities at 1e-12."""

from __future__ import annotations

import numpy as np

PROB_FLOOR = 1e-12


def mse(pred: np.ndarray, target: np.ndarray):
    """Mean over the batch of the component-sum squared error.
    Returns (loss, dloss/dpred)."""
    pred = np.atleast_2d(pred)
    target = np.atleast_2d(target)
    diff = pred - target
    batch = pred.shape[0]
    loss = float((diff * diff).sum() / batch)
    return loss, 2.0 * diff / batch


def cross_entropy(probs: np.ndarray, labels: np.ndarray):
    """Mean negative log-probability of the labeled class.
    Returns (loss, dloss/dprobs)."""
    probs = np.atleast_2d(probs)
    labels = np.asarray(labels, dtype=int).reshape(-1)
    batch = probs.shape[0]
    picked = np.clip(probs[np.arange(batch), labels], PROB_FLOOR, None)
    loss = float(-np.log(picked).mean())
    dprobs = np.zeros_like(probs)
    dprobs[np.arange(batch), labels] = -1.0 / (picked * batch)
    return loss, dprobs
