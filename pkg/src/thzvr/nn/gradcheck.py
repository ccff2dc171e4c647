"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .params import ParameterTree


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    n_checked: int
    tol: float
    per_param: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tol


def grad_check(loss_fn: Callable[[], float], tree: ParameterTree,
               tol: float = 1e-4, h: float = 1e-5,
               max_entries_per_param: int | None = None,
               rng: np.random.Generator | None = None) -> GradCheckReport:
    """Compare analytic gradients against central differences.

    `loss_fn` must run forward + backward on the current tree values, leave
    gradients in the tree, and return the scalar loss. Entries can be
    subsampled for large tensors; small models are checked exhaustively.
    """
    loss_fn()
    analytic = {name: tree.grad(name).copy() for name in tree.names()}
    max_rel = 0.0
    worst = ""
    n_checked = 0
    per_param: dict[str, float] = {}
    for name in tree.names():
        value = tree.value(name)
        flat_idx = np.arange(value.size)
        if max_entries_per_param is not None and value.size > max_entries_per_param:
            gen = rng if rng is not None else np.random.default_rng(0)
            flat_idx = gen.choice(value.size, size=max_entries_per_param,
                                  replace=False)
        param_max = 0.0
        for idx in flat_idx:
            pos = np.unravel_index(idx, value.shape) if value.shape else ()
            original = value[pos] if value.shape else float(value)
            value[pos] = original + h
            loss_plus = loss_fn()
            value[pos] = original - h
            loss_minus = loss_fn()
            value[pos] = original
            numeric = (loss_plus - loss_minus) / (2.0 * h)
            a = analytic[name][pos] if value.shape else float(analytic[name])
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-6)
            param_max = max(param_max, rel)
            n_checked += 1
        per_param[name] = param_max
        if param_max > max_rel:
            max_rel = param_max
            worst = name
    loss_fn()  # restore gradients for the unperturbed parameters
    return GradCheckReport(max_rel_error=max_rel, worst_param=worst,
                           n_checked=n_checked, tol=tol, per_param=per_param)
