"""FoV payload sizing, rendering and transmission latencies, viewpoint hit
gating, and the per-slot quality-of-experience score."""

from __future__ import annotations

import math
from dataclasses import dataclass

EYES = 2           # stereo viewpoints
RGB_BITS = 3 * 8   # bits per pixel


@dataclass(frozen=True)
class LatencyBudget:
    t_uplink: float
    t_render: float
    t_downlink: float

    @property
    def t_total(self) -> float:
        return self.t_uplink + self.t_render + self.t_downlink


@dataclass(frozen=True)
class QoERecord:
    hit: int
    q_now: float
    q_prev: float

    @property
    def qoe(self) -> float:
        return self.hit * (self.q_now - abs(self.q_now - self.q_prev))


def fov_size_bits(n_p: int, n_v: int) -> float:
    """Raw stereo RGB payload of one field of view."""
    if n_p <= 0 or n_v <= 0:
        raise ValueError("FoV resolution must be positive")
    return float(RGB_BITS * n_p * n_v * EYES)


def render_latency(payload_bits: float, cycles_per_bit: float,
                   compute_hz: float) -> float:
    """Server-side rendering time; identical for every user."""
    if compute_hz <= 0:
        raise ValueError("compute rate must be positive")
    return cycles_per_bit * payload_bits / compute_hz


def transmit_latency(payload_bits: float, rate: float, bandwidth_hz: float) -> float:
    """Air time of a payload at the given spectral efficiency; a dead link
    propagates +inf so constraint checks see the violation."""
    throughput = rate * bandwidth_hz
    if throughput <= 0.0:
        return math.inf
    return payload_bits / throughput


def viewpoint_hit(pred: float | list[float], actual: float | list[float],
                  tol_deg: float) -> int:
    """1 when every predicted axis is within tol (inclusive) of the actual."""
    if tol_deg < 0:
        raise ValueError("tolerance must be non-negative")
    preds = pred if isinstance(pred, (list, tuple)) else [pred]
    actuals = actual if isinstance(actual, (list, tuple)) else [actual]
    return int(all(abs(p - a) <= tol_deg for p, a in zip(preds, actuals)))


def quality(rate: float, rate_threshold: float, q_min: float = -20.0) -> float:
    """Log quality ln(rate / threshold); dead links clamp at q_min."""
    if rate_threshold <= 0:
        raise ValueError("rate threshold must be positive")
    if rate <= 0.0:
        return q_min
    return max(q_min, math.log(rate / rate_threshold))


def qoe(hit: int, rate_now: float, rate_prev: float, rate_threshold: float,
        q_min: float = -20.0) -> QoERecord:
    """Per-slot QoE: the hit indicator gates log quality minus the
    slot-to-slot quality variation."""
    q_now = quality(rate_now, rate_threshold, q_min)
    q_prev = quality(rate_prev, rate_threshold, q_min)
    return QoERecord(hit=hit, q_now=q_now, q_prev=q_prev)
