"""Synthetic head-orientation traces and an optional CSV loader.

Each axis is a slow sinusoid plus a reflected random-walk drift plus fixation
noise, clipped to the axis range. CSV rows follow the header
``slot,user,x_deg,y_deg,z_deg``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

AXIS_RANGES = {"x": 50.0, "y": 150.0, "z": 50.0}
AXES = ("x", "y", "z")


@dataclass(frozen=True)
class TraceParams:
    amplitude_frac: tuple[float, float] = (0.25, 0.6)   # of the axis range
    period_slots: tuple[float, float] = (60.0, 200.0)
    drift_sigma: float = 1.0    # degrees per slot
    noise_sigma: float = 2.0    # degrees


def synthetic_traces(n_users: int, n_slots: int, rng: np.random.Generator,
                     params: TraceParams = TraceParams()) -> dict[str, np.ndarray]:
    """Per-axis (n_users, n_slots) viewpoint angles in degrees."""
    out = {}
    for axis in AXES:
        half_range = AXIS_RANGES[axis]
        rows = np.empty((n_users, n_slots))
        for u in range(n_users):
            amp = rng.uniform(*params.amplitude_frac) * half_range
            period = rng.uniform(*params.period_slots)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            t = np.arange(n_slots)
            base = amp * np.sin(2.0 * np.pi * t / period + phase)
            steps = rng.normal(0.0, params.drift_sigma, size=n_slots)
            drift = np.cumsum(steps)
            noise = rng.normal(0.0, params.noise_sigma, size=n_slots)
            trace = base + drift + noise
            # reflect back into the valid angle range
            span = 2.0 * half_range
            folded = np.mod(trace + half_range, 2.0 * span)
            folded = np.where(folded > span, 2.0 * span - folded, folded)
            rows[u] = folded - half_range
        out[axis] = rows
    return out


def load_trace_csv(path: str | Path, n_users: int,
                   n_slots: int) -> dict[str, np.ndarray]:
    """Read a recorded trace; missing (slot, user) cells are an error."""
    out = {axis: np.full((n_users, n_slots), np.nan) for axis in AXES}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"slot", "user", "x_deg", "y_deg", "z_deg"}
        if reader.fieldnames is None or set(reader.fieldnames) != expected:
            raise ValueError(f"trace CSV must have columns {sorted(expected)}")
        for row in reader:
            slot = int(row["slot"])
            user = int(row["user"])
            if 0 <= slot < n_slots and 0 <= user < n_users:
                for axis in AXES:
                    out[axis][user, slot] = float(row[f"{axis}_deg"])
    for axis in AXES:
        if np.isnan(out[axis]).any():
            raise ValueError(
                f"trace CSV is missing samples for axis {axis} "
                f"(need {n_users} users x {n_slots} slots)")
    return out


def write_trace_csv(path: str | Path, traces: dict[str, np.ndarray]) -> None:
    n_users, n_slots = traces["y"].shape
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["slot", "user", "x_deg", "y_deg", "z_deg"])
        for slot in range(n_slots):
            for user in range(n_users):
                writer.writerow([slot, user] + [
                    repr(float(traces[axis][user, slot])) for axis in AXES])
