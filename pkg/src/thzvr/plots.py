"""Report rendering: scans run and sweep output directories and writes one
CSV plus one PNG per chart (per-slot QoE, latency, and reward curves; rolling
viewpoint error; sweep trends over the swept axis)."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .metrics import read_metrics_csv


def _write_curve_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([repr(float(v)) for v in row])


def _save_line_plot(path: Path, x: np.ndarray, ys: dict[str, np.ndarray],
                    xlabel: str, ylabel: str, title: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for label, y in ys.items():
        ax.plot(x, y, label=label, linewidth=1.2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    if len(ys) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def _per_slot_mean(data: dict[str, np.ndarray], column: str) -> tuple[np.ndarray, np.ndarray]:
    keys = data["episode"] * (data["slot"].max() + 1) + data["slot"]
    _, inverse = np.unique(keys, return_inverse=True)
    sums = np.bincount(inverse, weights=data[column])
    counts = np.bincount(inverse)
    return np.arange(len(sums)), sums / counts


def rolling_mean(values: np.ndarray, window: int) -> np.ndarray:
    if len(values) < window:
        return np.array([])
    kernel = np.ones(window) / window
    return np.convolve(values, kernel, mode="valid")


def emit_run_plots(run_dir: Path, out_dir: Path) -> list[Path]:
    data = read_metrics_csv(run_dir / "metrics.csv")
    name = run_dir.name
    written = []
    charts = [
        ("qoe", "qoe", "mean QoE"),
        ("latency", "t_vr", "mean VR latency (s)"),
        ("reward", "reward", "slot reward"),
        ("viewpoint_error", "viewpoint_sqerr", "mean squared viewpoint error (deg^2)"),
    ]
    for stem, column, ylabel in charts:
        slots, series = _per_slot_mean(data, column)
        finite = np.isfinite(series)
        csv_path = out_dir / f"{name}_{stem}_vs_slot.csv"
        png_path = out_dir / f"{name}_{stem}_vs_slot.png"
        _write_curve_csv(csv_path, ["slot", column], [slots[finite], series[finite]])
        _save_line_plot(png_path, slots[finite], {column: series[finite]},
                        "slot", ylabel, name)
        written.extend([csv_path, png_path])
    return written


def emit_sweep_plots(sweep_csv: Path, out_dir: Path) -> list[Path]:
    with open(sweep_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    axis = rows[0]["axis"]
    values = np.array([float(r["value"]) for r in rows])
    written = []
    for column, ylabel in (("mean_qoe", "mean QoE"),
                           ("mean_t_vr", "mean VR latency (s)"),
                           ("violation_rate", "latency violation rate")):
        series = np.array([float(r[column]) for r in rows])
        csv_path = out_dir / f"sweep_{axis}_{column}.csv"
        png_path = out_dir / f"sweep_{axis}_{column}.png"
        _write_curve_csv(csv_path, [axis, column], [values, series])
        _save_line_plot(png_path, values, {column: series}, axis, ylabel,
                        f"{column} vs {axis}")
        written.extend([csv_path, png_path])
    return written


def emit_plots(in_dir: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """Render every run and sweep found under in_dir; returns written paths."""
    in_dir = Path(in_dir)
    out = Path(out_dir) if out_dir is not None else in_dir / "plots"
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    run_dirs = sorted({p.parent for p in in_dir.rglob("metrics.csv")})
    for run_dir in run_dirs:
        written.extend(emit_run_plots(run_dir, out))
    for sweep_csv in sorted(in_dir.rglob("aggregate.csv")):
        written.extend(emit_sweep_plots(sweep_csv, out))
    return written
