"""Per-slot records and their delimited outputs: a CSV with one row per slot
per user, a JSONL stream with one object per slot, and episode aggregates."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class SlotMetrics:
    episode: int
    slot: int
    positions: list[tuple[float, float, float]]
    los_true: list[bool]
    los_pred: list[bool]
    hits: list[int]
    viewpoint_sqerr: list[float]
    uplink_rates: list[float]
    downlink_rates: list[float]
    t_uplink: list[float]
    t_render: float
    t_downlink: list[float]
    qoe: list[float]
    action: int
    reward: float
    cost: float
    cost_signed: float
    lambda_mult: float
    epsilon: float
    extras: dict = field(default_factory=dict)

    def t_vr(self, k: int) -> float:
        return self.t_uplink[k] + self.t_render + self.t_downlink[k]


USER_COLUMNS = [
    "episode", "slot", "user", "pos_x", "pos_y", "pos_z", "los_true",
    "los_pred", "hit", "viewpoint_sqerr", "uplink_rate", "downlink_rate",
    "t_uplink", "t_render", "t_downlink", "t_vr", "qoe", "action", "reward",
    "cost", "cost_signed", "lambda_mult", "epsilon",
]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_metrics(records: list[SlotMetrics], csv_path: str | Path,
                  jsonl_path: str | Path | None = None) -> None:
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(USER_COLUMNS)
        for rec in records:
            for k in range(len(rec.positions)):
                writer.writerow([_fmt(v) for v in (
                    rec.episode, rec.slot, k,
                    rec.positions[k][0], rec.positions[k][1], rec.positions[k][2],
                    rec.los_true[k], rec.los_pred[k], rec.hits[k],
                    rec.viewpoint_sqerr[k], rec.uplink_rates[k],
                    rec.downlink_rates[k], rec.t_uplink[k], rec.t_render,
                    rec.t_downlink[k], rec.t_vr(k), rec.qoe[k], rec.action,
                    rec.reward, rec.cost, rec.cost_signed, rec.lambda_mult,
                    rec.epsilon,
                )])
    if jsonl_path is not None:
        with open(jsonl_path, "w") as fh:
            for rec in records:
                obj = {
                    "episode": rec.episode,
                    "slot": rec.slot,
                    "positions": [list(p) for p in rec.positions],
                    "los_true": [int(v) for v in rec.los_true],
                    "los_pred": [int(v) for v in rec.los_pred],
                    "hits": rec.hits,
                    "viewpoint_sqerr": rec.viewpoint_sqerr,
                    "uplink_rates": rec.uplink_rates,
                    "downlink_rates": rec.downlink_rates,
                    "t_uplink": rec.t_uplink,
                    "t_render": rec.t_render,
                    "t_downlink": rec.t_downlink,
                    "t_vr": [rec.t_vr(k) for k in range(len(rec.positions))],
                    "qoe": rec.qoe,
                    "action": rec.action,
                    "reward": rec.reward,
                    "cost": rec.cost,
                    "cost_signed": rec.cost_signed,
                    "lambda_mult": rec.lambda_mult,
                    "epsilon": rec.epsilon,
                }
                obj.update(rec.extras)
                fh.write(json.dumps(obj) + "\n")


def episode_summary(records: list[SlotMetrics], vr_threshold: float) -> dict:
    """Aggregate one episode's records; means are over slots and users."""
    qoe = np.array([rec.qoe for rec in records])
    t_vr = np.array([[rec.t_vr(k) for k in range(len(rec.positions))]
                     for rec in records])
    finite_t = np.where(np.isfinite(t_vr), t_vr, np.nan)
    return {
        "episode": records[0].episode,
        "slots": len(records),
        "mean_qoe": float(qoe.mean()),
        "mean_reward": float(np.mean([rec.reward for rec in records])),
        "mean_t_vr": float(np.nanmean(finite_t)),
        "violation_rate": float(np.mean(t_vr > vr_threshold)),
        "mean_uplink_rate": float(np.mean([rec.uplink_rates for rec in records])),
        "mean_downlink_rate": float(np.mean([rec.downlink_rates for rec in records])),
        "hit_rate": float(np.mean([rec.hits for rec in records])),
        "los_pred_accuracy": float(np.mean(
            [[p == t for p, t in zip(rec.los_pred, rec.los_true)]
             for rec in records])),
        "mean_cost": float(np.mean([rec.cost for rec in records])),
        "final_lambda": records[-1].lambda_mult,
    }


def write_episode_summaries(summaries: list[dict], path: str | Path) -> None:
    if not summaries:
        return
    keys = list(summaries[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(keys)
        for row in summaries:
            writer.writerow([_fmt(row[k]) for k in keys])


def read_metrics_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Column arrays from a metrics CSV (floats)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    return {col: np.array([float(r[col]) for r in rows])
            for col in (reader.fieldnames or [])}
