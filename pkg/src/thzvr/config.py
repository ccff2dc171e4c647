"""Simulation configuration: typed sections with defaults drawn from the
reference indoor deployment, YAML parsing with unknown-key rejection, a report
of every defaulted key, environment-variable overrides, and a round-trippable
effective-config dump."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .channel import ConfigError

ENV_PREFIX = "THZVR_"

RIS_MODES = ("cdrl", "exhaustive", "random")
PREDICTOR_MODES = ("genie", "learned")
VIEWPOINT_MODES = ("centralized", "fedavg")


@dataclass(frozen=True)
class RoomConfig:
    width: float = 20.0
    height: float = 3.0
    grid_m: float = 1.0


@dataclass(frozen=True)
class MecConfig:
    position: tuple[float, float, float] = (0.0, 0.0, 3.0)
    antennas: int = 30
    compute_hz: float = 5.0e9
    cycles_per_bit: float = 1000.0
    broadside_deg: float = 45.0


@dataclass(frozen=True)
class RisConfig:
    position: tuple[float, float, float] = (10.0, 20.0, 3.0)
    elements: int = 20
    phase_bits: int = 2
    element_gain: float = 1.0
    broadside_deg: float = -90.0


@dataclass(frozen=True)
class UsersConfig:
    count: int = 5
    height_range: tuple[float, float] = (1.2, 1.8)
    speed_range: tuple[float, float] = (0.3, 0.7)
    body_radius: float = 0.3


@dataclass(frozen=True)
class ObstacleConfig:
    x_range: tuple[float, float] = (4.0, 8.0)
    y_range: tuple[float, float] = (8.0, 12.0)
    height: float = 3.0


@dataclass(frozen=True)
class ThzConfig:
    frequency_hz: float = 3.0e11
    absorption_table: tuple[tuple[float, float], ...] = ((3.0e11, 0.0033),)
    tx_power_w: float = 1.0
    bandwidth_hz: float = 5.0e6
    noise_dbm: float = -110.0

    @property
    def noise_w(self) -> float:
        return 10.0 ** ((self.noise_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class FovConfig:
    width_px: int = 3840
    height_px: int = 2160
    compression_ratio: float = 6000.0
    viewpoint_packet_bits: int = 192


@dataclass(frozen=True)
class LatencyConfig:
    downlink_threshold_s: float = 0.012
    vr_threshold_s: float = 0.020


@dataclass(frozen=True)
class QoeConfig:
    rate_threshold: float = 1.0
    q_min: float = -20.0
    q_max: float = 20.0
    hit_tolerance_deg: float = 15.0


@dataclass(frozen=True)
class ViewpointConfig:
    axes: tuple[str, ...] = ("y",)
    window: int = 10
    gru_hidden: int = 64
    learning_rate: float = 0.005
    fedavg_local_steps: int = 2
    fedavg_local_batch: int = 16


@dataclass(frozen=True)
class TraceConfig:
    source: str = "synthetic"
    csv_path: str | None = None
    amplitude_frac: tuple[float, float] = (0.25, 0.6)
    period_slots: tuple[float, float] = (60.0, 200.0)
    drift_sigma: float = 1.0
    noise_sigma: float = 2.0


@dataclass(frozen=True)
class DirectionConfig:
    window: int = 10
    lstm_hidden: int = 64
    learning_rate: float = 0.005
    minibatch: int = 64
    replay: int = 5000


@dataclass(frozen=True)
class CnnConfig:
    filters: int = 64
    fc_units: int = 128
    learning_rate: float = 1.0e-3
    minibatch: int = 64
    pretrain_scenes: int = 150
    pretrain_epochs: int = 30
    checkpoint: str | None = None


@dataclass(frozen=True)
class AgentSection:
    discount: float = 0.9
    learning_rate: float = 0.05
    hidden_layers: int = 2
    hidden_units: int = 128
    codebook_size: int = 24
    replay_capacity: int = 10_000
    warmup_slots: int = 64
    minibatch: int = 64
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_anneal_slots: int = 150
    target_sync_period: int = 50
    train_steps_per_slot: int = 1
    exhaustive_full: bool = False


@dataclass(frozen=True)
class RunConfig:
    slots: int = 300
    episodes: int = 1
    seed: int = 0
    ris_mode: str = "cdrl"
    predictor_mode: str = "learned"
    viewpoint_mode: str = "centralized"
    out_dir: str | None = None


@dataclass(frozen=True)
class SimConfig:
    room: RoomConfig = field(default_factory=RoomConfig)
    mec: MecConfig = field(default_factory=MecConfig)
    ris: RisConfig = field(default_factory=RisConfig)
    users: UsersConfig = field(default_factory=UsersConfig)
    obstacles: tuple[ObstacleConfig, ...] = (
        ObstacleConfig(x_range=(4.0, 8.0)),
        ObstacleConfig(x_range=(12.0, 16.0)),
    )
    thz: ThzConfig = field(default_factory=ThzConfig)
    fov: FovConfig = field(default_factory=FovConfig)
    latency: LatencyConfig = field(default_factory=LatencyConfig)
    qoe: QoeConfig = field(default_factory=QoeConfig)
    viewpoint: ViewpointConfig = field(default_factory=ViewpointConfig)
    traces: TraceConfig = field(default_factory=TraceConfig)
    direction: DirectionConfig = field(default_factory=DirectionConfig)
    cnn: CnnConfig = field(default_factory=CnnConfig)
    agent: AgentSection = field(default_factory=AgentSection)
    run: RunConfig = field(default_factory=RunConfig)


def _coerce(value: Any, default: Any, path: str) -> Any:
    """Cast a parsed YAML value to the default's structure (tuples stay
    tuples, numbers stay numeric)."""
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list")
        inner = default[0] if default else None
        return tuple(_coerce(v, inner, f"{path}[{i}]") for i, v in enumerate(value))
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean")
        return value
    if isinstance(default, (int, float)) and not isinstance(default, bool):
        if isinstance(value, str):
            # YAML 1.1 treats exponents without a sign (3.0e11) as strings
            try:
                value = float(value)
            except ValueError:
                raise ConfigError(f"{path}: expected a number") from None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        if isinstance(default, float):
            return float(value)
        if float(value) != int(value):
            raise ConfigError(f"{path}: expected an integer")
        return int(value)
    return value


def _merge_section(dc_type, data: Any, path: str, defaulted: list[str]):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'top level'}: expected a mapping")
    data = dict(data)
    kwargs = {}
    for f in dataclasses.fields(dc_type):
        key_path = f"{path}{f.name}"
        default = f.default if f.default is not dataclasses.MISSING \
            else f.default_factory()
        if f.name in data:
            raw = data.pop(f.name)
            if dataclasses.is_dataclass(default):
                kwargs[f.name] = _merge_section(type(default), raw,
                                                key_path + ".", defaulted)
            elif f.name == "obstacles":
                if not isinstance(raw, list):
                    raise ConfigError(f"{key_path}: expected a list of obstacles")
                kwargs[f.name] = tuple(
                    _merge_section(ObstacleConfig, item, f"{key_path}[{i}].", defaulted)
                    for i, item in enumerate(raw))
            else:
                kwargs[f.name] = _coerce(raw, default, key_path)
        else:
            defaulted.append(key_path)
            kwargs[f.name] = default
    if data:
        raise ConfigError(
            f"unknown config key(s) under {path or 'top level'}: "
            + ", ".join(sorted(data)))
    return dc_type(**kwargs)


def _apply_env_overrides(data: dict, environ: dict[str, str]) -> dict:
    """THZVR_SECTION__KEY=value overrides, values parsed as YAML scalars."""
    for name, raw in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        parts = name[len(ENV_PREFIX):].lower().split("__")
        node = data
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"environment override {name} conflicts with scalar")
        node[parts[-1]] = yaml.safe_load(raw)
    return data


def validate(cfg: SimConfig) -> None:
    def require(cond: bool, msg: str) -> None:
        if not cond:
            raise ConfigError(msg)

    require(cfg.room.width > 0 and cfg.room.height > 0, "room dimensions must be positive")
    require(cfg.room.grid_m > 0, "grid resolution must be positive")
    require(cfg.users.count >= 1, "users.count must be at least 1")
    require(cfg.users.height_range[0] <= cfg.users.height_range[1]
            and cfg.users.height_range[0] > 0, "users.height_range invalid")
    require(cfg.users.height_range[1] < cfg.mec.position[2],
            "users must be shorter than the MEC mount height")
    require(cfg.users.speed_range[0] > 0
            and cfg.users.speed_range[0] <= cfg.users.speed_range[1],
            "users.speed_range must be positive and ordered")
    require(cfg.mec.antennas >= 1 and cfg.ris.elements >= 1,
            "array sizes must be at least 1")
    require(1 <= cfg.ris.phase_bits <= 8, "ris.phase_bits must be in 1..8")
    for i, obs in enumerate(cfg.obstacles):
        require(obs.x_range[0] <= obs.x_range[1] and obs.y_range[0] <= obs.y_range[1],
                f"obstacles[{i}] ranges must be ordered")
        require(obs.height > 0, f"obstacles[{i}] height must be positive")
    require(cfg.thz.frequency_hz > 0, "thz.frequency_hz must be positive")
    require(cfg.thz.tx_power_w > 0, "thz.tx_power_w must be positive")
    require(cfg.thz.bandwidth_hz > 0, "thz.bandwidth_hz must be positive")
    require(len(cfg.thz.absorption_table) >= 1, "thz.absorption_table is empty")
    require(cfg.fov.width_px > 0 and cfg.fov.height_px > 0, "fov resolution invalid")
    require(cfg.fov.compression_ratio >= 1.0, "fov.compression_ratio must be >= 1")
    require(cfg.latency.downlink_threshold_s > 0, "latency threshold must be positive")
    require(cfg.qoe.rate_threshold > 0, "qoe.rate_threshold must be positive")
    require(cfg.qoe.hit_tolerance_deg >= 0, "qoe.hit_tolerance_deg must be >= 0")
    require(all(a in ("x", "y", "z") for a in cfg.viewpoint.axes),
            "viewpoint.axes entries must be x, y, or z")
    require(cfg.viewpoint.window >= 1 and cfg.direction.window >= 1,
            "prediction windows must be at least 1")
    require(cfg.traces.source in ("synthetic", "csv"),
            "traces.source must be synthetic or csv")
    require(cfg.traces.source != "csv" or cfg.traces.csv_path,
            "traces.csv_path required when traces.source is csv")
    require(cfg.agent.codebook_size >= 2, "agent.codebook_size must be >= 2")
    require(0.0 <= cfg.agent.discount < 1.0, "agent.discount must be in [0, 1)")
    require(cfg.run.slots >= 1 and cfg.run.episodes >= 1,
            "run.slots and run.episodes must be at least 1")
    require(cfg.run.ris_mode in RIS_MODES,
            f"run.ris_mode must be one of {RIS_MODES}")
    require(cfg.run.predictor_mode in PREDICTOR_MODES,
            f"run.predictor_mode must be one of {PREDICTOR_MODES}")
    require(cfg.run.viewpoint_mode in VIEWPOINT_MODES,
            f"run.viewpoint_mode must be one of {VIEWPOINT_MODES}")


def load_config(path: str | Path | None = None,
                environ: dict[str, str] | None = None
                ) -> tuple[SimConfig, list[str]]:
    """Parse, override, validate. Returns the config and the list of keys
    that fell back to defaults."""
    data: dict = {}
    if path is not None:
        text = Path(path).read_text()
        parsed = yaml.safe_load(text)
        if parsed is None:
            parsed = {}
        if not isinstance(parsed, dict):
            raise ConfigError(f"{path}: config root must be a mapping")
        data = parsed
    env = environ if environ is not None else dict(os.environ)
    data = _apply_env_overrides(data, env)
    defaulted: list[str] = []
    cfg = _merge_section(SimConfig, data, "", defaulted)
    validate(cfg)
    return cfg, defaulted


def to_dict(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj):
        return {f.name: to_dict(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return [to_dict(v) for v in obj]
    return obj


def write_effective_config(cfg: SimConfig, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(to_dict(cfg), sort_keys=False))
