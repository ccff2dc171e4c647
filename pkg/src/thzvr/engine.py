"""Slot pipeline orchestration.

Each slot runs, in order: user mobility, uplink with the previous slot's
reflection configuration, viewpoint prediction and online update, direction
prediction and online update, scene rasterization and blockage classification
(ground truth in genie mode), rendering latency, reflection selection for the
downlink, downlink rates and latencies, QoE and constraint accounting, and
finally agent replay storage, training, and the dual multiplier update.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import control, latency, phy
from .channel import ChannelParams, ChannelSet, build_channel_set
from .config import SimConfig, to_dict, write_effective_config
from .control import AgentConfig, CdqnAgent, PhaseConfig, Transition
from .geometry import (MobilityState, Obstacle, Position3, SceneState,
                       destination_cells, draw_destination, los_status,
                       vrmm_step, _direction_toward, DIRECTION_ORDER)
from .metrics import SlotMetrics, episode_summary, write_episode_summaries, write_metrics
from .predictors import (CentralizedViewpointPredictor, DirectionPredictor,
                         FedAvgViewpointPredictor, LosClassifier, rasterize_scene)
from .traces import TraceParams, load_trace_csv, synthetic_traces


@dataclass
class Learners:
    """Everything that persists across episodes while the world is reseeded."""
    viewpoint: CentralizedViewpointPredictor | FedAvgViewpointPredictor | None
    direction: DirectionPredictor | None
    classifier: LosClassifier | None
    agent: CdqnAgent | None


@dataclass
class SlotContext:
    """Frozen per-slot quantities needed to score one candidate reflection
    configuration."""
    channels: ChannelSet
    los_flags: list[bool]
    hits: list[int]
    prev_rates: np.ndarray | None
    payload_down_bits: float
    bandwidth_hz: float
    p_tx: float
    noise_w: float
    rate_threshold: float
    q_min: float
    downlink_threshold_s: float


def evaluate_action(ctx: SlotContext, cfg: PhaseConfig):
    """Rates, latencies, QoE, reward, and constraint terms for one candidate."""
    theta = np.exp(1j * cfg.phases)
    rates = phy.downlink_rates(ctx.channels, theta, ctx.los_flags, ctx.p_tx,
                               ctx.noise_w)
    t_down = [latency.transmit_latency(ctx.payload_down_bits, r, ctx.bandwidth_hz)
              for r in rates]
    prev = ctx.prev_rates if ctx.prev_rates is not None else rates
    qoes = [latency.qoe(ctx.hits[k], rates[k], prev[k], ctx.rate_threshold,
                        ctx.q_min).qoe
            for k in range(len(rates))]
    reward = control.compute_reward(qoes)
    cost, cost_signed = control.compute_cost(t_down, ctx.downlink_threshold_s)
    return reward, rates, t_down, qoes, cost, cost_signed


class World:
    """Mutable episode state: the scene, the traces, carried-over rates and
    QoE, and the uplink's one-slot-delayed reflection configuration."""

    def __init__(self, cfg: SimConfig, episode: int, learners: Learners):
        self.cfg = cfg
        self.episode = episode
        self.learners = learners
        ss = np.random.SeedSequence([cfg.run.seed, 2000 + episode])
        (self.rng_scene, self.rng_traces, self.rng_mobility, self.rng_codebook,
         self.rng_action, self.rng_replay) = map(np.random.default_rng, ss.spawn(6))

        self.mec = Position3(*cfg.mec.position)
        self.ris = Position3(*cfg.ris.position)
        self.obstacles = tuple(Obstacle(o.x_range, o.y_range, o.height)
                               for o in cfg.obstacles)
        self.cells = destination_cells(cfg.room.width, cfg.room.grid_m,
                                       self.obstacles)
        self.users = self._init_users()
        self.params = ChannelParams(
            f=cfg.thz.frequency_hz, absorption_table=cfg.thz.absorption_table,
            m_antennas=cfg.mec.antennas, n_elements=cfg.ris.elements,
            ris_gain=cfg.ris.element_gain)
        self.mec_broadside = np.deg2rad(cfg.mec.broadside_deg)
        self.ris_broadside = np.deg2rad(cfg.ris.broadside_deg)

        if cfg.traces.source == "csv":
            self.traces = load_trace_csv(cfg.traces.csv_path, cfg.users.count,
                                         cfg.run.slots)
        else:
            self.traces = synthetic_traces(
                cfg.users.count, cfg.run.slots, self.rng_traces,
                TraceParams(cfg.traces.amplitude_frac, cfg.traces.period_slots,
                            cfg.traces.drift_sigma, cfg.traces.noise_sigma))

        raw_bits = latency.fov_size_bits(cfg.fov.width_px, cfg.fov.height_px)
        self.fov_bits = raw_bits / cfg.fov.compression_ratio
        self.t_render = latency.render_latency(
            self.fov_bits, cfg.mec.cycles_per_bit, cfg.mec.compute_hz)

        self.prev_config = PhaseConfig.zero(cfg.ris.elements, cfg.ris.phase_bits)
        self.prev_rates: np.ndarray | None = None
        self.prev_qoe = np.zeros(cfg.users.count)
        self.pending: tuple[np.ndarray, int, float, float] | None = None
        self.random_pool = [control.random_config(cfg.ris.elements,
                                                  cfg.ris.phase_bits,
                                                  self.rng_codebook)
                            for _ in range(2 * cfg.agent.codebook_size)]
        self.slot = 0

    def _init_users(self) -> list[MobilityState]:
        cfg = self.cfg
        users = []
        for _ in range(cfg.users.count):
            while True:
                x = self.rng_scene.uniform(0.0, cfg.room.width)
                y = self.rng_scene.uniform(0.0, cfg.room.width)
                if not any(o.contains_xy(x, y) for o in self.obstacles):
                    break
            h = self.rng_scene.uniform(*cfg.users.height_range)
            speed = self.rng_scene.uniform(*cfg.users.speed_range)
            pos = Position3(x, y, h)
            dest = draw_destination(self.rng_scene, self.cells)
            direction = _direction_toward(pos, dest) or DIRECTION_ORDER[0]
            users.append(MobilityState(pos, dest, direction, speed))
        return users

    def scene(self) -> SceneState:
        return SceneState(mec=self.mec, ris=self.ris, users=tuple(self.users),
                          obstacles=self.obstacles)

    def build_codebook(self, ch: ChannelSet,
                       nlos_users: list[int] | None = None) -> list[PhaseConfig]:
        return control.build_codebook(ch, self.cfg.ris.phase_bits,
                                      self.cfg.agent.codebook_size,
                                      self.rng_codebook,
                                      random_pool=self.random_pool,
                                      nlos_users=nlos_users)


def build_learners(cfg: SimConfig, pretrain_dataset=None) -> Learners:
    """Construct the persistent learners; in learned mode the blockage CNN is
    loaded from a checkpoint or pretrained on generated scenes."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.run.seed, 1000]))
    agent = None
    if cfg.run.ris_mode == "cdrl":
        k = cfg.users.count
        agent = CdqnAgent(AgentConfig(
            state_dim=5 * k, n_actions=cfg.agent.codebook_size,
            hidden_units=cfg.agent.hidden_units,
            hidden_layers=cfg.agent.hidden_layers,
            discount=cfg.agent.discount,
            learning_rate=cfg.agent.learning_rate,
            replay_capacity=cfg.agent.replay_capacity,
            minibatch=cfg.agent.minibatch,
            warmup=cfg.agent.warmup_slots,
            epsilon_start=cfg.agent.epsilon_start,
            epsilon_end=cfg.agent.epsilon_end,
            epsilon_anneal_steps=cfg.agent.epsilon_anneal_slots,
            target_sync_period=cfg.agent.target_sync_period), rng)
    if cfg.run.predictor_mode == "genie":
        return Learners(viewpoint=None, direction=None, classifier=None,
                        agent=agent)

    if cfg.run.viewpoint_mode == "fedavg":
        viewpoint = FedAvgViewpointPredictor(
            cfg.users.count, list(cfg.viewpoint.axes), cfg.viewpoint.window,
            cfg.viewpoint.gru_hidden, cfg.viewpoint.learning_rate,
            cfg.viewpoint.fedavg_local_steps, cfg.viewpoint.fedavg_local_batch,
            rng)
    else:
        viewpoint = CentralizedViewpointPredictor(
            cfg.users.count, list(cfg.viewpoint.axes), cfg.viewpoint.window,
            cfg.viewpoint.gru_hidden, cfg.viewpoint.learning_rate, rng)
    direction = DirectionPredictor(
        cfg.users.count, cfg.direction.window, cfg.direction.lstm_hidden,
        cfg.direction.learning_rate, cfg.direction.minibatch,
        cfg.direction.replay, cfg.room.width, rng)
    image_hw = int(round(cfg.room.width / cfg.room.grid_m)) + 1
    classifier = LosClassifier(image_hw, cfg.cnn.filters, cfg.cnn.fc_units,
                               cfg.cnn.learning_rate, rng)
    if cfg.cnn.checkpoint and Path(cfg.cnn.checkpoint).exists():
        classifier.load(cfg.cnn.checkpoint)
    else:
        if pretrain_dataset is None:
            pretrain_dataset = generate_scene_dataset(
                cfg, cfg.cnn.pretrain_scenes, rng)
        images, labels = pretrain_dataset
        classifier.train(images, labels, cfg.cnn.pretrain_epochs,
                         cfg.cnn.minibatch, rng)
    return Learners(viewpoint=viewpoint, direction=direction,
                    classifier=classifier, agent=agent)


def generate_scene_dataset(cfg: SimConfig, n_scenes: int,
                           rng: np.random.Generator,
                           n_users: int | None = None):
    """Random static scenes rendered once per user with that user highlighted,
    labeled by the geometric blockage truth."""
    k = n_users if n_users is not None else cfg.users.count
    obstacles = tuple(Obstacle(o.x_range, o.y_range, o.height)
                      for o in cfg.obstacles)
    mec = Position3(*cfg.mec.position)
    images, labels = [], []
    for _ in range(n_scenes):
        xy = np.empty((k, 2))
        heights = rng.uniform(*cfg.users.height_range, size=k)
        for u in range(k):
            while True:
                x = rng.uniform(0.0, cfg.room.width)
                y = rng.uniform(0.0, cfg.room.width)
                if not any(o.contains_xy(x, y) for o in obstacles):
                    xy[u] = (x, y)
                    break
        users = tuple(MobilityState(Position3(xy[u][0], xy[u][1], heights[u]),
                                    (0.0, 0.0), DIRECTION_ORDER[0], 1.0)
                      for u in range(k))
        scene = SceneState(mec=mec, ris=Position3(*cfg.ris.position),
                           users=users, obstacles=obstacles)
        flags = los_status(scene, cfg.users.body_radius, cfg.room.height)
        for u in range(k):
            images.append(rasterize_scene(mec, obstacles, xy, heights, u,
                                          cfg.room.width, cfg.room.grid_m))
            labels.append(int(flags[u]))
    return np.stack(images), np.array(labels)


def run_slot(world: World, train_agent: bool = True,
             greedy: bool = False) -> SlotMetrics:
    cfg = world.cfg
    k_users = cfg.users.count
    t = world.slot
    learners = world.learners
    genie = cfg.run.predictor_mode == "genie"

    # (1) mobility
    world.users = [vrmm_step(u, world.rng_mobility, cfg.room.width, world.cells)
                   for u in world.users]
    directions = [u.direction for u in world.users]
    positions = [u.position for u in world.users]
    pos_array = np.array([[p.x, p.y, p.z] for p in positions])

    # (2) uplink with the previous slot's configuration
    true_flags = los_status(world.scene(), cfg.users.body_radius,
                            cfg.room.height)
    ch = build_channel_set(world.params, world.mec, world.ris, positions,
                           true_flags, world.mec_broadside, world.ris_broadside)
    theta_prev = np.exp(1j * world.prev_config.phases)
    uplink_rates = [phy.uplink_rate(k, ch, theta_prev, cfg.thz.tx_power_w,
                                    cfg.thz.noise_w)
                    for k in range(k_users)]
    if cfg.run.viewpoint_mode == "fedavg" and learners.viewpoint is not None:
        payload_up = float(learners.viewpoint.model_bits())
    else:
        payload_up = float(cfg.fov.viewpoint_packet_bits)
    t_uplink = [latency.transmit_latency(payload_up, r, cfg.thz.bandwidth_hz)
                for r in uplink_rates]

    # (3) viewpoint prediction and online update
    actuals = {axis: world.traces[axis][:, t] for axis in cfg.viewpoint.axes}
    if genie or learners.viewpoint is None:
        hits = [1] * k_users
        sqerr = [0.0] * k_users
    else:
        preds = learners.viewpoint.predict()
        hits, sqerr = [], []
        for k in range(k_users):
            pred_vec = [float(preds[a][k]) for a in cfg.viewpoint.axes]
            act_vec = [float(actuals[a][k]) for a in cfg.viewpoint.axes]
            hits.append(latency.viewpoint_hit(pred_vec, act_vec,
                                              cfg.qoe.hit_tolerance_deg))
            sqerr.append(float(sum((p - a) ** 2
                                   for p, a in zip(pred_vec, act_vec))))
        learners.viewpoint.update(actuals)

    # (4) position prediction and online update
    if genie or learners.direction is None:
        pred_xy = pos_array[:, :2].copy()
    else:
        probs = learners.direction.predict_probs()
        pred_xy = learners.direction.predict_positions(probs)
        learners.direction.update(directions, pos_array[:, :2])

    # (5) blockage prediction from the rasterized scene
    if genie or learners.classifier is None:
        pred_flags = list(true_flags)
    else:
        heights = pos_array[:, 2]
        images = np.stack([
            rasterize_scene(world.mec, world.obstacles, pred_xy, heights, k,
                            cfg.room.width, cfg.room.grid_m)
            for k in range(k_users)])
        pred_flags = [bool(v) for v in learners.classifier.classify(images)]

    # (6) rendering latency is state-independent
    t_render = world.t_render

    # (7) reflection selection for the downlink
    payload_down = world.fov_bits
    if cfg.run.viewpoint_mode == "fedavg" and learners.viewpoint is not None:
        payload_down += float(learners.viewpoint.model_bits())
    ctx = SlotContext(
        channels=ch, los_flags=true_flags, hits=hits,
        prev_rates=world.prev_rates, payload_down_bits=payload_down,
        bandwidth_hz=cfg.thz.bandwidth_hz, p_tx=cfg.thz.tx_power_w,
        noise_w=cfg.thz.noise_w, rate_threshold=cfg.qoe.rate_threshold,
        q_min=cfg.qoe.q_min, downlink_threshold_s=cfg.latency.downlink_threshold_s)

    pred_nlos = [k for k, f in enumerate(pred_flags) if not f]
    codebook = world.build_codebook(ch, nlos_users=pred_nlos)
    state = control.encode_state(pos_array, pred_flags, world.prev_qoe,
                                 cfg.room.width, cfg.room.height,
                                 cfg.qoe.q_min, cfg.qoe.q_max)
    agent = learners.agent
    eps_logged = 0.0
    if cfg.run.ris_mode == "cdrl":
        if world.pending is not None and train_agent:
            s_prev, a_prev, r_prev, c_prev = world.pending
            agent.store(Transition(s_prev, a_prev, r_prev, c_prev, state, False))
        eps_logged = 0.0 if greedy else agent.epsilon
        action = agent.select_action(state, len(codebook), world.rng_action,
                                     greedy=greedy)
        chosen = codebook[action]
    elif cfg.run.ris_mode == "exhaustive":
        if cfg.agent.exhaustive_full:
            candidates = list(control.enumerate_full_space(cfg.ris.elements,
                                                           cfg.ris.phase_bits))
        else:
            candidates = codebook
        chosen, _ = control.exhaustive_select(
            candidates, lambda c: evaluate_action(ctx, c)[0])
        action = candidates.index(chosen)
    else:  # random
        action, chosen = control.random_select(codebook, world.rng_action)

    # (8)-(9) downlink, QoE, constraint terms
    reward, rates, t_down, qoes, cost, cost_signed = evaluate_action(ctx, chosen)

    # (10) replay storage, training, multiplier ascent
    if cfg.run.ris_mode == "cdrl" and train_agent:
        terminal = (t == cfg.run.slots - 1)
        if terminal:
            agent.store(Transition(state, action, reward, cost, state, True))
            world.pending = None
        else:
            world.pending = (state, action, reward, cost)
        for _ in range(cfg.agent.train_steps_per_slot):
            agent.train_step(world.rng_replay)
        agent.update_multiplier()

    record = SlotMetrics(
        episode=world.episode, slot=t,
        positions=[(p.x, p.y, p.z) for p in positions],
        los_true=list(true_flags), los_pred=list(pred_flags), hits=hits,
        viewpoint_sqerr=sqerr, uplink_rates=[float(r) for r in uplink_rates],
        downlink_rates=[float(r) for r in rates],
        t_uplink=[float(x) for x in t_uplink], t_render=float(t_render),
        t_downlink=[float(x) for x in t_down], qoe=[float(q) for q in qoes],
        action=int(action), reward=float(reward), cost=float(cost),
        cost_signed=float(cost_signed),
        lambda_mult=float(agent.lambda_mult) if agent else 0.0,
        epsilon=float(eps_logged))

    world.prev_config = chosen
    world.prev_rates = np.asarray(rates)
    world.prev_qoe = np.asarray(qoes)
    world.slot += 1
    return record


def run_episode(cfg: SimConfig, episode: int, learners: Learners,
                train_agent: bool = True,
                greedy: bool = False) -> list[SlotMetrics]:
    world = World(cfg, episode, learners)
    if learners.viewpoint is not None:
        learners.viewpoint.reset_history()
    if learners.direction is not None:
        learners.direction.reset_history()
    return [run_slot(world, train_agent=train_agent, greedy=greedy)
            for _ in range(cfg.run.slots)]


def run_experiment(cfg: SimConfig, out_dir: str | Path,
                   learners: Learners | None = None) -> dict[str, Path]:
    """Run the configured episodes with persistent learners and write the
    metrics CSV, the JSONL stream, episode summaries, and the effective
    configuration."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if learners is None:
        learners = build_learners(cfg)
    all_records: list[SlotMetrics] = []
    summaries = []
    for episode in range(cfg.run.episodes):
        records = run_episode(cfg, episode, learners)
        all_records.extend(records)
        summaries.append(episode_summary(records, cfg.latency.vr_threshold_s))
    paths = {
        "metrics_csv": out / "metrics.csv",
        "metrics_jsonl": out / "metrics.jsonl",
        "episodes_csv": out / "episodes.csv",
        "config": out / "effective_config.yaml",
        "summary": out / "summary.json",
    }
    write_metrics(all_records, paths["metrics_csv"], paths["metrics_jsonl"])
    write_episode_summaries(summaries, paths["episodes_csv"])
    write_effective_config(cfg, paths["config"])
    overall = {
        "mode": {"ris": cfg.run.ris_mode, "predictors": cfg.run.predictor_mode,
                 "viewpoint": cfg.run.viewpoint_mode},
        "episodes": cfg.run.episodes,
        "mean_qoe": float(np.mean([s["mean_qoe"] for s in summaries])),
        "mean_reward": float(np.mean([s["mean_reward"] for s in summaries])),
        "mean_t_vr": float(np.mean([s["mean_t_vr"] for s in summaries])),
        "violation_rate": float(np.mean([s["violation_rate"] for s in summaries])),
    }
    paths["summary"].write_text(json.dumps(overall, indent=2) + "\n")
    return paths


SWEEP_AXES = {"users", "ris-elements"}


def sweep_value_config(cfg: SimConfig, axis: str, value: int) -> SimConfig:
    if axis == "users":
        return replace(cfg, users=replace(cfg.users, count=int(value)))
    if axis == "ris-elements":
        return replace(cfg, ris=replace(cfg.ris, elements=int(value)))
    raise ValueError(f"unknown sweep axis {axis!r}; choose from {sorted(SWEEP_AXES)}")


def _sweep_task(args):
    cfg, axis, value, seed, run_dir = args
    cfg_v = sweep_value_config(cfg, axis, value)
    cfg_v = replace(cfg_v, run=replace(cfg_v.run, seed=seed))
    run_experiment(cfg_v, run_dir)
    summary = json.loads((Path(run_dir) / "summary.json").read_text())
    return value, seed, summary


def run_sweep(cfg: SimConfig, axis: str, values: list[int],
              out_dir: str | Path, seeds: list[int] | None = None,
              workers: int = 1) -> Path:
    """Vary exactly one axis, holding everything else fixed; one aggregate row
    per value with seed means and standard errors."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = seeds if seeds else [cfg.run.seed]
    tasks = [(cfg, axis, value, seed, out / f"{axis}_{value}" / f"seed_{seed}")
             for value in values for seed in seeds]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]

    rows = []
    for value in values:
        qoes = [r[2]["mean_qoe"] for r in results if r[0] == value]
        lats = [r[2]["mean_t_vr"] for r in results if r[0] == value]
        viol = [r[2]["violation_rate"] for r in results if r[0] == value]
        n = len(qoes)
        rows.append({
            "axis": axis, "value": value, "seeds": n,
            "mean_qoe": float(np.mean(qoes)),
            "sem_qoe": float(np.std(qoes, ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
            "mean_t_vr": float(np.mean(lats)),
            "sem_t_vr": float(np.std(lats, ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
            "violation_rate": float(np.mean(viol)),
        })
    agg_path = out / "aggregate.csv"
    with open(agg_path, "w") as fh:
        cols = list(rows[0].keys())
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(repr(row[c]) if isinstance(row[c], float)
                              else str(row[c]) for c in cols) + "\n")
    return agg_path
