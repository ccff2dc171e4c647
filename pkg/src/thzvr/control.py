"""Reflection-configuration selection: a constrained deep-Q agent with replay
memory, target network, epsilon-greedy exploration, and dual ascent on the
latency multiplier, plus exhaustive and random baselines over a finite
codebook of candidate configurations."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterable, Sequence

import numpy as np

from .channel import ChannelSet
from .nn import AdamOptimizer, MlpNet
from .phy import PhaseConfig, quantize_phase

FULL_ENUM_LIMIT = 1 << 20


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    cost: float
    next_state: np.ndarray
    terminal: bool


class ReplayMemory:
    """Bounded ring; oldest transitions are evicted first."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._items: list[Transition] = []
        self._next = 0

    def push(self, item: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._next] = item
        self._next = (self._next + 1) % self.capacity

    def sample(self, rng: np.random.Generator, size: int) -> list[Transition]:
        idx = rng.integers(0, len(self._items), size=size)
        return [self._items[i] for i in idx]

    def mean_cost(self) -> float:
        if not self._items:
            return 0.0
        return float(np.mean([t.cost for t in self._items]))

    def __len__(self) -> int:
        return len(self._items)


def encode_state(positions: np.ndarray, los_flags: Sequence[bool],
                 prev_qoe: np.ndarray, room_width: float, room_height: float,
                 q_min: float, q_max: float) -> np.ndarray:
    """Flatten (positions, flags, previous QoE) into the 5K state vector:
    positions normalized by room size, flags as {0,1}, QoE clamped to
    [q_min, q_max] and rescaled to [-1, 1] so no block dominates the net."""
    pos = np.asarray(positions, dtype=float)
    norm = pos / np.array([room_width, room_width, room_height])
    flags = np.array([1.0 if f else 0.0 for f in los_flags])
    q = np.clip(np.asarray(prev_qoe, dtype=float), q_min, q_max)
    q_scale = max(abs(q_min), abs(q_max), 1e-9)
    return np.concatenate([norm.reshape(-1), flags, q / q_scale])


def steering_config(g_user: np.ndarray, a_ris: np.ndarray,
                    bits: int) -> PhaseConfig:
    """Quantized conjugate-phase configuration that maximizes the reflected
    power toward one user. The received amplitude through the surface is
    proportional to |sum_n conj(g_b[n]) e^{j theta_n} a_ris[n]|, so each
    element negates the angle of its cascade term conj(g_b) * a_ris."""
    cascade = np.conj(g_user) * a_ris
    levels = quantize_phase(-np.angle(cascade), bits)
    return PhaseConfig(levels=tuple(int(l) for l in levels), bits=bits)


def split_steering_config(ch: ChannelSet, users: Sequence[int],
                          bits: int) -> PhaseConfig:
    """Element-split steering that shares the surface round-robin among a user
    subset; each element aligns its cascade toward its assigned user. The
    singleton subset reduces to plain steering."""
    if not users:
        return PhaseConfig.zero(ch.g[0].shape[0], bits)
    n_elements = ch.g[0].shape[0]
    levels = []
    for n in range(n_elements):
        u = users[n % len(users)]
        cascade = np.conj(ch.g[u][n]) * ch.a_ris_from_mec[n]
        levels.append(int(quantize_phase(-np.angle(cascade), bits)))
    return PhaseConfig(levels=tuple(levels), bits=bits)


def random_config(n_elements: int, bits: int,
                  rng: np.random.Generator) -> PhaseConfig:
    levels = rng.integers(0, 1 << bits, size=n_elements)
    return PhaseConfig(levels=tuple(int(l) for l in levels), bits=bits)


MAX_PAIR_USERS = 8


def build_codebook(ch: ChannelSet, bits: int, size: int,
                   rng: np.random.Generator,
                   random_pool: list[PhaseConfig] | None = None,
                   nlos_users: Sequence[int] | None = None
                   ) -> list[PhaseConfig]:
    """Candidate set with index-stable semantics: entry 0 is the all-zero
    configuration, entry k+1 steers at user k, the next entry splits the
    surface across the currently-predicted blocked set, then pairwise splits
    (small user counts only), then distinct random fills. A pre-drawn pool
    keeps the tail identical across per-slot rebuilds, so a learner can attach
    value to a fixed action index. Channel-derived entries are refreshed from
    the current channels and may transiently coincide."""
    if size < 2:
        raise ValueError("codebook size must be at least 2")
    n_elements = ch.g[0].shape[0]
    n_users = len(ch.g)
    if size < n_users + 1:
        warnings.warn(f"codebook size {size} < users+1 ({n_users + 1}); "
                      "steering entries truncated")
    entries = [PhaseConfig.zero(n_elements, bits)]
    for g_user in ch.g:
        if len(entries) >= size:
            break
        entries.append(steering_config(g_user, ch.a_ris_from_mec, bits))
    if len(entries) < size and nlos_users is not None:
        entries.append(split_steering_config(ch, list(nlos_users), bits))
    if n_users <= MAX_PAIR_USERS:
        for i in range(n_users):
            for j in range(i + 1, n_users):
                if len(entries) >= size:
                    break
                entries.append(split_steering_config(ch, [i, j], bits))
    seen = {cfg.levels for cfg in entries}
    pool = random_pool if random_pool is not None else []
    pool_iter = iter(pool)
    attempts = 0
    while len(entries) < size and attempts < 50 * size:
        cfg = next(pool_iter, None)
        if cfg is None:
            cfg = random_config(n_elements, bits, rng)
        if cfg.levels not in seen:
            entries.append(cfg)
            seen.add(cfg.levels)
        attempts += 1
    return entries


def enumerate_full_space(n_elements: int, bits: int) -> Iterable[PhaseConfig]:
    """Every discrete configuration; guarded against blowups."""
    n_levels = 1 << bits
    total = n_levels ** n_elements
    if total > FULL_ENUM_LIMIT:
        raise ValueError(
            f"full enumeration of {total} configurations refused "
            f"(limit {FULL_ENUM_LIMIT}); enumerate a codebook instead")
    for levels in product(range(n_levels), repeat=n_elements):
        yield PhaseConfig(levels=levels, bits=bits)


def exhaustive_select(candidates: Iterable[PhaseConfig],
                      reward_fn: Callable[[PhaseConfig], float]
                      ) -> tuple[PhaseConfig, float]:
    """Slot-greedy argmax of the reward over the candidate set; first best
    wins on ties."""
    best_cfg = None
    best_reward = -np.inf
    for cfg in candidates:
        r = reward_fn(cfg)
        if r > best_reward:
            best_cfg, best_reward = cfg, r
    if best_cfg is None:
        raise ValueError("empty candidate set")
    return best_cfg, best_reward


def random_select(codebook: Sequence[PhaseConfig],
                  rng: np.random.Generator) -> tuple[int, PhaseConfig]:
    idx = int(rng.integers(0, len(codebook)))
    return idx, codebook[idx]


def compute_reward(qoe_per_user: Sequence[float]) -> float:
    return float(np.sum(qoe_per_user))


def compute_cost(latencies: Sequence[float], threshold: float
                 ) -> tuple[float, float]:
    """Mean-latency constraint terms: (violation max(0, mean - threshold),
    signed slack threshold - mean). The violation form drives the dual update;
    the signed form is logged for comparison. Dead links report infinite
    latency, capped at 10x the threshold so the dual ascent stays finite."""
    finite = [min(l, 10.0 * threshold + 1.0) for l in latencies]
    mean = float(np.mean(finite)) if finite else 0.0
    return max(0.0, mean - threshold), threshold - mean


def tabular_blend(q_eval: float, q_target: float, alpha: float) -> float:
    """Tabular form of the blended value update."""
    return (1.0 - alpha) * q_eval + alpha * q_target


@dataclass
class AgentConfig:
    state_dim: int
    n_actions: int
    hidden_units: int = 128
    hidden_layers: int = 2
    discount: float = 0.9
    learning_rate: float = 0.05
    replay_capacity: int = 10_000
    minibatch: int = 64
    warmup: int = 64
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_anneal_steps: int = 150
    target_sync_period: int = 50
    td_clip: float = 5.0
    weight_decay: float = 0.0
    multiplier_lr: float | None = None  # defaults to learning_rate


class CdqnAgent:
    """Deep-Q controller with a Lagrangian latency penalty in the target."""

    def __init__(self, cfg: AgentConfig, rng: np.random.Generator):
        sizes = [cfg.state_dim] + [cfg.hidden_units] * cfg.hidden_layers + [cfg.n_actions]
        self.cfg = cfg
        self.q_eval = MlpNet(sizes, rng)
        self.q_target = MlpNet(sizes, rng)
        self.q_target.tree.copy_from(self.q_eval.tree)
        self.opt = AdamOptimizer(cfg.learning_rate, weight_decay=cfg.weight_decay)
        self.replay = ReplayMemory(cfg.replay_capacity)
        self.lambda_mult = 0.0
        self.select_count = 0
        self.train_count = 0

    @property
    def epsilon(self) -> float:
        cfg = self.cfg
        frac = min(1.0, self.select_count / max(1, cfg.epsilon_anneal_steps))
        return cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start)

    def q_values(self, state: np.ndarray, n_actions: int | None = None) -> np.ndarray:
        q = self.q_eval.forward(state[None, :])[0]
        return q if n_actions is None else q[:n_actions]

    def select_action(self, state: np.ndarray, n_actions: int,
                      rng: np.random.Generator, greedy: bool = False) -> int:
        """Epsilon-greedy over the first n_actions outputs; Q ties break to
        the lowest index."""
        eps = 0.0 if greedy else self.epsilon
        self.select_count += 1
        if self.select_count <= self.cfg.warmup and not greedy:
            eps = 1.0
        if rng.uniform() < eps:
            return int(rng.integers(0, n_actions))
        return int(np.argmax(self.q_values(state, n_actions)))

    def store(self, transition: Transition) -> None:
        self.replay.push(transition)

    def ready_to_train(self) -> bool:
        return (len(self.replay) >= self.cfg.minibatch
                and self.select_count > self.cfg.warmup)

    def train_step(self, rng: np.random.Generator) -> float | None:
        """One regression step of the eval net toward
        r + gamma * max_a' Q_target(s') - lambda * cost (r alone at terminals)."""
        if not self.ready_to_train():
            return None
        batch = self.replay.sample(rng, self.cfg.minibatch)
        states = np.stack([t.state for t in batch])
        next_states = np.stack([t.next_state for t in batch])
        actions = np.array([t.action for t in batch])
        rewards = np.array([t.reward for t in batch])
        costs = np.array([t.cost for t in batch])
        terminal = np.array([t.terminal for t in batch])

        q_next = self.q_target.forward(next_states).max(axis=1)
        targets = rewards + self.cfg.discount * q_next - self.lambda_mult * costs
        targets = np.where(terminal, rewards, targets)

        self.q_eval.tree.zero_grads()
        q = self.q_eval.forward(states)
        picked = q[np.arange(len(batch)), actions]
        err = picked - targets
        loss = float(np.mean(err * err))
        # clipped TD error keeps reward outliers from destabilizing the fit
        if self.cfg.td_clip > 0:
            err = np.clip(err, -self.cfg.td_clip, self.cfg.td_clip)
        dq = np.zeros_like(q)
        dq[np.arange(len(batch)), actions] = 2.0 * err / len(batch)
        self.q_eval.backward(dq)
        self.opt.step(self.q_eval.tree)

        self.train_count += 1
        if self.train_count % self.cfg.target_sync_period == 0:
            self.sync_target()
        return loss

    def update_multiplier(self) -> float:
        """Dual ascent on the mean stored violation; the multiplier never
        goes negative."""
        lr = self.cfg.multiplier_lr if self.cfg.multiplier_lr is not None \
            else self.cfg.learning_rate
        self.lambda_mult = max(0.0, self.lambda_mult + lr * self.replay.mean_cost())
        return self.lambda_mult

    def sync_target(self) -> None:
        self.q_target.tree.copy_from(self.q_eval.tree)
