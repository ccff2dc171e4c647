"""The three learned predictors feeding the controller: online GRU viewpoint
regression (centralized or federated), online LSTM moving-direction
classification, and a CNN that reads a rasterized scene image to classify a
user's link as blocked or clear."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (DIRECTION_ORDER, DIRECTION_STEPS, Direction, Obstacle,
                       Position3)
from .nn import (AdamOptimizer, GruRegressor, LstmClassifier, ParameterTree,
                 SceneCnn, SgdOptimizer, cross_entropy, mse)
from .traces import AXIS_RANGES

GRID_COLORS = {
    "mec": (1.0, 0.0, 0.0),
    "obstacle": (0.0, 1.0, 0.0),
    "taller": (0.0, 0.0, 1.0),
    "shorter": (0.0, 0.0, 0.5),
    "target": (1.0, 1.0, 0.0),
}


# ---------------------------------------------------------------------------
# viewpoint prediction

@dataclass
class FedClientState:
    tree: ParameterTree
    n_samples: int


def fedavg_aggregate(clients: list[FedClientState]) -> ParameterTree:
    """Sample-count weighted elementwise average of client parameters."""
    if not clients:
        raise ValueError("no clients to aggregate")
    names = clients[0].tree.names()
    for client in clients[1:]:
        if client.tree.names() != names:
            raise ValueError("client parameter trees have different layouts")
    total = sum(c.n_samples for c in clients)
    if total <= 0:
        raise ValueError("all clients report zero samples")
    merged = ParameterTree()
    for name in names:
        acc = np.zeros_like(clients[0].tree.value(name))
        for client in clients:
            acc += (client.n_samples / total) * client.tree.value(name)
        merged.add(name, acc)
    return merged


class _AxisHistory:
    """Per-user ring of the most recent viewpoint samples for one axis."""

    def __init__(self, n_users: int, window: int):
        self.n_users = n_users
        self.window = window
        self.samples: list[list[float]] = [[] for _ in range(n_users)]

    def clear(self) -> None:
        self.samples = [[] for _ in range(self.n_users)]

    def push(self, values: np.ndarray) -> None:
        for k, v in enumerate(values):
            hist = self.samples[k]
            hist.append(float(v))
            if len(hist) > 4 * self.window:
                del hist[0]

    def ready(self) -> bool:
        return all(len(h) >= self.window for h in self.samples)

    def windows(self) -> np.ndarray:
        return np.array([h[-self.window:] for h in self.samples])[..., None]

    def last_values(self) -> np.ndarray:
        return np.array([h[-1] if h else 0.0 for h in self.samples])


class CentralizedViewpointPredictor:
    """One shared GRU per predicted axis, trained each slot on the pooled
    revealed viewpoints of every user."""

    def __init__(self, n_users: int, axes: list[str], window: int, hidden: int,
                 lr: float, rng: np.random.Generator):
        self.n_users = n_users
        self.axes = list(axes)
        self.window = window
        self.models = {axis: GruRegressor(1, hidden, rng) for axis in self.axes}
        self.opt = {axis: SgdOptimizer(lr) for axis in self.axes}
        self.history = {axis: _AxisHistory(n_users, window) for axis in self.axes}

    def predict(self) -> dict[str, np.ndarray]:
        """Predicted angle per axis; carries the last observation forward
        until a full window is available."""
        out = {}
        for axis in self.axes:
            hist = self.history[axis]
            if hist.ready():
                scale = AXIS_RANGES[axis]
                pred = self.models[axis].forward(hist.windows() / scale)
                out[axis] = pred[:, 0] * scale
            else:
                out[axis] = hist.last_values()
        return out

    def update(self, actuals: dict[str, np.ndarray]) -> None:
        for axis in self.axes:
            hist = self.history[axis]
            if hist.ready():
                scale = AXIS_RANGES[axis]
                model = self.models[axis]
                model.tree.zero_grads()
                pred = model.forward(hist.windows() / scale)
                _, dy = mse(pred, np.asarray(actuals[axis])[:, None] / scale)
                model.backward(dy)
                self.opt[axis].step(model.tree)
            hist.push(np.asarray(actuals[axis]))

    def model_bits(self) -> int:
        return sum(m.tree.payload_bits() for m in self.models.values())

    def reset_history(self) -> None:
        for hist in self.history.values():
            hist.clear()


class FedAvgViewpointPredictor:
    """Per-user GRU clients trained on local data only, merged every slot by
    sample-weighted parameter averaging and broadcast back."""

    def __init__(self, n_users: int, axes: list[str], window: int, hidden: int,
                 lr: float, local_steps: int, local_batch: int,
                 rng: np.random.Generator):
        self.n_users = n_users
        self.axes = list(axes)
        self.window = window
        self.local_steps = local_steps
        self.local_batch = local_batch
        self.rng = rng
        self.models = {axis: [GruRegressor(1, hidden, rng) for _ in range(n_users)]
                       for axis in self.axes}
        for axis in self.axes:  # clients start from one shared initialization
            shared = self.models[axis][0].tree.copy()
            for model in self.models[axis][1:]:
                model.tree.copy_from(shared)
        self.opt = SgdOptimizer(lr)
        self.history = {axis: _AxisHistory(n_users, window) for axis in self.axes}
        self.samples = {axis: [[] for _ in range(n_users)] for axis in self.axes}

    def predict(self) -> dict[str, np.ndarray]:
        out = {}
        for axis in self.axes:
            hist = self.history[axis]
            if hist.ready():
                scale = AXIS_RANGES[axis]
                windows = hist.windows() / scale
                preds = np.array([
                    self.models[axis][k].forward(windows[k:k + 1])[0, 0]
                    for k in range(self.n_users)])
                out[axis] = preds * scale
            else:
                out[axis] = hist.last_values()
        return out

    def update(self, actuals: dict[str, np.ndarray]) -> None:
        for axis in self.axes:
            hist = self.history[axis]
            scale = AXIS_RANGES[axis]
            if hist.ready():
                windows = hist.windows() / scale
                clients = []
                for k in range(self.n_users):
                    store = self.samples[axis][k]
                    store.append((windows[k], float(actuals[axis][k]) / scale))
                    if len(store) > 512:
                        del store[0]
                    model = self.models[axis][k]
                    for _ in range(self.local_steps):
                        take = min(self.local_batch, len(store))
                        idx = self.rng.integers(0, len(store), size=take)
                        xs = np.stack([store[i][0] for i in idx])
                        ts = np.array([[store[i][1]] for i in idx])
                        model.tree.zero_grads()
                        pred = model.forward(xs)
                        _, dy = mse(pred, ts)
                        model.backward(dy)
                        self.opt.step(model.tree)
                    clients.append(FedClientState(model.tree, len(store)))
                merged = fedavg_aggregate(clients)
                for model in self.models[axis]:
                    model.tree.copy_from(merged)
            hist.push(np.asarray(actuals[axis]))

    def model_bits(self) -> int:
        return sum(self.models[axis][0].tree.payload_bits() for axis in self.axes)

    def reset_history(self) -> None:
        for hist in self.history.values():
            hist.clear()


# ---------------------------------------------------------------------------
# moving-direction prediction

DIRECTION_INDEX = {d: i for i, d in enumerate(DIRECTION_ORDER)}


class DirectionPredictor:
    """Shared LSTM softmax classifier over the four moving directions, trained
    online on minibatches replayed from the observed position stream."""

    def __init__(self, n_users: int, window: int, hidden: int, lr: float,
                 minibatch: int, replay_cap: int, room_width: float,
                 rng: np.random.Generator):
        self.n_users = n_users
        self.window = window
        self.minibatch = minibatch
        self.replay_cap = replay_cap
        self.room_width = room_width
        self.rng = rng
        self.model = LstmClassifier(2, hidden, 4, rng)
        self.opt = SgdOptimizer(lr)
        self.history: list[list[tuple[float, float]]] = [[] for _ in range(n_users)]
        self.replay: list[tuple[np.ndarray, int]] = []

    def _window_for(self, k: int) -> np.ndarray | None:
        hist = self.history[k]
        if len(hist) < self.window:
            return None
        return np.array(hist[-self.window:]) / self.room_width

    def predict_probs(self) -> np.ndarray:
        """(K, 4) direction probabilities; uniform until a window is filled."""
        probs = np.full((self.n_users, 4), 0.25)
        ready = [k for k in range(self.n_users) if self._window_for(k) is not None]
        if ready:
            batch = np.stack([self._window_for(k) for k in ready])
            out = self.model.forward(batch)
            for row, k in enumerate(ready):
                probs[k] = out[row]
        return probs

    def predict_positions(self, probs: np.ndarray) -> np.ndarray:
        """Project each user one step along its most probable direction using
        the last observed step length."""
        positions = np.zeros((self.n_users, 2))
        for k in range(self.n_users):
            hist = self.history[k]
            if not hist:
                continue
            pos = np.array(hist[-1])
            step = 0.0
            if len(hist) >= 2:
                prev = np.array(hist[-2])
                step = float(np.hypot(*(pos - prev)))
            direction = DIRECTION_ORDER[int(np.argmax(probs[k]))]
            delta = np.array(DIRECTION_STEPS[direction]) * step
            positions[k] = np.clip(pos + delta, 0.0, self.room_width)
        return positions

    def update(self, directions: list[Direction],
               positions: np.ndarray) -> float | None:
        """Record the revealed step of each user, then take one SGD step on a
        replayed minibatch. Returns the minibatch loss when trained."""
        for k in range(self.n_users):
            win = self._window_for(k)
            if win is not None:
                self.replay.append((win, DIRECTION_INDEX[directions[k]]))
                if len(self.replay) > self.replay_cap:
                    del self.replay[0]
            self.history[k].append((float(positions[k][0]), float(positions[k][1])))
            if len(self.history[k]) > 4 * self.window:
                del self.history[k][0]
        if not self.replay:
            return None
        take = min(self.minibatch, len(self.replay))
        idx = self.rng.integers(0, len(self.replay), size=take)
        xs = np.stack([self.replay[i][0] for i in idx])
        labels = np.array([self.replay[i][1] for i in idx])
        self.model.tree.zero_grads()
        probs = self.model.forward(xs)
        loss, dprobs = cross_entropy(probs, labels)
        self.model.backward(dprobs)
        self.opt.step(self.model.tree)
        return loss

    def reset_history(self) -> None:
        self.history = [[] for _ in range(self.n_users)]


# ---------------------------------------------------------------------------
# scene rasterization and blockage classification

def _cell(value: float, grid_m: float, n_cells: int) -> int:
    idx = int(round(value / grid_m))
    return min(max(idx, 0), n_cells - 1)


def rasterize_scene(mec: Position3, obstacles: tuple[Obstacle, ...],
                    user_xy: np.ndarray, user_heights: np.ndarray,
                    target: int, room_width: float,
                    grid_m: float = 1.0) -> np.ndarray:
    """Paint the scene onto an (n, n, 3) image, n = room/grid + 1. The queried
    user gets a highlight color; every other user is colored by whether it is
    taller than the queried one. Out-of-room positions clamp to the border."""
    n = int(round(room_width / grid_m)) + 1
    img = np.zeros((n, n, 3))
    img[_cell(mec.x, grid_m, n), _cell(mec.y, grid_m, n)] = GRID_COLORS["mec"]
    for obs in obstacles:
        for i in range(n):
            for j in range(n):
                if obs.contains_xy(i * grid_m, j * grid_m):
                    img[i, j] = GRID_COLORS["obstacle"]
    target_h = user_heights[target]
    order = [k for k in range(len(user_xy)) if k != target] + [target]
    for k in order:
        ci = _cell(user_xy[k][0], grid_m, n)
        cj = _cell(user_xy[k][1], grid_m, n)
        if k == target:
            img[ci, cj] = GRID_COLORS["target"]
        elif user_heights[k] > target_h:
            img[ci, cj] = GRID_COLORS["taller"]
        else:
            img[ci, cj] = GRID_COLORS["shorter"]
    return img


def decode_scene_image(img: np.ndarray, grid_m: float = 1.0) -> dict[str, list]:
    """Inverse of rasterize_scene for cell-aligned scenes: cell coordinates of
    every painted entity, keyed by color role."""
    out: dict[str, list] = {role: [] for role in GRID_COLORS}
    for i in range(img.shape[0]):
        for j in range(img.shape[1]):
            pixel = tuple(img[i, j])
            for role, color in GRID_COLORS.items():
                if pixel == color:
                    out[role].append((i * grid_m, j * grid_m))
    return out


class LosClassifier:
    """CNN over scene images; class 1 means the direct link is clear."""

    def __init__(self, image_hw: int, filters: int, fc_units: int, lr: float,
                 rng: np.random.Generator):
        self.model = SceneCnn(image_hw, 3, filters, fc_units, 2, rng)
        self.opt = AdamOptimizer(lr)

    def train(self, images: np.ndarray, labels: np.ndarray, epochs: int,
              minibatch: int, rng: np.random.Generator) -> list[float]:
        """Minibatch Adam training; returns the mean loss of each epoch."""
        n = images.shape[0]
        losses = []
        for _ in range(epochs):
            order = rng.permutation(n)
            epoch_loss = 0.0
            for start in range(0, n, minibatch):
                idx = order[start:start + minibatch]
                self.model.tree.zero_grads()
                probs = self.model.forward(images[idx])
                loss, dprobs = cross_entropy(probs, labels[idx])
                self.model.backward(dprobs)
                self.opt.step(self.model.tree)
                epoch_loss += loss * len(idx)
            losses.append(epoch_loss / n)
        return losses

    def classify(self, images: np.ndarray) -> np.ndarray:
        """True where the link is predicted clear."""
        probs = self.model.forward(images)
        return probs.argmax(axis=1) == 1

    def save(self, path) -> None:
        self.model.tree.save(path)

    def load(self, path) -> None:
        self.model.tree.copy_from(ParameterTree.load(path))
