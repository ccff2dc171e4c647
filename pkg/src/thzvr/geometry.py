"""Indoor scene geometry: VRMM user mobility and LoS/NLoS blockage tests.

The room is a W x W square with full height H. Users move on a 1 m grid
following a four-direction mobility model (up/down/left/right toward a
destination cell). Blockage is evaluated in the 2D floor plane: obstacles
are axis-aligned boxes, and taller users shadow shorter ones along the
ray from the access point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

_ARRIVE_EPS = 1e-9


class Direction(Enum):
    UP = "up"
    DOWN = "down"
    LEFT = "left"
    RIGHT = "right"


DIRECTION_STEPS = {
    Direction.UP: (0.0, 1.0),
    Direction.DOWN: (0.0, -1.0),
    Direction.LEFT: (-1.0, 0.0),
    Direction.RIGHT: (1.0, 0.0),
}

DIRECTION_ORDER = (Direction.UP, Direction.DOWN, Direction.LEFT, Direction.RIGHT)


@dataclass(frozen=True)
class Position3:
    x: float
    y: float
    z: float

    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class Obstacle:
    x_range: tuple[float, float]
    y_range: tuple[float, float]
    height: float

    def contains_xy(self, x: float, y: float) -> bool:
        return (self.x_range[0] <= x <= self.x_range[1]
                and self.y_range[0] <= y <= self.y_range[1])


@dataclass(frozen=True)
class MobilityState:
    position: Position3
    destination: tuple[float, float]
    direction: Direction
    speed: float  # meters per slot


@dataclass(frozen=True)
class SceneState:
    mec: Position3
    ris: Position3
    users: tuple[MobilityState, ...]
    obstacles: tuple[Obstacle, ...]

    @property
    def user_positions(self) -> tuple[Position3, ...]:
        return tuple(u.position for u in self.users)


class InvalidConfigError(ValueError):
    pass


def _direction_toward(pos: Position3, dest: tuple[float, float]) -> Direction | None:
    """X-leg first, then Y-leg; None when already at the destination."""
    dx = dest[0] - pos.x
    dy = dest[1] - pos.y
    if abs(dx) > _ARRIVE_EPS:
        return Direction.RIGHT if dx > 0 else Direction.LEFT
    if abs(dy) > _ARRIVE_EPS:
        return Direction.UP if dy > 0 else Direction.DOWN
    return None


def destination_cells(width: float, grid_m: float,
                      obstacles: tuple[Obstacle, ...]) -> list[tuple[float, float]]:
    """Grid lattice points usable as destinations (outside obstacle footprints)."""
    n = int(round(width / grid_m)) + 1
    cells = []
    for i in range(n):
        for j in range(n):
            x, y = i * grid_m, j * grid_m
            if not any(o.contains_xy(x, y) for o in obstacles):
                cells.append((x, y))
    return cells


def draw_destination(rng: np.random.Generator, cells: list[tuple[float, float]],
                     exclude: tuple[float, float] | None = None) -> tuple[float, float]:
    for _ in range(64):
        cell = cells[int(rng.integers(0, len(cells)))]
        if exclude is None or cell != exclude:
            return cell
    return cells[int(rng.integers(0, len(cells)))]


def vrmm_step(state: MobilityState, rng: np.random.Generator, width: float,
              cells: list[tuple[float, float]]) -> MobilityState:
    """Advance one slot: move `speed` meters toward the destination, or draw a
    new destination when standing on it (the position does not move that slot).
    The update depends only on the input state and rng (Markov)."""
    if state.speed <= 0:
        raise InvalidConfigError(f"speed must be positive, got {state.speed}")
    pos = state.position
    direction = _direction_toward(pos, state.destination)
    if direction is None:
        new_dest = draw_destination(rng, cells, exclude=(pos.x, pos.y))
        new_dir = _direction_toward(pos, new_dest) or state.direction
        return replace(state, destination=new_dest, direction=new_dir)
    dx, dy = DIRECTION_STEPS[direction]
    # do not overshoot the current axis leg
    remaining = abs(state.destination[0] - pos.x) if dx else abs(state.destination[1] - pos.y)
    step = min(state.speed, remaining)
    nx = min(max(pos.x + dx * step, 0.0), width)
    ny = min(max(pos.y + dy * step, 0.0), width)
    return replace(state, position=Position3(nx, ny, pos.z), direction=direction)


def blocked_by_user(mec: Position3, blocker: Position3, user: Position3,
                    colinear_tol: float) -> bool:
    """True when `user` sits in the 2D shadow of `blocker` as seen from `mec`.

    The shadow is the part of the ray mec->blocker beyond the blocker and
    closer than (h_A - h_U) * l / (h_A - h_B), where l is the mec->blocker
    distance; lateral tolerance models the blocker body width.
    """
    h_a, h_b, h_u = mec.z, blocker.z, user.z
    if h_b >= h_a or h_u >= h_b:
        return False
    v = blocker.xy() - mec.xy()
    l = float(np.hypot(v[0], v[1]))
    if l <= _ARRIVE_EPS:
        return False
    w = user.xy() - mec.xy()
    along = float(np.dot(w, v)) / l
    if along <= l:
        return False  # not beyond the blocker
    perp = abs(v[0] * w[1] - v[1] * w[0]) / l
    if perp > colinear_tol:
        return False
    d_user = float(np.hypot(w[0], w[1]))
    threshold = (h_a - h_u) * l / (h_a - h_b)
    return d_user < threshold


def _segment_box_interval(p0: np.ndarray, p1: np.ndarray,
                          obstacle: Obstacle) -> tuple[float, float] | None:
    """Liang-Barsky clip of the segment p0->p1 against the obstacle footprint.
    Returns the parameter interval or None when empty."""
    d = p1 - p0
    t_lo, t_hi = 0.0, 1.0
    for axis, (lo, hi) in enumerate((obstacle.x_range, obstacle.y_range)):
        if abs(d[axis]) < 1e-15:
            if not (lo <= p0[axis] <= hi):
                return None
            continue
        ta = (lo - p0[axis]) / d[axis]
        tb = (hi - p0[axis]) / d[axis]
        if ta > tb:
            ta, tb = tb, ta
        t_lo = max(t_lo, ta)
        t_hi = min(t_hi, tb)
        if t_lo >= t_hi:
            return None
    return (t_lo, t_hi)


def blocked_by_obstacle(mec: Position3, user: Position3, obstacle: Obstacle,
                        room_height: float = math.inf) -> bool:
    """True when the 2D mec->user segment crosses the obstacle footprint and the
    obstacle is at least user-height. Grazing a corner (zero-length crossing)
    does not block. Partial-height obstacles additionally apply the shadow
    slope test at the first crossing point."""
    if obstacle.height < user.z:
        return False
    interval = _segment_box_interval(mec.xy(), user.xy(), obstacle)
    if interval is None or interval[1] - interval[0] <= 0.0:
        return False
    if obstacle.height >= room_height or obstacle.height >= mec.z:
        return True
    # treat the obstacle top edge at the entry point like a blocker of that height
    p0, p1 = mec.xy(), user.xy()
    entry = p0 + interval[0] * (p1 - p0)
    l = float(np.hypot(*(entry - p0)))
    if l <= _ARRIVE_EPS:
        return True  # transmitter column inside the footprint
    d_user = float(np.hypot(*(p1 - p0)))
    threshold = (mec.z - user.z) * l / (mec.z - obstacle.height)
    return d_user < threshold


def los_status(scene: SceneState, colinear_tol: float,
               room_height: float = math.inf) -> list[bool]:
    """Per-user True=LoS flags: a user is NLoS when any obstacle or any taller
    user blocks the direct link from the MEC."""
    flags = []
    for k, user in enumerate(scene.users):
        pos = user.position
        blocked = any(blocked_by_obstacle(scene.mec, pos, o, room_height)
                      for o in scene.obstacles)
        if not blocked:
            for i, other in enumerate(scene.users):
                if i == k:
                    continue
                if blocked_by_user(scene.mec, other.position, pos, colinear_tol):
                    blocked = True
                    break
        flags.append(not blocked)
    return flags
