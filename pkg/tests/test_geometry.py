import numpy as np
import pytest

from thzvr.geometry import (Direction, InvalidConfigError, MobilityState,
                            Obstacle, Position3, SceneState, blocked_by_obstacle,
                            blocked_by_user, destination_cells, los_status,
                            vrmm_step)


def make_state(x, y, z=1.5, dest=(10.0, 5.0), direction=Direction.RIGHT, speed=1.0):
    return MobilityState(Position3(x, y, z), dest, direction, speed)


CELLS = destination_cells(20.0, 1.0, ())


class TestVrmmStep:
    def test_axis_step(self):
        state = make_state(5.0, 5.0, dest=(10.0, 5.0))
        out = vrmm_step(state, np.random.default_rng(0), 20.0, CELLS)
        assert (out.position.x, out.position.y, out.position.z) == (6.0, 5.0, 1.5)
        assert out.direction == Direction.RIGHT

    def test_arrival_redraws_destination_without_moving(self):
        state = make_state(10.0, 5.0, dest=(10.0, 5.0))
        out = vrmm_step(state, np.random.default_rng(1), 20.0, CELLS)
        assert (out.position.x, out.position.y) == (10.0, 5.0)
        assert out.destination != (10.0, 5.0)

    def test_invalid_speed(self):
        state = make_state(5.0, 5.0, speed=0.0)
        with pytest.raises(InvalidConfigError):
            vrmm_step(state, np.random.default_rng(0), 20.0, CELLS)

    def test_stays_in_room_over_long_walk(self):
        rng = np.random.default_rng(42)
        state = make_state(5.0, 5.0, speed=0.7)
        for _ in range(10_000):
            state = vrmm_step(state, rng, 20.0, CELLS)
            assert 0.0 <= state.position.x <= 20.0
            assert 0.0 <= state.position.y <= 20.0
            assert state.direction in Direction

    def test_no_overshoot_on_axis_leg(self):
        state = make_state(9.5, 5.0, dest=(10.0, 12.0), speed=2.0)
        out = vrmm_step(state, np.random.default_rng(0), 20.0, CELLS)
        assert out.position.x == pytest.approx(10.0)

    def test_markov_same_inputs_same_outputs(self):
        state = make_state(3.0, 4.0, dest=(3.0, 4.0))
        a = vrmm_step(state, np.random.default_rng(9), 20.0, CELLS)
        b = vrmm_step(state, np.random.default_rng(9), 20.0, CELLS)
        assert a == b


class TestBlockedByUser:
    MEC = Position3(0.0, 0.0, 3.0)

    def test_within_shadow_threshold(self):
        # threshold = (3.0 - 1.2) * 5 / (3.0 - 1.8) = 7.5
        blocker = Position3(5.0, 0.0, 1.8)
        user = Position3(6.0, 0.0, 1.2)
        assert blocked_by_user(self.MEC, blocker, user, 0.3)

    def test_beyond_shadow_threshold(self):
        blocker = Position3(5.0, 0.0, 1.8)
        user = Position3(8.0, 0.0, 1.2)
        assert not blocked_by_user(self.MEC, blocker, user, 0.3)

    def test_equal_heights_never_blocked(self):
        # threshold collapses to l, and the user is beyond the blocker
        blocker = Position3(5.0, 0.0, 1.8)
        user = Position3(6.0, 0.0, 1.8)
        assert not blocked_by_user(self.MEC, blocker, user, 0.3)

    def test_blocker_taller_than_mec(self):
        blocker = Position3(5.0, 0.0, 3.5)
        user = Position3(6.0, 0.0, 1.2)
        assert not blocked_by_user(self.MEC, blocker, user, 0.3)

    def test_user_in_front_of_blocker(self):
        blocker = Position3(5.0, 0.0, 1.8)
        user = Position3(4.0, 0.0, 1.2)
        assert not blocked_by_user(self.MEC, blocker, user, 0.3)

    def test_off_axis_outside_tolerance(self):
        blocker = Position3(5.0, 0.0, 1.8)
        user = Position3(6.0, 0.5, 1.2)
        assert not blocked_by_user(self.MEC, blocker, user, 0.3)

    def test_degenerate_zero_distance(self):
        blocker = Position3(0.0, 0.0, 1.8)
        user = Position3(1.0, 0.0, 1.2)
        assert not blocked_by_user(self.MEC, blocker, user, 0.3)

    def test_monotone_along_ray(self):
        # blocked at 6 m implies blocked at every colinear point in (l, 6)
        blocker = Position3(5.0, 0.0, 1.8)
        assert blocked_by_user(self.MEC, blocker, Position3(6.0, 0.0, 1.2), 0.3)
        for d in np.linspace(5.01, 5.99, 20):
            assert blocked_by_user(self.MEC, blocker, Position3(d, 0.0, 1.2), 0.3)


class TestBlockedByObstacle:
    MEC = Position3(0.0, 0.0, 3.0)
    OBS = Obstacle((4.0, 8.0), (8.0, 12.0), 3.0)

    def test_corner_graze_does_not_block(self):
        # the diagonal touches (8, 8) exactly; a zero-length crossing is clear
        assert not blocked_by_obstacle(self.MEC, Position3(10.0, 10.0, 1.5),
                                       self.OBS, 3.0)

    def test_crossing_segment_blocks(self):
        assert blocked_by_obstacle(self.MEC, Position3(12.0, 20.0, 1.5),
                                   self.OBS, 3.0)

    def test_user_inside_footprint(self):
        assert blocked_by_obstacle(self.MEC, Position3(6.0, 10.0, 1.5),
                                   self.OBS, 3.0)

    def test_obstacle_shorter_than_user(self):
        low = Obstacle((4.0, 8.0), (8.0, 12.0), 1.0)
        assert not blocked_by_obstacle(self.MEC, Position3(12.0, 20.0, 1.5),
                                       low, 3.0)

    def test_partial_height_uses_shadow_slope(self):
        # 2 m obstacle entered at l = sqrt(2): shadow reach for a 0.5 m user is
        # (3 - 0.5) * sqrt(2) / (3 - 2) = 3.54 m
        near_mec = Obstacle((1.0, 2.0), (1.0, 2.0), 2.0)
        inside_shadow = Position3(2.3, 2.3, 0.5)   # 3.25 m from the MEC
        beyond_shadow = Position3(2.7, 2.7, 0.5)   # 3.82 m from the MEC
        assert blocked_by_obstacle(self.MEC, inside_shadow, near_mec, 3.0)
        assert not blocked_by_obstacle(self.MEC, beyond_shadow, near_mec, 3.0)
        # taller users outrun the 2 m shadow entirely on this diagonal
        tall_user = Position3(2.3, 2.3, 2.5)
        assert not blocked_by_obstacle(self.MEC, tall_user, near_mec, 3.0)


def _sample_shadow_oracle(mec, blocker, user, tol, n=2000):
    """Dense sampling of the shadow segment behind the blocker."""
    if blocker.z >= mec.z or user.z >= blocker.z:
        return False
    v = blocker.xy() - mec.xy()
    l = float(np.hypot(*v))
    if l < 1e-12:
        return False
    length = (mec.z - user.z) * l / (mec.z - blocker.z)
    ts = np.linspace(l, length, n)
    direction = v / l
    points = mec.xy()[None, :] + ts[:, None] * direction[None, :]
    dists = np.hypot(*(points - user.xy()[None, :]).T)
    along = float(np.dot(user.xy() - mec.xy(), direction))
    d_user = float(np.hypot(*(user.xy() - mec.xy())))
    return bool(dists.min() <= tol and along > l and d_user < length)


def _sample_obstacle_oracle(mec, user, obstacles, n=2000):
    ts = np.linspace(0.0, 1.0, n)
    points = mec.xy()[None, :] + ts[:, None] * (user.xy() - mec.xy())[None, :]
    for obs in obstacles:
        inside = ((obs.x_range[0] <= points[:, 0]) & (points[:, 0] <= obs.x_range[1])
                  & (obs.y_range[0] <= points[:, 1]) & (points[:, 1] <= obs.y_range[1]))
        if inside.any() and obs.height >= user.z:
            return True
    return False


class TestLosStatus:
    def _random_scene(self, rng, k=5):
        obstacles = (Obstacle((4.0, 8.0), (8.0, 12.0), 3.0),
                     Obstacle((12.0, 16.0), (8.0, 12.0), 3.0))
        users = []
        while len(users) < k:
            x, y = rng.uniform(0, 20, size=2)
            if any(o.contains_xy(x, y) for o in obstacles):
                continue
            h = rng.uniform(1.2, 1.8)
            users.append(MobilityState(Position3(x, y, h), (0.0, 0.0),
                                       Direction.UP, 1.0))
        return SceneState(Position3(0, 0, 3.0), Position3(10, 20, 3.0),
                          tuple(users), obstacles)

    def test_single_user_empty_room(self):
        scene = SceneState(Position3(0, 0, 3.0), Position3(10, 20, 3.0),
                           (MobilityState(Position3(5, 5, 1.5), (0, 0),
                                          Direction.UP, 1.0),), ())
        assert los_status(scene, 0.3, 3.0) == [True]

    def test_user_behind_obstacle_is_nlos(self):
        obstacles = (Obstacle((4.0, 8.0), (8.0, 12.0), 3.0),)
        scene = SceneState(Position3(0, 0, 3.0), Position3(10, 20, 3.0),
                           (MobilityState(Position3(12, 20, 1.5), (0, 0),
                                          Direction.UP, 1.0),), obstacles)
        assert los_status(scene, 0.3, 3.0) == [False]

    def test_matches_sampling_oracle_on_100_scenes(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            scene = self._random_scene(rng)
            flags = los_status(scene, 0.3, 3.0)
            for k, user in enumerate(scene.users):
                blocked = _sample_obstacle_oracle(scene.mec, user.position,
                                                  scene.obstacles)
                if not blocked:
                    for i, other in enumerate(scene.users):
                        if i != k and _sample_shadow_oracle(
                                scene.mec, other.position, user.position, 0.3):
                            blocked = True
                            break
                assert flags[k] == (not blocked)
