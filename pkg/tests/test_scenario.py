import math

import numpy as np
import pytest

from cogwifi.errors import ConfigError
from cogwifi.scenario import (
    BuildingSpec,
    Position,
    RandomWalk,
    Rect,
    WaypointPath,
    default_scenario,
    load_scenario,
    position_at,
    save_scenario,
    wall_count,
    wall_count_many,
)

MINIMAL = """
building.width_m = 300
building.depth_m = 100
building.floors = 1
building.rooms_x = 30
building.rooms_y = 10
building.ewl_db = 7
ap.0.x = 50
ap.0.y = 50
sta.count = 2
sim.duration_s = 30
"""


class TestLoadScenario:
    def test_minimal_document_echoes_values(self):
        cfg = load_scenario(MINIMAL)
        assert cfg.building.width_m == 300
        assert cfg.building.depth_m == 100
        assert cfg.building.floors == 1
        assert cfg.building.rooms_x == 30
        assert cfg.building.rooms_y == 10
        assert cfg.building.external_wall_loss_db == 7
        assert len(cfg.stations) == 2

    def test_building_defaults(self):
        cfg = load_scenario("ap.0.x = 10\nap.0.y = 10\nsta.count = 1\n")
        b = cfg.building
        assert (b.width_m, b.depth_m, b.floors) == (300.0, 100.0, 1)
        assert (b.rooms_x, b.rooms_y) == (30, 10)
        assert b.external_wall_loss_db == 7.0

    def test_threshold_order_enforced(self):
        text = MINIMAL + "thresholds.t1_dbm = -85\nthresholds.t2_dbm = -75\n"
        with pytest.raises(ConfigError, match="t2 must be below t1"):
            load_scenario(text)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown"):
            load_scenario(MINIMAL + "building.paint_color = red\n")

    def test_malformed_line_rejected(self):
        with pytest.raises(ConfigError, match="line"):
            load_scenario("building.width_m\n")

    def test_duration_minimum(self):
        with pytest.raises(ConfigError, match="duration"):
            load_scenario(MINIMAL.replace("sim.duration_s = 30",
                                          "sim.duration_s = 10"))

    def test_needs_ap_and_sta(self):
        with pytest.raises(ConfigError, match="aps"):
            load_scenario("sta.count = 1\n")
        with pytest.raises(ConfigError, match="stations"):
            load_scenario("ap.0.x = 1\nap.0.y = 1\n")

    def test_comments_and_blank_lines(self):
        cfg = load_scenario("# hello\n\n" + MINIMAL)
        assert cfg.building.width_m == 300

    def test_per_station_waypoints(self):
        text = MINIMAL + "sta.0.waypoints = 10,20,1.5@0; 50,20,1.5@10\n"
        cfg = load_scenario(text)
        assert isinstance(cfg.stations[0].mobility, WaypointPath)
        assert isinstance(cfg.stations[1].mobility, RandomWalk)

    def test_round_trip(self):
        from cogwifi.scenario import default_scenario_text
        for text in (MINIMAL,
                     MINIMAL + "sta.0.waypoints = 10,20,1.5@0; 50,20,1.5@10\n",
                     default_scenario_text()):
            cfg = load_scenario(text)
            assert load_scenario(save_scenario(cfg)) == cfg

    def test_default_scenario_shape(self):
        cfg = default_scenario()
        assert len(cfg.aps) == 3
        assert len(cfg.stations) == 50
        assert cfg.duration_s == 300


class TestPositionAt:
    BOUNDS = Rect(0.0, 0.0, 100.0, 100.0)

    def waypath(self):
        return WaypointPath(points=(
            (Position(10.0, 20.0, 1.5), 0.0),
            (Position(50.0, 20.0, 1.5), 10.0),
        ), bounds=self.BOUNDS)

    def test_initial_waypoint(self):
        assert position_at(self.waypath(), 0.0, seed=1) == Position(10.0, 20.0, 1.5)

    def test_linear_interpolation_midpoint(self):
        p = position_at(self.waypath(), 5.0, seed=1)
        assert p == Position(30.0, 20.0, 1.5)

    def test_after_last_waypoint_clamps(self):
        assert position_at(self.waypath(), 99.0, seed=1) == Position(50.0, 20.0, 1.5)

    def walk(self):
        return RandomWalk(speed_min_mps=0.5, speed_max_mps=2.0,
                          turn_interval_s=10.0, bounds=self.BOUNDS)

    def test_walk_deterministic(self):
        a = position_at(self.walk(), 7.0, seed=99)
        b = position_at(self.walk(), 7.0, seed=99)
        assert a == b

    def test_walk_seed_changes_path(self):
        a = position_at(self.walk(), 7.0, seed=1)
        b = position_at(self.walk(), 7.0, seed=2)
        assert a != b

    def test_walk_within_bounds(self):
        mob = self.walk()
        for t in np.linspace(0.0, 500.0, 251):
            p = position_at(mob, float(t), seed=5)
            assert self.BOUNDS.contains(p)

    def test_walk_continuous_and_speed_limited(self):
        mob = self.walk()
        prev = position_at(mob, 0.0, seed=3)
        for t in np.arange(0.25, 60.0, 0.25):
            cur = position_at(mob, float(t), seed=3)
            step = math.hypot(cur.x - prev.x, cur.y - prev.y)
            assert step <= mob.speed_max_mps * 0.25 + 1e-9
            prev = cur

    def test_negative_time_rejected(self):
        with pytest.raises(ConfigError):
            position_at(self.walk(), -1.0, seed=0)


def oracle_wall_count(a: Position, b: Position, spec: BuildingSpec):
    """Brute-force segment/grid intersection by dense sign sampling."""
    n = 20001
    ts = np.linspace(0.0, 1.0, n)
    xs = a.x + ts * (b.x - a.x)
    ys = a.y + ts * (b.y - a.y)
    ext = inside = 0
    for i in range(spec.rooms_x + 1):
        xi = spec.width_m * i / spec.rooms_x
        sgn = np.sign(xs - xi)
        crossings = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
        hit = False
        for c in crossings:
            t = (xi - xs[c]) / (xs[c + 1] - xs[c])
            y_at = ys[c] + t * (ys[c + 1] - ys[c])
            if 0.0 <= y_at <= spec.depth_m:
                hit = True
        if hit:
            if i in (0, spec.rooms_x):
                ext += 1
            else:
                inside += 1
    for j in range(spec.rooms_y + 1):
        yj = spec.depth_m * j / spec.rooms_y
        sgn = np.sign(ys - yj)
        crossings = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
        hit = False
        for c in crossings:
            t = (yj - ys[c]) / (ys[c + 1] - ys[c])
            x_at = xs[c] + t * (xs[c + 1] - xs[c])
            if 0.0 <= x_at <= spec.width_m:
                hit = True
        if hit:
            if j in (0, spec.rooms_y):
                ext += 1
            else:
                inside += 1
    return ext, inside


class TestWallCount:
    SPEC = BuildingSpec(width_m=300.0, depth_m=100.0, rooms_x=30, rooms_y=10)

    def test_same_room(self):
        a = Position(1.0, 1.0)
        b = Position(9.0, 9.0)
        assert wall_count(a, b, self.SPEC) == (0, 0)

    def test_inside_to_outside_one_boundary(self):
        a = Position(5.0, 5.0)
        b = Position(-5.0, 5.0)
        assert wall_count(a, b, self.SPEC) == (1, 0)

    def test_adjacent_rooms_one_internal(self):
        a = Position(5.0, 5.0)
        b = Position(15.0, 5.0)
        assert wall_count(a, b, self.SPEC) == (0, 1)

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(2024)
        for _ in range(150):
            a = Position(float(rng.uniform(-30, 330)), float(rng.uniform(-30, 130)))
            b = Position(float(rng.uniform(-30, 330)), float(rng.uniform(-30, 130)))
            assert wall_count(a, b, self.SPEC) == oracle_wall_count(a, b, self.SPEC), \
                (a, b)

    def test_symmetry(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            a = Position(float(rng.uniform(-20, 320)), float(rng.uniform(-20, 120)))
            b = Position(float(rng.uniform(-20, 320)), float(rng.uniform(-20, 120)))
            assert wall_count(a, b, self.SPEC) == wall_count(b, a, self.SPEC)

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(3)
        xs = rng.uniform(-10, 310, size=60)
        ys = rng.uniform(-10, 110, size=60)
        bx, by = 150.0, 50.0
        ext, inn = wall_count_many(xs, ys, bx, by, self.SPEC)
        for k in range(60):
            a = Position(float(xs[k]), float(ys[k]))
            assert (ext[k], inn[k]) == wall_count(a, Position(bx, by), self.SPEC)
