"""Experiment configuration: building geometry, station mobility, scenario files.

The scenario file format is line-oriented ``key = value`` text (``#`` starts a
comment). See README for the full key reference. All functions here are pure;
random-walk trajectories are a deterministic function of (spec, time, seed).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .radio import RadioParams

STA_HEIGHT_M = 1.5
DEFAULT_AP_HEIGHT_M = 3.0
DEFAULT_AP_TX_MW = 100.0
DEFAULT_DEMAND_MBPS = 0.5
MIN_DURATION_S = 20


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ConfigError("position coordinates must be finite")
        if self.z < 0:
            raise ConfigError("position z must be >= 0")

    def distance_to(self, other: "Position") -> float:
        return math.sqrt((self.x - other.x) ** 2 + (self.y - other.y) ** 2
                         + (self.z - other.z) ** 2)


@dataclass(frozen=True)
class BuildingSpec:
    """Rectangular building with a regular rooms_x x rooms_y partition grid."""

    width_m: float = 300.0
    depth_m: float = 100.0
    floors: int = 1
    rooms_x: int = 30
    rooms_y: int = 10
    external_wall_loss_db: float = 7.0
    internal_wall_loss_db: float = 3.0

    def __post_init__(self):
        if not self.width_m > 0 or not self.depth_m > 0:
            raise ConfigError("building dimensions must be > 0")
        if self.floors < 1:
            raise ConfigError("floors must be >= 1")
        if self.rooms_x < 1 or self.rooms_y < 1:
            raise ConfigError("room counts must be >= 1")
        if self.external_wall_loss_db < 0 or self.internal_wall_loss_db < 0:
            raise ConfigError("wall losses must be >= 0")

    @property
    def footprint(self) -> "Rect":
        return Rect(0.0, 0.0, self.width_m, self.depth_m)


@dataclass(frozen=True)
class Rect:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if self.xmax <= self.xmin or self.ymax <= self.ymin:
            raise ConfigError("bounds rectangle must have positive extent")

    def contains(self, p: Position) -> bool:
        return self.xmin <= p.x <= self.xmax and self.ymin <= p.y <= self.ymax


@dataclass(frozen=True)
class WaypointPath:
    """Piecewise-linear trajectory through (position, arrival-time) points."""

    points: tuple[tuple[Position, float], ...]
    bounds: Rect

    def __post_init__(self):
        if not self.points:
            raise ConfigError("waypoint path needs at least one point")
        times = [t for _, t in self.points]
        if times[0] < 0 or any(b < a for a, b in zip(times, times[1:])):
            raise ConfigError("waypoint times must be >= 0 and non-decreasing")
        for p, _ in self.points:
            if not self.bounds.contains(p):
                raise ConfigError("waypoints must lie within bounds")


@dataclass(frozen=True)
class RandomWalk:
    """Uniform-heading walk: direction and speed resampled every turn interval,
    reflective bounds."""

    speed_min_mps: float
    speed_max_mps: float
    turn_interval_s: float
    bounds: Rect

    def __post_init__(self):
        if not 0 < self.speed_min_mps <= self.speed_max_mps:
            raise ConfigError("walk speeds must satisfy 0 < speed_min <= speed_max")
        if not self.turn_interval_s > 0:
            raise ConfigError("turn_interval_s must be > 0")


MobilitySpec = WaypointPath | RandomWalk


@dataclass(frozen=True)
class ApSpec:
    ap_id: str
    position: Position
    tx_power_mw: float = DEFAULT_AP_TX_MW

    def __post_init__(self):
        if not self.tx_power_mw > 0:
            raise ConfigError("ap tx_power_mw must be > 0")


@dataclass(frozen=True)
class StationSpec:
    sta_id: str
    mobility: MobilitySpec
    demand_mbps: float = DEFAULT_DEMAND_MBPS

    def __post_init__(self):
        if self.demand_mbps < 0:
            raise ConfigError("sta demand_mbps must be >= 0")


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete experiment description; validated on construction."""

    building: BuildingSpec
    aps: tuple[ApSpec, ...]
    stations: tuple[StationSpec, ...]
    radio: RadioParams = field(default_factory=RadioParams)
    t1_dbm: float = -75.0
    t2_dbm: float = -85.0
    beacon_interval_s: int = 1
    duration_s: int = 300
    seed: int = 0

    def __post_init__(self):
        if not self.aps:
            raise ConfigError("aps must be non-empty")
        if not self.stations:
            raise ConfigError("stations must be non-empty")
        if not self.t2_dbm < self.t1_dbm:
            raise ConfigError("t2 must be below t1")
        if self.beacon_interval_s != 1:
            raise ConfigError("beacon_interval_s must be 1")
        if self.duration_s < MIN_DURATION_S:
            raise ConfigError(f"duration_s must be >= {MIN_DURATION_S}")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        ap_ids = [a.ap_id for a in self.aps]
        sta_ids = [s.sta_id for s in self.stations]
        if len(set(ap_ids)) != len(ap_ids):
            raise ConfigError("ap ids must be unique")
        if len(set(sta_ids)) != len(sta_ids):
            raise ConfigError("sta ids must be unique")


# ---------------------------------------------------------------------------
# Mobility evaluation
# ---------------------------------------------------------------------------

def _fold(value: float, lo: float, hi: float) -> float:
    """Reflect a coordinate into [lo, hi] (triangle wave); exact for constant
    velocity within a segment, so reflective bounds cost O(1)."""
    span = hi - lo
    p = math.fmod(value - lo, 2.0 * span)
    if p < 0.0:
        p += 2.0 * span
    return lo + (p if p <= span else 2.0 * span - p)


def _walk_start(mob: RandomWalk, seed: int) -> tuple[float, float]:
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0)))
    x = rng.uniform(mob.bounds.xmin, mob.bounds.xmax)
    y = rng.uniform(mob.bounds.ymin, mob.bounds.ymax)
    return float(x), float(y)


def _walk_velocity(mob: RandomWalk, seed: int, segment: int) -> tuple[float, float]:
    rng = np.random.default_rng(np.random.SeedSequence((seed, segment + 1)))
    heading = rng.uniform(0.0, 2.0 * math.pi)
    speed = rng.uniform(mob.speed_min_mps, mob.speed_max_mps)
    return speed * math.cos(heading), speed * math.sin(heading)


class WalkState:
    """Incremental random-walk evaluator; bit-identical to position_at."""

    def __init__(self, mob: RandomWalk, seed: int):
        self.mob = mob
        self.seed = seed
        self.segment = 0
        self.seg_x, self.seg_y = _walk_start(mob, seed)
        self.vx, self.vy = _walk_velocity(mob, seed, 0)

    def _advance_to_segment(self, segment: int) -> None:
        b = self.mob.bounds
        t = self.mob.turn_interval_s
        while self.segment < segment:
            self.seg_x = _fold(self.seg_x + self.vx * t, b.xmin, b.xmax)
            self.seg_y = _fold(self.seg_y + self.vy * t, b.ymin, b.ymax)
            self.segment += 1
            self.vx, self.vy = _walk_velocity(self.mob, self.seed, self.segment)

    def at(self, t: float) -> Position:
        segment = int(t // self.mob.turn_interval_s)
        if segment < self.segment:
            raise ConfigError("walk state can only advance forward in time")
        self._advance_to_segment(segment)
        rem = t - segment * self.mob.turn_interval_s
        b = self.mob.bounds
        x = _fold(self.seg_x + self.vx * rem, b.xmin, b.xmax)
        y = _fold(self.seg_y + self.vy * rem, b.ymin, b.ymax)
        return Position(x, y, STA_HEIGHT_M)


def position_at(mob: MobilitySpec, t: float, seed: int) -> Position:
    """Deterministic position along a mobility trace at time t >= 0."""
    if t < 0:
        raise ConfigError("t must be >= 0")
    if isinstance(mob, WaypointPath):
        pts = mob.points
        if t <= pts[0][1]:
            return pts[0][0]
        for (p0, t0), (p1, t1) in zip(pts, pts[1:]):
            if t <= t1:
                if t1 == t0:
                    return p1
                frac = (t - t0) / (t1 - t0)
                return Position(p0.x + frac * (p1.x - p0.x),
                                p0.y + frac * (p1.y - p0.y),
                                p0.z + frac * (p1.z - p0.z))
        return pts[-1][0]
    return WalkState(mob, seed).at(t)


# ---------------------------------------------------------------------------
# Wall counting
# ---------------------------------------------------------------------------

def _crosses_line(a0: float, a1: float, b0: float, b1: float, line: float,
                  span_lo: float, span_hi: float) -> bool:
    """True iff segment (a0,a1)-(b0,b1) meets coordinate line ``line`` (first
    axis) within [span_lo, span_hi] on the second axis. Touching counts."""
    fa = a0 - line
    fb = b0 - line
    if fa == 0.0 and fb == 0.0:
        lo, hi = min(a1, b1), max(a1, b1)
        return hi >= span_lo and lo <= span_hi
    if fa * fb > 0.0:
        return False
    if fa == 0.0:
        hit = a1
    elif fb == 0.0:
        hit = b1
    else:
        t = fa / (fa - fb)
        hit = a1 + t * (b1 - a1)
    return span_lo <= hit <= span_hi


def wall_count(a: Position, b: Position, spec: BuildingSpec) -> tuple[int, int]:
    """Count (external, internal) wall crossings of segment a-b against the
    regular room grid, projected onto the floor plane. Symmetric in (a, b)."""
    if (b.x, b.y) < (a.x, a.y):
        a, b = b, a
    external = 0
    internal = 0
    for i in range(spec.rooms_x + 1):
        xi = spec.width_m * i / spec.rooms_x
        if _crosses_line(a.x, a.y, b.x, b.y, xi, 0.0, spec.depth_m):
            if i == 0 or i == spec.rooms_x:
                external += 1
            else:
                internal += 1
    for j in range(spec.rooms_y + 1):
        yj = spec.depth_m * j / spec.rooms_y
        if _crosses_line(a.y, a.x, b.y, b.x, yj, 0.0, spec.width_m):
            if j == 0 or j == spec.rooms_y:
                external += 1
            else:
                internal += 1
    return external, internal


def wall_count_many(xs: np.ndarray, ys: np.ndarray, bx: float, by: float,
                    spec: BuildingSpec) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized wall_count from many points (xs, ys) to one point (bx, by)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    external = np.zeros(xs.shape, dtype=np.int64)
    internal = np.zeros(xs.shape, dtype=np.int64)

    def accumulate(a0, a1, b0, b1, lines, span_hi, n_lines):
        for idx in range(n_lines + 1):
            line = lines * idx / n_lines
            fa = a0 - line
            fb = b0 - line
            both_zero = (fa == 0.0) & (fb == 0.0)
            straddle = (fa * fb <= 0.0) & ~both_zero
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(fa == fb, 0.0, fa / (fa - fb))
            hit = np.where(fa == 0.0, a1, np.where(fb == 0.0, b1, a1 + t * (b1 - a1)))
            ok = straddle & (hit >= 0.0) & (hit <= span_hi)
            lo = np.minimum(a1, b1)
            hi = np.maximum(a1, b1)
            ok |= both_zero & (hi >= 0.0) & (lo <= span_hi)
            if idx == 0 or idx == n_lines:
                external[ok] += 1
            else:
                internal[ok] += 1

    accumulate(xs, ys, bx, by, spec.width_m, spec.depth_m, spec.rooms_x)
    accumulate(ys, xs, by, bx, spec.depth_m, spec.width_m, spec.rooms_y)
    return external, internal


# ---------------------------------------------------------------------------
# Scenario file parsing
# ---------------------------------------------------------------------------

_AP_KEY = re.compile(r"^ap\.(\d+)\.(x|y|z|tx_power_mw)$")
_STA_KEY = re.compile(r"^sta\.(\d+)\.(.+)$")

_STA_FIELDS = {"demand_mbps", "waypoints", "mobility.kind", "mobility.speed_min",
               "mobility.speed_max", "mobility.turn_interval_s"}


def _parse_entries(text: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value
    return entries


def _take(entries: dict[str, str], key: str, conv, default):
    if key not in entries:
        return default
    raw = entries.pop(key)
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r}") from exc


def _parse_waypoints(raw: str, bounds: Rect) -> WaypointPath:
    points = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "@" not in chunk:
            raise ConfigError(f"waypoint {chunk!r}: expected 'x,y,z@t'")
        coords, at = chunk.split("@", 1)
        parts = [p.strip() for p in coords.split(",")]
        if len(parts) != 3:
            raise ConfigError(f"waypoint {chunk!r}: expected three coordinates")
        try:
            x, y, z = (float(p) for p in parts)
            t = float(at)
        except ValueError as exc:
            raise ConfigError(f"waypoint {chunk!r}: bad number") from exc
        points.append((Position(x, y, z), t))
    return WaypointPath(points=tuple(points), bounds=bounds)


def load_scenario(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document; absent keys take defaults."""
    entries = _parse_entries(text)

    building = BuildingSpec(
        width_m=_take(entries, "building.width_m", float, 300.0),
        depth_m=_take(entries, "building.depth_m", float, 100.0),
        floors=_take(entries, "building.floors", int, 1),
        rooms_x=_take(entries, "building.rooms_x", int, 30),
        rooms_y=_take(entries, "building.rooms_y", int, 10),
        external_wall_loss_db=_take(entries, "building.ewl_db", float, 7.0),
        internal_wall_loss_db=_take(entries, "building.iwl_db", float, 3.0),
    )
    bounds = building.footprint

    radio = RadioParams(
        tx_power_mw=DEFAULT_AP_TX_MW,
        path_loss_exponent=_take(entries, "radio.beta", float, 3.0),
        shadowing_sigma_db=_take(entries, "radio.sigma_db", float, 4.0),
        noise_floor_dbm=_take(entries, "radio.noise_dbm", float, -90.0),
    )

    ap_fields: dict[int, dict[str, float]] = {}
    sta_fields: dict[int, dict[str, str]] = {}
    for key in list(entries):
        m = _AP_KEY.match(key)
        if m:
            ap_fields.setdefault(int(m.group(1)), {})[m.group(2)] = \
                _take(entries, key, float, None)
            continue
        m = _STA_KEY.match(key)
        if m and m.group(2) in _STA_FIELDS:
            sta_fields.setdefault(int(m.group(1)), {})[m.group(2)] = entries.pop(key)

    aps = []
    for idx in sorted(ap_fields):
        f = ap_fields[idx]
        if "x" not in f or "y" not in f:
            raise ConfigError(f"ap.{idx} needs at least x and y")
        aps.append(ApSpec(
            ap_id=f"ap{idx}",
            position=Position(f["x"], f["y"], f.get("z", DEFAULT_AP_HEIGHT_M)),
            tx_power_mw=f.get("tx_power_mw", DEFAULT_AP_TX_MW),
        ))

    sta_count = _take(entries, "sta.count", int, 0)
    shared_demand = _take(entries, "sta.demand_mbps", float, DEFAULT_DEMAND_MBPS)
    shared_kind = _take(entries, "sta.mobility.kind", str, "random_walk")
    shared_walk = dict(
        speed_min=_take(entries, "sta.mobility.speed_min", float, 0.5),
        speed_max=_take(entries, "sta.mobility.speed_max", float, 2.0),
        turn_interval_s=_take(entries, "sta.mobility.turn_interval_s", float, 10.0),
    )
    if shared_kind not in ("random_walk",):
        raise ConfigError(f"sta.mobility.kind {shared_kind!r} unknown "
                          "(per-station waypoints use sta.N.waypoints)")

    n_stas = max([sta_count] + [i + 1 for i in sta_fields])
    stations = []
    for idx in range(n_stas):
        f = sta_fields.get(idx, {})
        demand = float(f["demand_mbps"]) if "demand_mbps" in f else shared_demand
        if "waypoints" in f or f.get("mobility.kind") == "waypoints":
            if "waypoints" not in f:
                raise ConfigError(f"sta.{idx}: waypoints kind needs sta.{idx}.waypoints")
            mobility: MobilitySpec = _parse_waypoints(f["waypoints"], bounds)
        else:
            kind = f.get("mobility.kind", shared_kind)
            if kind != "random_walk":
                raise ConfigError(f"sta.{idx}.mobility.kind {kind!r} unknown")
            mobility = RandomWalk(
                speed_min_mps=float(f.get("mobility.speed_min", shared_walk["speed_min"])),
                speed_max_mps=float(f.get("mobility.speed_max", shared_walk["speed_max"])),
                turn_interval_s=float(f.get("mobility.turn_interval_s",
                                            shared_walk["turn_interval_s"])),
                bounds=bounds,
            )
        stations.append(StationSpec(sta_id=f"sta{idx}", mobility=mobility,
                                    demand_mbps=demand))

    cfg = ScenarioConfig(
        building=building,
        aps=tuple(aps),
        stations=tuple(stations),
        radio=radio,
        t1_dbm=_take(entries, "thresholds.t1_dbm", float, -75.0),
        t2_dbm=_take(entries, "thresholds.t2_dbm", float, -85.0),
        duration_s=_take(entries, "sim.duration_s", int, 300),
        seed=_take(entries, "sim.seed", int, 0),
    )
    if entries:
        raise ConfigError(f"unknown keys: {', '.join(sorted(entries))}")
    return cfg


def save_scenario(cfg: ScenarioConfig) -> str:
    """Render a config back to the file format; load_scenario round-trips it."""
    b = cfg.building
    lines = [
        f"building.width_m = {b.width_m!r}",
        f"building.depth_m = {b.depth_m!r}",
        f"building.floors = {b.floors}",
        f"building.rooms_x = {b.rooms_x}",
        f"building.rooms_y = {b.rooms_y}",
        f"building.ewl_db = {b.external_wall_loss_db!r}",
        f"building.iwl_db = {b.internal_wall_loss_db!r}",
        f"radio.beta = {cfg.radio.path_loss_exponent!r}",
        f"radio.sigma_db = {cfg.radio.shadowing_sigma_db!r}",
        f"radio.noise_dbm = {cfg.radio.noise_floor_dbm!r}",
        f"thresholds.t1_dbm = {cfg.t1_dbm!r}",
        f"thresholds.t2_dbm = {cfg.t2_dbm!r}",
        f"sim.duration_s = {cfg.duration_s}",
        f"sim.seed = {cfg.seed}",
    ]
    for idx, ap in enumerate(cfg.aps):
        if ap.ap_id != f"ap{idx}":
            raise ConfigError("only canonical ap ids (ap0..apN) can be saved")
        lines.append(f"ap.{idx}.x = {ap.position.x!r}")
        lines.append(f"ap.{idx}.y = {ap.position.y!r}")
        lines.append(f"ap.{idx}.z = {ap.position.z!r}")
        lines.append(f"ap.{idx}.tx_power_mw = {ap.tx_power_mw!r}")
    lines.append(f"sta.count = {len(cfg.stations)}")
    for idx, sta in enumerate(cfg.stations):
        if sta.sta_id != f"sta{idx}":
            raise ConfigError("only canonical sta ids (sta0..staN) can be saved")
        lines.append(f"sta.{idx}.demand_mbps = {sta.demand_mbps!r}")
        mob = sta.mobility
        if isinstance(mob, RandomWalk):
            lines.append(f"sta.{idx}.mobility.kind = random_walk")
            lines.append(f"sta.{idx}.mobility.speed_min = {mob.speed_min_mps!r}")
            lines.append(f"sta.{idx}.mobility.speed_max = {mob.speed_max_mps!r}")
            lines.append(f"sta.{idx}.mobility.turn_interval_s = {mob.turn_interval_s!r}")
        else:
            wps = ";".join(f"{p.x!r},{p.y!r},{p.z!r}@{t!r}" for p, t in mob.points)
            lines.append(f"sta.{idx}.waypoints = {wps}")
    return "\n".join(lines) + "\n"


def default_scenario_text() -> str:
    """The built-in 3-AP / 50-station commercial-building scenario."""
    return """\
# Default OBSS scenario: 300x100 m commercial building, 3 APs, 50 stations.
building.width_m = 300
building.depth_m = 100
building.floors = 1
building.rooms_x = 30
building.rooms_y = 10
building.ewl_db = 7
building.iwl_db = 3

ap.0.x = 50
ap.0.y = 50
ap.0.z = 3
ap.0.tx_power_mw = 40
ap.1.x = 150
ap.1.y = 50
ap.1.z = 3
ap.1.tx_power_mw = 40
ap.2.x = 250
ap.2.y = 50
ap.2.z = 3
ap.2.tx_power_mw = 40

sta.count = 50
sta.demand_mbps = 0.5
sta.mobility.kind = random_walk
sta.mobility.speed_min = 0.5
sta.mobility.speed_max = 2.0
sta.mobility.turn_interval_s = 10

radio.beta = 3.0
radio.sigma_db = 4.0
radio.noise_dbm = -90

thresholds.t1_dbm = -75
thresholds.t2_dbm = -85

sim.duration_s = 300
sim.seed = 42
"""


def default_scenario() -> ScenarioConfig:
    return load_scenario(default_scenario_text())
