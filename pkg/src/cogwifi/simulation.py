"""Deterministic fixed-step (1 s) OBSS simulation loop.

Each tick: move stations, sample beacon RSS for every station-AP pair,
update the per-station RSS registers, draw traffic, run the controller
(associations, trigger machine, handover decisions), then allocate
throughput and drain the per-AP MAC queues. Mobility, shadowing, and
traffic draw from dedicated substreams in a fixed order, so logs from two
policies on the same seed share identical environments.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from . import controller as ctrl
from .errors import SimulationError
from .features import WINDOW_LEN, stats5, window_features
from .radio import DEFAULT_RATE_TABLE, RateTable, phy_rate_many, rss_dbm
from .scenario import ScenarioConfig, WalkState, WaypointPath, position_at, \
    save_scenario, wall_count_many

MAC_EFFICIENCY = 0.6
PACKET_BYTES = 1200
_PACKET_BITS = PACKET_BYTES * 8
MAC_QUEUE_CAP = 200      # packets per AP; arrivals beyond it are tail-dropped

# Shadowing draws are a two-timescale process with standard-normal
# marginals: a slowly-mixing AR(1) component (persistent obstruction
# patterns around a walking station) plus a fast per-beacon component
# (measurement and scatter flutter). SHADOWING_FAST_STD is the fast share
# of the unit standard deviation.
SHADOWING_RHO = 0.995
SHADOWING_FAST_STD = 0.45

# substream tags under the scenario seed
_STREAM_MOBILITY = 1
_STREAM_SHADOWING = 2
_STREAM_TRAFFIC = 3


def _substream_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(parts).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# Order-book types
# ---------------------------------------------------------------------------

class RssRegister:
    """Per-station map ap_id -> ring buffer of the last 10 contiguous
    per-second RSS samples. A missed beacon breaks contiguity: stale
    samples age out and a re-heard AP restarts its series."""

    def __init__(self, ap_ids):
        self._buf: dict[str, deque] = {ap: deque(maxlen=WINDOW_LEN)
                                       for ap in ap_ids}

    def record(self, ap_id: str, t: int, rss: float | None) -> None:
        buf = self._buf[ap_id]
        if rss is None:
            return
        if buf and t - buf[-1][0] != 1:
            buf.clear()
        buf.append((t, rss))

    def expire(self, t: int) -> None:
        for buf in self._buf.values():
            while buf and t - buf[0][0] >= WINDOW_LEN:
                buf.popleft()

    def latest(self, ap_id: str) -> float | None:
        buf = self._buf[ap_id]
        return buf[-1][1] if buf else None

    def series(self, ap_id: str) -> np.ndarray:
        return np.array([v for _, v in self._buf[ap_id]])

    def ages(self, t: int) -> list[int]:
        return [t - ts for buf in self._buf.values() for ts, _ in buf]


@dataclass(frozen=True)
class Association:
    sta_id: str
    ap_id: str
    since_s: int


@dataclass(frozen=True)
class HandoverEvent:
    t_s: int
    sta_id: str
    from_ap: str
    to_ap: str | None           # None records a forced disassociation
    cause: str                  # predicted | baseline | forced_t2

    def __post_init__(self):
        if self.cause not in ("predicted", "baseline", "forced_t2"):
            raise SimulationError(f"unknown handover cause {self.cause!r}")


@dataclass(frozen=True)
class OnlineRow:
    """Feature vector the controller appended while running, plus its
    decision; the ground-truth label is attached offline."""
    t_s: int
    sta_idx: int
    ap_idx: int
    features: np.ndarray
    decision: int
    cause: str                  # prediction | forced_t2


@dataclass(frozen=True)
class PacketLog:
    timestamp_s: np.ndarray
    arrival_time_s: np.ndarray
    size_bytes: np.ndarray
    snr_db: np.ndarray
    ap_idx: np.ndarray
    sta_idx: np.ndarray
    mac_queue_len: np.ndarray

    def __len__(self) -> int:
        return self.timestamp_s.shape[0]


@dataclass(frozen=True)
class SimulationLog:
    scenario_text: str
    ap_ids: tuple[str, ...]
    sta_ids: tuple[str, ...]
    times: np.ndarray                 # (T,)
    positions: np.ndarray             # (T, n_sta, 3)
    rss: np.ndarray                   # (T, n_sta, n_ap); NaN = beacon missed
    associations: np.ndarray          # (T, n_sta); -1 = unassociated
    sta_throughput: np.ndarray        # (T, n_sta) Mbps
    bss_throughput: np.ndarray        # (T, n_ap) Mbps
    handovers: tuple[HandoverEvent, ...]
    triggers: tuple[ctrl.Trigger, ...]
    packets: PacketLog
    online_rows: tuple[OnlineRow, ...]
    counters: dict
    rate_table: RateTable
    t1_dbm: float
    t2_dbm: float
    eta: float

    def __post_init__(self):
        for arr in (self.times, self.positions, self.rss, self.associations,
                    self.sta_throughput, self.bss_throughput):
            arr.setflags(write=False)

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.times, self.positions, self.rss, self.associations,
                    self.sta_throughput, self.bss_throughput):
            h.update(np.ascontiguousarray(arr).tobytes())
        for pk_arr in (self.packets.timestamp_s, self.packets.arrival_time_s,
                       self.packets.snr_db, self.packets.ap_idx,
                       self.packets.sta_idx, self.packets.mac_queue_len):
            h.update(np.ascontiguousarray(pk_arr).tobytes())
        for e in self.handovers:
            h.update(repr((e.t_s, e.sta_id, e.from_ap, e.to_ap, e.cause)).encode())
        return h.hexdigest()

    def environment_digest(self) -> str:
        """Hash of policy-independent draws: mobility traces and beacon RSS."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.positions).tobytes())
        h.update(np.ascontiguousarray(self.rss).tobytes())
        return h.hexdigest()


# ---------------------------------------------------------------------------
# Airtime allocation
# ---------------------------------------------------------------------------

def bss_throughput_mbps(ap_id: str, members, eta: float = MAC_EFFICIENCY
                        ) -> tuple[dict[str, float], float]:
    """Equal-transmission-opportunity allocation within one BSS.

    members: (sta_id, phy_rate_mbps, demand_mbps) tuples. Stations below
    their demand are capped by a common per-station rate c chosen so the
    channel-time budget sum(x_i / (eta * r_i)) equals 1 (the round-robin
    rate anomaly: saturated stations share equal throughput, not equal
    airtime). Zero-rate stations get zero.
    """
    per_sta = {sta: 0.0 for sta, _, _ in members}
    active = [(sta, r, d) for sta, r, d in members if r > 0 and d > 0]
    if not active:
        return per_sta, 0.0
    pairs = sorted(((d, 1.0 / (eta * r)) for _, r, d in active),
                   key=lambda p: p[0])
    fixed = 0.0
    slope = sum(i for _, i in pairs)
    cap = np.inf
    for d, i in pairs:
        cand = (1.0 - fixed) / slope
        if cand <= d:
            cap = cand
            break
        fixed += d * i
        slope -= i
        if slope <= 0.0:
            break
    total = 0.0
    for sta, r, d in active:
        alloc = float(min(d, cap))
        per_sta[sta] = alloc
        total += alloc
    return per_sta, total


def _queue_drain(times: np.ndarray, backlog0: float, rate_bps: float,
                 t_start: float, t_end: float, size: float
                 ) -> tuple[np.ndarray, np.ndarray, float]:
    """Fluid FIFO queue: drain at rate_bps (bytes/s) between enqueues.

    Returns per-packet queue length at enqueue (whole packets waiting),
    per-packet backlog including the packet itself (for service-completion
    times), and the carried-over backlog at t_end.
    """
    if times.size == 0:
        rest = max(backlog0 - rate_bps * (t_end - t_start), 0.0)
        return np.zeros(0, dtype=np.int64), np.zeros(0), rest
    # Lindley recursion via running max: u_k = max(u_{k-1}, r t_k) + s
    c = rate_bps * times - np.arange(times.size) * size
    w = np.maximum.accumulate(np.maximum(c, backlog0 + rate_bps * t_start))
    u = w + np.arange(1, times.size + 1) * size
    after = u - rate_bps * times
    before = after - size
    qlen = np.floor(before / size + 1e-9).astype(np.int64)
    end_backlog = max(float(after[-1]) - rate_bps * (t_end - float(times[-1])), 0.0)
    return qlen, after, end_backlog


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

class Simulation:
    """Single-threaded simulation; construct, then step tick() or run()."""

    def __init__(self, cfg: ScenarioConfig, ho_policy: ctrl.HandoverPolicy,
                 ap_policy: ctrl.ApSelectionPolicy,
                 rate_table: RateTable = DEFAULT_RATE_TABLE):
        self.cfg = cfg
        self.ho_policy = ho_policy
        self.ap_policy = ap_policy
        self.rate_table = rate_table
        self.n_sta = len(cfg.stations)
        self.n_ap = len(cfg.aps)
        self.ap_ids = tuple(ap.ap_id for ap in cfg.aps)
        self.sta_ids = tuple(s.sta_id for s in cfg.stations)
        self._ap_index = {ap: k for k, ap in enumerate(self.ap_ids)}
        self._ap_radio = [replace(cfg.radio, tx_power_mw=ap.tx_power_mw)
                          for ap in cfg.aps]
        self._demands = np.array([s.demand_mbps for s in cfg.stations])
        self._lambdas = self._demands * 1e6 / _PACKET_BITS

        self._mob_seeds = [_substream_seed(cfg.seed, _STREAM_MOBILITY, i)
                           for i in range(self.n_sta)]
        self._movers = []
        for idx, sta in enumerate(cfg.stations):
            if isinstance(sta.mobility, WaypointPath):
                self._movers.append((sta.mobility, None))
            else:
                self._movers.append((sta.mobility,
                                     WalkState(sta.mobility, self._mob_seeds[idx])))

        self._shadow_rng = np.random.default_rng(
            np.random.SeedSequence((cfg.seed, _STREAM_SHADOWING)))
        self._shadow_state = self._shadow_rng.standard_normal(
            (self.n_sta, self.n_ap))
        self._traffic_rng = np.random.default_rng(
            np.random.SeedSequence((cfg.seed, _STREAM_TRAFFIC)))

        self.t = -1
        self.ctl = ctrl.ControllerState()
        self.registers = [RssRegister(self.ap_ids) for _ in range(self.n_sta)]
        self.assoc = np.full(self.n_sta, -1, dtype=np.int64)
        self.assoc_since = np.zeros(self.n_sta, dtype=np.int64)
        self._queue_bytes = np.zeros(self.n_ap)
        self._ap_stats: list[np.ndarray | None] = [None] * self.n_ap
        self._handed_over_now: set[int] = set()

        duration = cfg.duration_s
        self._positions = np.zeros((duration, self.n_sta, 3))
        self._rss = np.full((duration, self.n_sta, self.n_ap), np.nan)
        self._assoc_log = np.full((duration, self.n_sta), -1, dtype=np.int64)
        self._sta_tput = np.zeros((duration, self.n_sta))
        self._bss_tput = np.zeros((duration, self.n_ap))
        self._handovers: list[HandoverEvent] = []
        self._triggers: list[ctrl.Trigger] = []
        self._online: list[OnlineRow] = []
        self._pk_cols = {name: [] for name in (
            "timestamp_s", "arrival_time_s", "size_bytes", "snr_db",
            "ap_idx", "sta_idx", "mac_queue_len")}

    # -- handover bookkeeping ------------------------------------------------

    def current_associations(self) -> tuple[Association, ...]:
        return tuple(Association(sta_id=self.sta_ids[s],
                                 ap_id=self.ap_ids[self.assoc[s]],
                                 since_s=int(self.assoc_since[s]))
                     for s in range(self.n_sta) if self.assoc[s] >= 0)

    def execute_handover(self, sta_id: str, new_ap: str, cause: str) -> None:
        """Atomically reassociate sta_id to new_ap and log the event."""
        s = self.sta_ids.index(sta_id)
        if new_ap not in self._ap_index:
            raise SimulationError(f"unknown AP id {new_ap!r}")
        old = self.assoc[s]
        if old == self._ap_index[new_ap]:
            raise SimulationError("no-op handover rejected")
        if old < 0:
            raise SimulationError("cannot hand over an unassociated station")
        self.assoc[s] = self._ap_index[new_ap]
        self.assoc_since[s] = self.t
        self._handed_over_now.add(s)
        self._handovers.append(HandoverEvent(
            t_s=self.t, sta_id=sta_id, from_ap=self.ap_ids[old],
            to_ap=new_ap, cause=cause))

    def _disassociate(self, sta_idx: int, cause: str) -> None:
        old = self.assoc[sta_idx]
        self.assoc[sta_idx] = -1
        self._handed_over_now.add(sta_idx)
        self._handovers.append(HandoverEvent(
            t_s=self.t, sta_id=self.sta_ids[sta_idx],
            from_ap=self.ap_ids[old], to_ap=None, cause=cause))

    # -- per-tick phases -----------------------------------------------------

    def _move_stations(self, t: int) -> np.ndarray:
        pos = np.zeros((self.n_sta, 3))
        for s, (mob, walk) in enumerate(self._movers):
            if walk is None:
                p = position_at(mob, float(t), self._mob_seeds[s])
            else:
                p = walk.at(float(t))
            pos[s] = (p.x, p.y, p.z)
        return pos

    def _beacon_sweep(self, t: int, pos: np.ndarray) -> np.ndarray:
        if t > 0:
            fresh = self._shadow_rng.standard_normal((self.n_sta, self.n_ap))
            self._shadow_state = SHADOWING_RHO * self._shadow_state \
                + np.sqrt(1.0 - SHADOWING_RHO ** 2) * fresh
        flutter = self._shadow_rng.standard_normal((self.n_sta, self.n_ap))
        slow_std = np.sqrt(1.0 - SHADOWING_FAST_STD ** 2)
        draws = slow_std * self._shadow_state + SHADOWING_FAST_STD * flutter
        rss = np.empty((self.n_sta, self.n_ap))
        b = self.cfg.building
        losses = (b.external_wall_loss_db, b.internal_wall_loss_db)
        for a, ap in enumerate(self.cfg.aps):
            apos = ap.position
            dist = np.sqrt((pos[:, 0] - apos.x) ** 2
                           + (pos[:, 1] - apos.y) ** 2
                           + (pos[:, 2] - apos.z) ** 2)
            ext, inn = wall_count_many(pos[:, 0], pos[:, 1], apos.x, apos.y, b)
            rss[:, a] = rss_dbm(self._ap_radio[a], dist, ext, inn, losses,
                                draws[:, a])
        heard = rss - self.cfg.radio.noise_floor_dbm >= 0.0
        return np.where(heard, rss, np.nan)

    def _draw_traffic(self, t: int) -> list[np.ndarray]:
        counts = self._traffic_rng.poisson(self._lambdas)
        return [np.sort(self._traffic_rng.uniform(float(t), float(t) + 1.0,
                                                  size=int(c)))
                for c in counts]

    def _candidates(self, sta_idx: int, rates: np.ndarray, rss_row: np.ndarray
                    ) -> list[ctrl.ApCandidate]:
        out = []
        for a in range(self.n_ap):
            if rates[a] <= 0:
                continue
            out.append(ctrl.ApCandidate(
                ap_id=self.ap_ids[a], rss_dbm=float(rss_row[a]),
                n_clients=int(np.sum(self.assoc == a)),
                features=self._ap_stats[a]))
        return out

    def _batched_rf_labels(self, rss_now: np.ndarray) -> dict[int, int]:
        """Precompute forest votes for this tick's armed stations in one
        batch; decisions depend only on the windows, so this matches the
        per-station path exactly."""
        if not isinstance(self.ho_policy, ctrl.ProposedHandover):
            return {}
        rows = []
        who = []
        for s in range(self.n_sta):
            a = self.assoc[s]
            if a < 0 or np.isnan(rss_now[s, a]):
                continue
            latest = rss_now[s, a]
            if not (self.cfg.t2_dbm <= latest < self.cfg.t1_dbm):
                continue
            window = self.registers[s].series(self.ap_ids[a])
            if window.size == WINDOW_LEN:
                rows.append(window_features(window))
                who.append(s)
        if not rows:
            return {}
        from .ml.forest import rf_predict_batch
        labels, _ = rf_predict_batch(self.ho_policy.model, np.array(rows))
        return dict(zip(who, (int(v) for v in labels)))

    def _run_controller(self, t: int, rss_now: np.ndarray,
                        rates_all: np.ndarray) -> None:
        self._triggers.append(ctrl.Trigger(
            kind=ctrl.TriggerKind.PERIODIC, subject="beacon-sweep", time_s=t))
        rf_labels = self._batched_rf_labels(rss_now)

        # association requests first (topology-change triggers)
        for s in range(self.n_sta):
            if self.assoc[s] >= 0:
                continue
            cands = self._candidates(s, rates_all[s], rss_now[s])
            if not cands:
                continue
            self._triggers.append(ctrl.Trigger(
                kind=ctrl.TriggerKind.TOPOLOGY_CHANGE,
                subject=self.sta_ids[s], time_s=t))
            chosen = ctrl.select_ap(self.ap_policy, self.sta_ids[s], cands)
            self.assoc[s] = self._ap_index[chosen]
            self.assoc_since[s] = t

        # beacon processing for associated stations
        cfg = self.cfg
        for s in range(self.n_sta):
            a = self.assoc[s]
            if a < 0 or s in self._handed_over_now:
                continue
            serving_ap = self.ap_ids[a]
            register = self.registers[s]
            if np.isnan(rss_now[s, a]):
                # serving beacon lost outright: forced handover, no model
                self.ctl.forced_handovers += 1
                self.ctl.armed[self.sta_ids[s]] = False
                self._forced_move(s, rates_all[s], rss_now[s])
                continue
            action = ctrl.on_beacon(self.ctl, self.sta_ids[s], register,
                                    serving_ap, cfg.t1_dbm, cfg.t2_dbm)
            if action is ctrl.Action.ARM:
                self._triggers.append(ctrl.Trigger(
                    kind=ctrl.TriggerKind.PERFORMANCE_DEGRADATION,
                    subject=self.sta_ids[s], time_s=t, metric="rss_dbm",
                    threshold=cfg.t1_dbm))
            if action is ctrl.Action.FORCE_HANDOVER:
                self.ctl.forced_handovers += 1
                window = register.series(serving_ap)
                if window.size == WINDOW_LEN:
                    self._online.append(OnlineRow(
                        t_s=t, sta_idx=s, ap_idx=a,
                        features=window_features(window), decision=1,
                        cause="forced_t2"))
                    self.ctl.rows_appended += 1
                self._forced_move(s, rates_all[s], rss_now[s])
            elif action in (ctrl.Action.ARM, ctrl.Action.RUN_PREDICTION):
                window = register.series(serving_ap)
                if window.size < WINDOW_LEN:
                    continue
                cands = [(c.ap_id, c.rss_dbm)
                         for c in self._candidates(s, rates_all[s], rss_now[s])
                         if c.ap_id != serving_ap]
                self.ctl.predictions_run += 1
                self.ctl.last_decision_s[self.sta_ids[s]] = t
                if s in rf_labels:
                    self.ctl.rf_calls += 1
                    handover = rf_labels[s] == 1
                else:
                    handover, _ = ctrl.decide_handover(
                        self.ho_policy, ctrl.HandoverContext(
                            window=window, candidates=tuple(cands)), self.ctl)
                self._online.append(OnlineRow(
                    t_s=t, sta_idx=s, ap_idx=a,
                    features=window_features(window),
                    decision=int(handover), cause="prediction"))
                self.ctl.rows_appended += 1
                if handover and cands:
                    full = [c for c in self._candidates(s, rates_all[s],
                                                        rss_now[s])
                            if c.ap_id != serving_ap]
                    target = ctrl.select_ap(self.ap_policy, self.sta_ids[s],
                                            full)
                    cause = "predicted" if isinstance(
                        self.ho_policy, ctrl.ProposedHandover) else "baseline"
                    self.execute_handover(self.sta_ids[s], target, cause)

    def _forced_move(self, sta_idx: int, rates: np.ndarray,
                     rss_row: np.ndarray) -> None:
        serving = self.assoc[sta_idx]
        cands = [c for c in self._candidates(sta_idx, rates, rss_row)
                 if c.ap_id != self.ap_ids[serving]]
        if cands:
            target = ctrl.select_ap(self.ap_policy, self.sta_ids[sta_idx], cands)
            self.execute_handover(self.sta_ids[sta_idx], target, "forced_t2")
        else:
            self._disassociate(sta_idx, "forced_t2")

    def _serve_traffic(self, t: int, rss_now: np.ndarray,
                       rates_all: np.ndarray, arrivals: list[np.ndarray]) -> None:
        snr_now = rss_now - self.cfg.radio.noise_floor_dbm
        stats_next: list[np.ndarray | None] = [None] * self.n_ap
        for a in range(self.n_ap):
            member_idx = [s for s in range(self.n_sta)
                          if self.assoc[s] == a and s not in self._handed_over_now]
            members = [(self.sta_ids[s], float(rates_all[s, a]),
                        float(self._demands[s])) for s in member_idx]
            per_sta, total = bss_throughput_mbps(self.ap_ids[a], members)
            for s in member_idx:
                self._sta_tput[t, s] = per_sta[self.sta_ids[s]]
            self._bss_tput[t, a] = total

            # materialize packets for members with a live link
            times_list = []
            sta_list = []
            for s in member_idx:
                if rates_all[s, a] <= 0 or arrivals[s].size == 0:
                    continue
                times_list.append(arrivals[s])
                sta_list.append(np.full(arrivals[s].size, s, dtype=np.int64))
            if times_list:
                times = np.concatenate(times_list)
                stas = np.concatenate(sta_list)
                order = np.argsort(times, kind="stable")
                times = times[order]
                stas = stas[order]
            else:
                times = np.zeros(0)
                stas = np.zeros(0, dtype=np.int64)

            rate_bps = total * 1e6 / 8.0
            qlen, backlog_after, self._queue_bytes[a] = _queue_drain(
                times, float(self._queue_bytes[a]), rate_bps,
                float(t), float(t) + 1.0, float(PACKET_BYTES))
            if times.size:
                # tail drop: arrivals that would exceed the buffer never join
                admitted = qlen < MAC_QUEUE_CAP
                if not np.all(admitted):
                    dropped_bytes = float(np.sum(~admitted)) * PACKET_BYTES
                    self._queue_bytes[a] = max(
                        self._queue_bytes[a] - dropped_bytes, 0.0)
                    dropped_before = np.cumsum(
                        np.where(admitted, 0.0, float(PACKET_BYTES)))
                    times = times[admitted]
                    stas = stas[admitted]
                    qlen = qlen[admitted]
                    backlog_after = backlog_after[admitted] - dropped_before[admitted]
            if times.size:
                snr_pk = snr_now[stas, a]
                # a packet reaches the AP when its queue position drains
                completions = times + backlog_after / rate_bps
                self._pk_cols["timestamp_s"].append(times)
                self._pk_cols["arrival_time_s"].append(completions)
                self._pk_cols["size_bytes"].append(
                    np.full(times.size, PACKET_BYTES, dtype=np.int64))
                self._pk_cols["snr_db"].append(snr_pk)
                self._pk_cols["ap_idx"].append(
                    np.full(times.size, a, dtype=np.int64))
                self._pk_cols["sta_idx"].append(stas)
                self._pk_cols["mac_queue_len"].append(qlen)
                # candidate features for next tick's association requests
                delays = qlen * _PACKET_BITS / (rates_all[stas, a] * 1e6)
                stats_next[a] = np.array([
                    float(len(member_idx)), *stats5(snr_pk), *stats5(delays)])
        self._ap_stats = stats_next

    # -- main loop -----------------------------------------------------------

    def tick(self) -> None:
        """Advance the simulation by one second."""
        t = self.t + 1
        if t >= self.cfg.duration_s:
            raise SimulationError("simulation already ran to completion")
        self.t = t
        self._handed_over_now = set()

        pos = self._move_stations(t)
        rss_now = self._beacon_sweep(t, pos)
        arrivals = self._draw_traffic(t)

        for s in range(self.n_sta):
            reg = self.registers[s]
            for a in range(self.n_ap):
                v = rss_now[s, a]
                reg.record(self.ap_ids[a], t, None if np.isnan(v) else float(v))
            reg.expire(t)

        snr_now = rss_now - self.cfg.radio.noise_floor_dbm
        rates_all = phy_rate_many(snr_now, self.rate_table)

        self._run_controller(t, rss_now, rates_all)
        self._serve_traffic(t, rss_now, rates_all, arrivals)

        self._positions[t] = pos
        self._rss[t] = rss_now
        self._assoc_log[t] = self.assoc

    def run(self) -> SimulationLog:
        for _ in range(self.cfg.duration_s):
            self.tick()
        return self._finalize()

    def _finalize(self) -> SimulationLog:
        packets = PacketLog(**{
            name: (np.concatenate(chunks) if chunks else
                   np.zeros(0, dtype=np.int64 if name in
                            ("size_bytes", "ap_idx", "sta_idx",
                             "mac_queue_len") else float))
            for name, chunks in self._pk_cols.items()})
        counters = {
            "predictions_run": self.ctl.predictions_run,
            "rf_calls": self.ctl.rf_calls,
            "forced_handovers": self.ctl.forced_handovers,
            "rows_appended": self.ctl.rows_appended,
            "handover_events": len(self._handovers),
        }
        return SimulationLog(
            scenario_text=save_scenario(self.cfg),
            ap_ids=self.ap_ids, sta_ids=self.sta_ids,
            times=np.arange(self.cfg.duration_s, dtype=np.int64),
            positions=self._positions, rss=self._rss,
            associations=self._assoc_log, sta_throughput=self._sta_tput,
            bss_throughput=self._bss_tput,
            handovers=tuple(self._handovers), triggers=tuple(self._triggers),
            packets=packets, online_rows=tuple(self._online),
            counters=counters, rate_table=self.rate_table,
            t1_dbm=self.cfg.t1_dbm, t2_dbm=self.cfg.t2_dbm,
            eta=MAC_EFFICIENCY)


def run(cfg: ScenarioConfig, ho_policy: ctrl.HandoverPolicy,
        ap_policy: ctrl.ApSelectionPolicy,
        rate_table: RateTable = DEFAULT_RATE_TABLE) -> SimulationLog:
    """Run a scenario to completion; pure function of (cfg, policies)."""
    return Simulation(cfg, ho_policy, ap_policy, rate_table).run()
