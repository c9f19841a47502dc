"""Cognitive decision layer: two-threshold trigger machine, handover
policies (learned + forecasting baselines), and AP selection on
association requests.

The controller never owns an RNG: every decision is a pure function of the
tick snapshot and the (immutable) trained models, which keeps policy
comparisons on identical environments honest.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import SimulationError
from .features import WINDOW_LEN, window_features
from .ml.ar1 import ar1_fit, ar1_forecast
from .ml.forest import ForestModel, rf_predict
from .ml.mlp import MlpModel, mlp_predict
from .radio import RadioParams, estimate_distance_m, rss_dbm


class Action(enum.Enum):
    NONE = "none"
    ARM = "arm"                      # arm also runs a prediction this tick
    DISARM = "disarm"
    RUN_PREDICTION = "run_prediction"
    FORCE_HANDOVER = "force_handover"


class TriggerKind(enum.Enum):
    TOPOLOGY_CHANGE = "topology_change"
    PERFORMANCE_DEGRADATION = "performance_degradation"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class Trigger:
    kind: TriggerKind
    subject: str
    time_s: int
    metric: str | None = None
    threshold: float | None = None

    def __post_init__(self):
        if self.kind is TriggerKind.PERFORMANCE_DEGRADATION and \
                (self.metric is None or self.threshold is None):
            raise SimulationError(
                "performance-degradation trigger needs metric and threshold")


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProposedHandover:
    """Forest classifier over the 13-feature sliding window."""
    model: ForestModel

    def __post_init__(self):
        if self.model is None:
            raise SimulationError("proposed handover policy: model required")


@dataclass(frozen=True)
class RssForecastHandover:
    """AR(1) forecast of the serving RSS against the disconnect threshold.

    With horizon=1 this is the classic next-second rule; a longer horizon
    extrapolates the fitted recurrence and fires if the forecast path
    crosses the threshold anywhere, matching the forecast window the
    learned policy is trained on.
    """
    threshold_dbm: float
    min_window: int = 3
    horizon: int = 1

    def __post_init__(self):
        if self.horizon < 1:
            raise SimulationError("forecast horizon must be >= 1")


@dataclass(frozen=True)
class TravelDistanceHandover:
    """Distance estimated by inverting the path-loss law at two consecutive
    seconds; constant speed projects the next-second RSS."""
    radio: RadioParams
    threshold_dbm: float


HandoverPolicy = ProposedHandover | RssForecastHandover | TravelDistanceHandover


@dataclass(frozen=True)
class ProposedApSelection:
    """Throughput regressor scored per candidate AP with the requester
    counted; falls back to strongest-signal while candidates lack feature
    rows (cold start)."""
    model: MlpModel

    def __post_init__(self):
        if self.model is None:
            raise SimulationError("proposed AP-selection policy: model required")


@dataclass(frozen=True)
class SsfApSelection:
    pass


@dataclass(frozen=True)
class LlfApSelection:
    pass


ApSelectionPolicy = ProposedApSelection | SsfApSelection | LlfApSelection

HO_POLICY_NAMES = ("proposed", "rss_forecast", "travel_distance")
AP_POLICY_NAMES = ("proposed", "ssf", "llf")


def make_handover_policy(name: str, model: ForestModel | None = None,
                         radio: RadioParams | None = None,
                         t2_dbm: float = -85.0,
                         horizon: int = 1) -> HandoverPolicy:
    if name == "proposed":
        if model is None:
            raise SimulationError("handover policy 'proposed': model required")
        return ProposedHandover(model=model)
    if name == "rss_forecast":
        return RssForecastHandover(threshold_dbm=t2_dbm, horizon=horizon)
    if name == "travel_distance":
        if radio is None:
            raise SimulationError("handover policy 'travel_distance': "
                                  "radio parameters required")
        return TravelDistanceHandover(radio=radio, threshold_dbm=t2_dbm)
    raise SimulationError(f"unknown handover policy {name!r}")


def make_ap_policy(name: str, model: MlpModel | None = None) -> ApSelectionPolicy:
    if name == "ssf":
        return SsfApSelection()
    if name == "llf":
        return LlfApSelection()
    if name == "proposed":
        if model is None:
            raise SimulationError("AP policy 'proposed': model required")
        return ProposedApSelection(model=model)
    raise SimulationError(f"unknown AP policy {name!r}")


# ---------------------------------------------------------------------------
# Trigger machine
# ---------------------------------------------------------------------------

@dataclass
class ControllerState:
    """Per-run mutable controller bookkeeping."""

    armed: dict[str, bool] = field(default_factory=dict)
    last_decision_s: dict[str, int] = field(default_factory=dict)
    predictions_run: int = 0
    rf_calls: int = 0
    forced_handovers: int = 0
    rows_appended: int = 0


def on_beacon(ctl: ControllerState, sta_id: str, register, serving_ap: str,
              t1_dbm: float, t2_dbm: float) -> Action:
    """Two-threshold trigger logic on the latest serving-AP sample.

    Below t2 the handover is forced without consulting any model. Between
    the thresholds the station arms (first crossing) and a prediction runs
    every beacon while armed. At or above t1 an armed station disarms.
    """
    latest = register.latest(serving_ap)
    if latest is None:
        raise SimulationError("on_beacon requires at least one serving-AP sample")
    armed = ctl.armed.get(sta_id, False)
    if latest < t2_dbm:
        ctl.armed[sta_id] = False
        return Action.FORCE_HANDOVER
    if latest < t1_dbm:
        if not armed:
            ctl.armed[sta_id] = True
            return Action.ARM
        return Action.RUN_PREDICTION
    if armed:
        ctl.armed[sta_id] = False
        return Action.DISARM
    return Action.NONE


# ---------------------------------------------------------------------------
# Handover decision
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HandoverContext:
    """Snapshot handed to a handover policy: the serving-AP window (oldest
    first) and the non-serving in-range candidates' current RSS."""
    window: np.ndarray
    candidates: tuple[tuple[str, float], ...]


def _strongest(candidates) -> str | None:
    if not candidates:
        return None
    return min(candidates, key=lambda c: (-c[1], c[0]))[0]


def decide_handover(policy: HandoverPolicy, ctx: HandoverContext,
                    ctl: ControllerState | None = None) -> tuple[bool, str | None]:
    window = np.asarray(ctx.window, dtype=float)
    if isinstance(policy, ProposedHandover):
        if window.size != WINDOW_LEN:
            raise SimulationError(
                f"proposed policy needs a complete {WINDOW_LEN}-sample window")
        if ctl is not None:
            ctl.rf_calls += 1
        label, _ = rf_predict(policy.model, window_features(window))
        handover = label == 1
    elif isinstance(policy, RssForecastHandover):
        if window.size < policy.min_window:
            raise SimulationError(
                f"rss-forecast policy needs >= {policy.min_window} samples")
        if np.min(window) == np.max(window):
            forecast = float(window[-1])
        else:
            model = ar1_fit(window)
            forecast = float(np.min(ar1_forecast(model, window[-1],
                                                 policy.horizon)))
        handover = forecast < policy.threshold_dbm
    elif isinstance(policy, TravelDistanceHandover):
        if window.size < 2:
            raise SimulationError("travel-distance policy needs >= 2 samples")
        d_prev = float(estimate_distance_m(window[-2], policy.radio))
        d_now = float(estimate_distance_m(window[-1], policy.radio))
        d_next = d_now + (d_now - d_prev)   # constant-speed projection
        projected = float(rss_dbm(policy.radio, max(d_next, 0.0)))
        handover = projected < policy.threshold_dbm
    else:
        raise SimulationError(f"unknown handover policy {type(policy).__name__}")
    return handover, (_strongest(ctx.candidates) if handover else None)


# ---------------------------------------------------------------------------
# AP selection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ApCandidate:
    ap_id: str
    rss_dbm: float
    n_clients: int
    features: np.ndarray | None = None   # ap_selection row, pre-request


def select_ap(policy: ApSelectionPolicy, sta_id: str,
              candidates: list[ApCandidate]) -> str:
    if not candidates:
        raise SimulationError("select_ap requires a non-empty candidate list")
    ranked = sorted(candidates, key=lambda c: c.ap_id)
    if isinstance(policy, SsfApSelection):
        return max(ranked, key=lambda c: c.rss_dbm).ap_id
    if isinstance(policy, LlfApSelection):
        return min(ranked, key=lambda c: (c.n_clients, -c.rss_dbm)).ap_id
    if isinstance(policy, ProposedApSelection):
        if any(c.features is None for c in candidates):
            return select_ap(SsfApSelection(), sta_id, candidates)
        rows = np.array([c.features for c in ranked], dtype=float)
        rows[:, 0] = [c.n_clients + 1 for c in ranked]  # count the requester
        preds = np.asarray(mlp_predict(policy.model, rows))
        return ranked[int(np.argmax(preds))].ap_id
    raise SimulationError(f"unknown AP policy {type(policy).__name__}")


# ---------------------------------------------------------------------------
# Unnecessary-handover metric
# ---------------------------------------------------------------------------

def count_unnecessary_handovers(log, window_s: int = 5) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative count over time of handovers that were not needed.

    A handover at t is unnecessary iff the station returns to the departed
    AP within window_s seconds (ping-pong), or the departed AP's RSS never
    fell below t2 during the following window_s seconds (a missed beacon
    counts as below t2).
    """
    n_ticks = log.rss.shape[0]
    sta_index = {sta: k for k, sta in enumerate(log.sta_ids)}
    ap_index = {ap: k for k, ap in enumerate(log.ap_ids)}
    events = [e for e in log.handovers if e.to_ap is not None]
    flags = np.zeros(n_ticks, dtype=np.int64)
    for e in events:
        pingpong = any(e2.sta_id == e.sta_id and e2.to_ap == e.from_ap
                       and e.t_s < e2.t_s <= e.t_s + window_s
                       for e2 in events)
        seg = log.rss[e.t_s + 1:min(e.t_s + window_s, n_ticks - 1) + 1,
                      sta_index[e.sta_id], ap_index[e.from_ap]]
        seg = np.where(np.isnan(seg), -np.inf, seg)
        never_below = seg.size == 0 or float(np.min(seg)) >= log.t2_dbm
        if pingpong or never_below:
            flags[e.t_s] += 1
    return np.arange(n_ticks), np.cumsum(flags)
