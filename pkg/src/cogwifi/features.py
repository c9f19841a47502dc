"""Feature extraction: sliding-window framing, five-number statistics, and
the three ML-ready dataset schemas with strict CSV round-tripping.

Dataset rows store raw physical values; normalization happens in the ml
package. Builders over simulation logs live here too (see build_*).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DatasetError
from .radio import phy_rate_many

WINDOW_LEN = 10          # feature-derivation window (samples)
LABEL_LOOKAHEAD_S = 5    # forecast window: how far ahead a disconnect counts
LABEL_HYSTERESIS_S = 3   # seconds an alternative must stay better
LABEL_MARGIN_DB = 3.0    # how much better it must stay (hysteresis margin)

HANDOVER_COLUMNS = tuple(f"rss_{i}" for i in range(WINDOW_LEN)) \
    + ("min", "max", "mean", "handover")
THROUGHPUT_COLUMNS = ("n_clients", "iat_mean", "iat_min", "iat_max",
                      "iat_skew", "iat_kurtosis", "throughput_mbps")
AP_SELECTION_COLUMNS = ("n_clients",
                        "snr_mean", "snr_min", "snr_max", "snr_skew", "snr_kurtosis",
                        "mac_delay_mean", "mac_delay_min", "mac_delay_max",
                        "mac_delay_skew", "mac_delay_kurtosis",
                        "throughput_mbps")

SCHEMA_COLUMNS = {
    "handover": HANDOVER_COLUMNS,
    "throughput": THROUGHPUT_COLUMNS,
    "ap_selection": AP_SELECTION_COLUMNS,
}

# Relative variance floor below which skew/kurtosis are defined as 0.
_VAR_EPS = 1e-9


def stats5(values) -> tuple[float, float, float, float, float]:
    """(mean, min, max, skew, excess kurtosis) with population moments.

    Skew and kurtosis are 0 whenever the variance is negligible relative to
    the value scale (covers exactly-constant and ulp-jitter inputs).
    """
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise DatasetError("stats5 needs a non-empty input")
    mean = float(np.mean(x))
    lo = float(np.min(x))
    hi = float(np.max(x))
    d = x - mean
    m2 = float(np.mean(d * d))
    scale = max(abs(lo), abs(hi))
    if m2 <= (_VAR_EPS * scale) ** 2:
        return mean, lo, hi, 0.0, 0.0
    m3 = float(np.mean(d ** 3))
    m4 = float(np.mean(d ** 4))
    skew = m3 / m2 ** 1.5
    kurtosis = m4 / (m2 * m2) - 3.0
    return mean, lo, hi, skew, kurtosis


@dataclass(frozen=True)
class Dataset:
    """Rows of one schema: features matrix plus target vector."""

    schema: str
    features: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        if self.schema not in SCHEMA_COLUMNS:
            raise DatasetError(f"unknown schema {self.schema!r}")
        feats = np.asarray(self.features, dtype=float)
        tgt = np.asarray(self.target, dtype=float)
        if feats.ndim != 2 or feats.shape[1] != len(self.feature_names):
            raise DatasetError(
                f"schema {self.schema!r} expects {len(self.feature_names)} "
                f"feature columns, got shape {feats.shape}")
        if tgt.shape != (feats.shape[0],):
            raise DatasetError("target length must match feature rows")
        if not np.all(np.isfinite(feats)) or not np.all(np.isfinite(tgt)):
            raise DatasetError("dataset contains non-finite values")
        feats.setflags(write=False)
        tgt.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "target", tgt)
        _validate_rows(self.schema, feats, tgt)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return SCHEMA_COLUMNS[self.schema][:-1]

    @property
    def target_name(self) -> str:
        return SCHEMA_COLUMNS[self.schema][-1]

    def __len__(self) -> int:
        return self.features.shape[0]

    def take(self, idx) -> "Dataset":
        return Dataset(self.schema, self.features[idx], self.target[idx])


def _validate_rows(schema: str, feats: np.ndarray, tgt: np.ndarray) -> None:
    tol = 1e-9

    def check_triple(mean, lo, hi, what):
        bad = (lo > mean + tol) | (mean > hi + tol)
        if np.any(bad):
            raise DatasetError(f"{what} min <= mean <= max violated "
                               f"at row {int(np.nonzero(bad)[0][0])}")

    if schema == "handover":
        rss = feats[:, :WINDOW_LEN]
        lo, hi, mean = feats[:, 10], feats[:, 11], feats[:, 12]
        if np.any(np.abs(rss.min(axis=1) - lo) > tol) \
                or np.any(np.abs(rss.max(axis=1) - hi) > tol):
            raise DatasetError("stored min/max do not match window values")
        if np.any(np.abs(rss.mean(axis=1) - mean) > 1e-6):
            raise DatasetError("stored mean does not match window values")
        if not np.all(np.isin(tgt, (0.0, 1.0))):
            raise DatasetError("handover label must be 0 or 1")
    elif schema == "throughput":
        if np.any(feats[:, 0] < 1):
            raise DatasetError("n_clients must be >= 1")
        check_triple(feats[:, 1], feats[:, 2], feats[:, 3], "iat")
        if np.any(tgt < 0):
            raise DatasetError("throughput must be >= 0")
    elif schema == "ap_selection":
        if np.any(feats[:, 0] < 1):
            raise DatasetError("n_clients must be >= 1")
        check_triple(feats[:, 1], feats[:, 2], feats[:, 3], "snr")
        check_triple(feats[:, 6], feats[:, 7], feats[:, 8], "mac_delay")
        if np.any(tgt < 0):
            raise DatasetError("throughput must be >= 0")


# ---------------------------------------------------------------------------
# Handover windows and labels
# ---------------------------------------------------------------------------

def window_features(window) -> np.ndarray:
    """13-entry feature vector: the 10 samples plus (min, max, mean)."""
    w = np.asarray(window, dtype=float)
    if w.shape != (WINDOW_LEN,):
        raise DatasetError(f"window must have exactly {WINDOW_LEN} samples")
    return np.concatenate([w, [np.min(w), np.max(w), np.mean(w)]])


def handover_windows(series, labels) -> Dataset:
    """Slide a 10-sample window with unit shift; one row per forecast point.

    Row t uses series[t-10 .. t-1] as features and labels[t] as the target,
    so a series of length L yields L - 10 rows.
    """
    s = np.asarray(series, dtype=float)
    y = np.asarray(labels, dtype=float)
    if s.ndim != 1 or s.shape != y.shape:
        raise DatasetError("series and labels must be 1-D and equally long")
    if s.size < WINDOW_LEN + 1:
        raise DatasetError(f"series too short: need >= {WINDOW_LEN + 1} samples")
    rows = [window_features(s[t - WINDOW_LEN:t]) for t in range(WINDOW_LEN, s.size)]
    return Dataset("handover", np.array(rows), y[WINDOW_LEN:])


def label_handover(serving_future, alt_future, t2_dbm: float,
                   hysteresis_s: int = LABEL_HYSTERESIS_S,
                   margin_db: float = LABEL_MARGIN_DB) -> int:
    """Ground-truth label at a forecast point.

    Both inputs start at +1 s after the window and span the forecast
    window. Label 1 iff the serving RSS drops below t2 anywhere in the
    provided lookahead (forced disconnect; a missing beacon counts as
    -inf), or the best alternative beats serving by the hysteresis margin
    for hysteresis_s consecutive seconds (a sustained switch, not a
    ping-pong; the margin keeps shadowing flutter out). Horizons shorter
    than hysteresis_s are judged on what is available.
    """
    sf = np.asarray(serving_future, dtype=float)
    af = np.asarray(alt_future, dtype=float)
    if sf.size < 1 or af.size < 1:
        raise DatasetError("label_handover needs at least 1 s of lookahead")
    sf = np.where(np.isnan(sf), -np.inf, sf)
    af = np.where(np.isnan(af), -np.inf, af)
    if np.min(sf) < t2_dbm:
        return 1
    h = min(hysteresis_s, sf.size, af.size)
    if np.all(af[:h] > sf[:h] + margin_db):
        return 1
    return 0


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------

def write_csv(ds: Dataset, path) -> None:
    """Write a dataset with the exact schema header; floats use repr so the
    round-trip is lossless."""
    columns = SCHEMA_COLUMNS[ds.schema]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\n")
        for row, tgt in zip(ds.features, ds.target):
            cells = [repr(float(v)) for v in row]
            if ds.schema == "handover":
                cells.append(str(int(tgt)))
            else:
                cells.append(repr(float(tgt)))
            fh.write(",".join(cells) + "\n")


def read_csv(path, schema: str) -> Dataset:
    """Read and validate a dataset CSV; the header must match exactly."""
    if schema not in SCHEMA_COLUMNS:
        raise DatasetError(f"unknown schema {schema!r}")
    columns = SCHEMA_COLUMNS[schema]
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header.split(",") != list(columns):
            raise DatasetError(
                f"header mismatch for schema {schema!r}: got {header!r}")
        feats = []
        tgts = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != len(columns):
                raise DatasetError(f"row {lineno}: expected {len(columns)} cells")
            try:
                values = [float(c) for c in cells]
            except ValueError as exc:
                raise DatasetError(f"row {lineno}: unparsable cell") from exc
            for col, v in zip(columns, values):
                if not np.isfinite(v):
                    raise DatasetError(
                        f"row {lineno}, column {col!r}: non-finite value")
            feats.append(values[:-1])
            tgts.append(values[-1])
    if not feats:
        raise DatasetError("dataset file has no rows")
    return Dataset(schema, np.array(feats), np.array(tgts))


# ---------------------------------------------------------------------------
# Builders over simulation logs
# ---------------------------------------------------------------------------

def serving_series(log, sta_idx: int) -> tuple[np.ndarray, np.ndarray]:
    """(serving_rss[t], serving_ap_idx[t]) for one station; NaN / -1 when
    unassociated or the serving beacon was missed."""
    assoc = log.associations[:, sta_idx]
    rss = np.full(assoc.shape, np.nan)
    ok = assoc >= 0
    rss[ok] = log.rss[np.nonzero(ok)[0], sta_idx, assoc[ok]]
    return rss, assoc


def build_handover_dataset(log, armed_only: bool = True,
                           lookahead_s: int = LABEL_LOOKAHEAD_S,
                           hysteresis_s: int = LABEL_HYSTERESIS_S,
                           margin_db: float = LABEL_MARGIN_DB) -> Dataset:
    """Window the serving-AP RSS of every station and label each forecast
    point with the offline ground-truth rule.

    With armed_only, keep rows whose newest window sample is below t1 --
    the region where the online prediction loop actually runs.
    """
    t1 = log.t1_dbm
    t2 = log.t2_dbm
    n_ticks, n_sta, _ = log.rss.shape
    rows = []
    labels = []
    for s in range(n_sta):
        assoc = log.associations[:, s]
        for t in range(WINDOW_LEN, n_ticks):
            ap = assoc[t - 1]
            if ap < 0:
                continue
            window = log.rss[t - WINDOW_LEN:t, s, ap]
            if not np.all(np.isfinite(window)):
                continue
            if armed_only and window[-1] >= t1:
                continue
            serving_future = log.rss[t:t + lookahead_s, s, ap]
            others = np.delete(log.rss[t:t + lookahead_s, s, :], ap, axis=1)
            others = np.where(np.isnan(others), -np.inf, others)
            alt_future = others.max(axis=1) if others.shape[1] else \
                np.full(serving_future.shape, -np.inf)
            rows.append(window_features(window))
            labels.append(label_handover(serving_future, alt_future, t2,
                                         hysteresis_s, margin_db))
    if not rows:
        raise DatasetError("log produced no handover windows")
    return Dataset("handover", np.array(rows), np.array(labels, dtype=float))


def _window_slices(n_ticks: int, window_s: int):
    for start in range(0, n_ticks - window_s + 1, window_s):
        yield start, start + window_s


def build_throughput_dataset(log, window_s: int = 1) -> Dataset:
    """One row per (ap, window): client count at window end, IAT statistics
    over the window's packet arrivals, mean BSS throughput as target.
    Windows with fewer than two packets are skipped."""
    return _build_windowed(log, window_s, want_ap_features=False)


def build_ap_selection_dataset(log, window_s: int = 1) -> Dataset:
    """Like build_throughput_dataset but with SNR and MAC-delay statistics
    (delay = queue_len * packet_bits / phy_rate per packet)."""
    return _build_windowed(log, window_s, want_ap_features=True)


def _build_windowed(log, window_s: int, want_ap_features: bool) -> Dataset:
    if window_s < 1:
        raise DatasetError("window_s must be >= 1")
    pk = log.packets
    n_ticks = log.rss.shape[0]
    n_aps = log.rss.shape[2]
    rows = []
    targets = []
    if want_ap_features:
        rates = phy_rate_many(pk.snr_db, log.rate_table)
        with np.errstate(divide="ignore"):
            delays = np.where(
                rates > 0,
                pk.mac_queue_len * pk.size_bytes * 8.0 / (rates * 1e6),
                0.0)
    for ap in range(n_aps):
        ap_mask = pk.ap_idx == ap
        ap_times = pk.arrival_time_s[ap_mask]
        for start, stop in _window_slices(n_ticks, window_s):
            t_lo = log.times[start]
            t_hi = t_lo + window_s
            in_win = (ap_times >= t_lo) & (ap_times < t_hi)
            if int(in_win.sum()) < 2:
                continue
            n_clients = int(np.sum(log.associations[stop - 1] == ap))
            if n_clients < 1:
                continue
            tput = float(np.mean(log.bss_throughput[start:stop, ap]))
            if want_ap_features:
                idx = np.nonzero(ap_mask)[0][in_win]
                snr_stats = stats5(pk.snr_db[idx])
                delay_stats = stats5(delays[idx])
                rows.append([n_clients, *snr_stats, *delay_stats])
            else:
                wt = np.sort(ap_times[in_win])
                iat = np.diff(wt)
                rows.append([n_clients, *stats5(iat)])
            targets.append(tput)
    if not rows:
        raise DatasetError("log produced no windows with enough packets")
    schema = "ap_selection" if want_ap_features else "throughput"
    return Dataset(schema, np.array(rows, dtype=float), np.array(targets))


def online_handover_dataset(log, lookahead_s: int = LABEL_LOOKAHEAD_S,
                            hysteresis_s: int = LABEL_HYSTERESIS_S) -> Dataset:
    """Label the rows the controller appended during the run (one per
    prediction or forced handover) with the offline ground-truth rule."""
    if not log.online_rows:
        raise DatasetError("log has no online prediction rows")
    feats = []
    labels = []
    for row in log.online_rows:
        t = row.t_s
        s = row.sta_idx
        ap = row.ap_idx
        serving_future = log.rss[t + 1:t + 1 + lookahead_s, s, ap]
        if serving_future.size < 1:
            continue
        others = np.delete(log.rss[t + 1:t + 1 + lookahead_s, s, :], ap, axis=1)
        others = np.where(np.isnan(others), -np.inf, others)
        alt_future = others.max(axis=1) if others.shape[1] else \
            np.full(serving_future.shape, -np.inf)
        feats.append(row.features)
        labels.append(label_handover(serving_future, alt_future, log.t2_dbm,
                                     hysteresis_s))
    return Dataset("handover", np.array(feats), np.array(labels, dtype=float))
