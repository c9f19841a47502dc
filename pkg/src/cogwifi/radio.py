"""Link-budget math: received power, SNR, PHY rates, and distance inversion.

All functions are pure and accept numpy arrays as well as scalars; shadowing
randomness is injected by the caller as standard-normal draws so the caller
owns the RNG stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# Received power diverges as distance -> 0; clamp instead.
MIN_DISTANCE_M = 0.1


@dataclass(frozen=True)
class RadioParams:
    """Propagation parameters shared by every AP-station link."""

    tx_power_mw: float = 100.0
    path_loss_exponent: float = 3.0
    shadowing_sigma_db: float = 4.0
    noise_floor_dbm: float = -90.0

    def __post_init__(self):
        if not self.tx_power_mw > 0:
            raise ConfigError("tx_power_mw must be > 0")
        if not self.path_loss_exponent > 0:
            raise ConfigError("path_loss_exponent must be > 0")
        if self.shadowing_sigma_db < 0:
            raise ConfigError("shadowing_sigma_db must be >= 0")
        if not np.isfinite(self.noise_floor_dbm):
            raise ConfigError("noise_floor_dbm must be finite")


@dataclass(frozen=True)
class RateTable:
    """SNR-to-PHY-rate ladder: ordered (min_snr_db, rate_mbps) steps."""

    steps: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.steps:
            raise ConfigError("rate table must be non-empty")
        snrs = [s for s, _ in self.steps]
        rates = [r for _, r in self.steps]
        if any(b <= a for a, b in zip(snrs, snrs[1:])):
            raise ConfigError("rate table SNR thresholds must be strictly increasing")
        if any(b <= a for a, b in zip(rates, rates[1:])) or rates[0] < 0:
            raise ConfigError("rate table rates must be strictly increasing and >= 0")

    @property
    def min_snr_db(self) -> float:
        return self.steps[0][0]

    @property
    def max_rate_mbps(self) -> float:
        return self.steps[-1][1]


# 802.11a/g-like 8-step ladder (see README config reference).
DEFAULT_RATE_TABLE = RateTable(steps=(
    (5.0, 6.0),
    (8.0, 9.0),
    (11.0, 12.0),
    (14.0, 18.0),
    (17.0, 24.0),
    (20.0, 36.0),
    (23.0, 48.0),
    (25.0, 54.0),
))


def rss_dbm(p: RadioParams, distance_m, ext_walls=0, int_walls=0,
            wall_losses_db=(0.0, 0.0), noise_draw=0.0):
    """Received signal strength over a log-distance channel with shadowing.

    Computed in the dB domain: tx power (dBm) minus 10*beta*log10(d), plus
    shadowing sigma*draw, minus per-crossing wall losses. Distances are
    clamped to MIN_DISTANCE_M.
    """
    d = np.maximum(distance_m, MIN_DISTANCE_M)
    ewl_db, iwl_db = wall_losses_db
    return (10.0 * np.log10(p.tx_power_mw)
            - 10.0 * p.path_loss_exponent * np.log10(d)
            + p.shadowing_sigma_db * np.asarray(noise_draw)
            - np.asarray(ext_walls) * ewl_db
            - np.asarray(int_walls) * iwl_db)


def snr_db(rss_dbm_value, noise_floor_dbm):
    return np.asarray(rss_dbm_value) - noise_floor_dbm


def phy_rate_mbps(snr_db_value: float, table: RateTable = DEFAULT_RATE_TABLE) -> float:
    """Rate of the highest table step whose threshold is met; 0 below all."""
    rate = 0.0
    for min_snr, step_rate in table.steps:
        if snr_db_value >= min_snr:
            rate = step_rate
        else:
            break
    return rate


def phy_rate_many(snr_db_values: np.ndarray, table: RateTable = DEFAULT_RATE_TABLE) -> np.ndarray:
    """Vectorized phy_rate_mbps; NaN SNR maps to rate 0."""
    thresholds = np.array([s for s, _ in table.steps])
    rates = np.concatenate(([0.0], [r for _, r in table.steps]))
    snr = np.nan_to_num(np.asarray(snr_db_values, dtype=float), nan=-np.inf)
    idx = np.searchsorted(thresholds, snr, side="right")
    return rates[idx]


def estimate_distance_m(rss_dbm_value, p: RadioParams):
    """Invert the path-loss law at zero shadowing and zero wall loss."""
    exponent = (10.0 * np.log10(p.tx_power_mw) - np.asarray(rss_dbm_value)) \
        / (10.0 * p.path_loss_exponent)
    return 10.0 ** exponent
