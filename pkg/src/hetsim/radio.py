"""Link budget: path loss, lognormal shadowing, SNR, and the MCS ladder.

Rates are per resource block (RB): ``bits_per_symbol * code_rate * 168`` kbit/s
(168 data resource elements per RB per ms). MCS selection is threshold-based on
SNR with half-open intervals ``[snr_min, next_snr_min)``; below the lowest
threshold the link is in outage and carries nothing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np

from hetsim.scenario import TIER_SMALL, BaseStation, Deployment

OUTAGE = -1

# RB demand assigned to links in outage: larger than any tier so admission can
# never succeed, small enough that integer arithmetic stays safe.
RB_UNSERVABLE = 1 << 30

#: Thermal noise over one 180 kHz RB plus a 9 dB receiver noise figure, dBm.
DEFAULT_NOISE_DBM = -174.0 + 10.0 * math.log10(180e3) + 9.0

_MIN_SNR_DB = -6.7
_MAX_SNR_DB = 17.5


@dataclass(frozen=True)
class McsEntry:
    """One modulation-and-coding rung of the adaptation ladder."""

    name: str
    bits_per_symbol: int
    code_rate: float
    rate_kbps: float     # per-RB rate, authoritative (not re-derived from code_rate)
    snr_min_db: float


def _default_entries() -> tuple[McsEntry, ...]:
    specs = [
        ("QPSK-1/8", 2, 1 / 8, 42.0),
        ("QPSK-1/5", 2, 1 / 5, 67.2),
        ("QPSK-1/4", 2, 1 / 4, 84.0),
        ("QPSK-1/3", 2, 1 / 3, 112.0),
        ("QPSK-1/2", 2, 1 / 2, 168.0),
        ("QPSK-2/3", 2, 2 / 3, 224.0),
        ("QPSK-3/4", 2, 3 / 4, 252.0),
        ("16QAM-1/2", 4, 1 / 2, 336.0),
        ("16QAM-2/3", 4, 2 / 3, 448.0),
        ("16QAM-3/4", 4, 3 / 4, 504.0),
        ("64QAM-2/3", 6, 2 / 3, 672.0),
        ("64QAM-3/4", 6, 3 / 4, 756.0),
        ("64QAM-4/5", 6, 4 / 5, 806.4),
    ]
    step = (_MAX_SNR_DB - _MIN_SNR_DB) / (len(specs) - 1)
    return tuple(
        McsEntry(
            name=name,
            bits_per_symbol=bits,
            code_rate=cr,
            rate_kbps=rate,
            snr_min_db=_MIN_SNR_DB + i * step,
        )
        for i, (name, bits, cr, rate) in enumerate(specs)
    )


class McsTable:
    """Ordered MCS ladder with threshold lookup and RB-demand helpers."""

    def __init__(self, entries: Sequence[McsEntry]):
        if not entries:
            raise ValueError("MCS table must not be empty")
        self.entries: tuple[McsEntry, ...] = tuple(entries)
        self.snr_min_db = np.array([e.snr_min_db for e in self.entries])
        self.rate_kbps = np.array([e.rate_kbps for e in self.entries])
        if not np.all(np.diff(self.snr_min_db) > 0):
            raise ValueError("MCS thresholds must be strictly increasing")
        if not np.all(np.diff(self.rate_kbps) > 0):
            raise ValueError("MCS rates must be strictly increasing")

    def __len__(self) -> int:
        return len(self.entries)

    def select(self, snr_db):
        """Index of the highest MCS whose threshold is met; OUTAGE (-1) below.

        Accepts scalars or arrays; intervals are half-open [min, next_min).
        """
        idx = np.searchsorted(self.snr_min_db, snr_db, side="right") - 1
        if np.isscalar(snr_db):
            return int(idx)
        return idx.astype(np.int64)

    def rate_bps(self, index):
        """Per-RB rate in bit/s for an MCS index; 0 for OUTAGE entries."""
        idx = np.asarray(index)
        rates = np.where(idx >= 0, self.rate_kbps[np.clip(idx, 0, len(self) - 1)], 0.0)
        out = rates * 1e3
        if np.isscalar(index):
            return float(out)
        return out

    def rb_demand(self, demand_bps: float, index) -> np.ndarray | int:
        """RBs needed to carry ``demand_bps`` at an MCS index.

        Outage links get RB_UNSERVABLE so admission arithmetic rejects them.
        """
        idx = np.asarray(index)
        rate = self.rate_kbps[np.clip(idx, 0, len(self) - 1)] * 1e3
        need = np.ceil(demand_bps / rate).astype(np.int64)
        need = np.where(idx >= 0, need, RB_UNSERVABLE)
        if np.isscalar(index):
            return int(need)
        return need

    def to_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"entries": [asdict(e) for e in self.entries]}, fh, indent=2)

    @classmethod
    def from_json(cls, path: str) -> "McsTable":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "McsTable":
        entries = [McsEntry(**e) for e in data["entries"]]
        return cls(entries)


def default_mcs_table() -> McsTable:
    return McsTable(_default_entries())


@dataclass(frozen=True)
class ChannelModel:
    """Distance-based path loss plus lognormal shadowing, per tier.

    Path-loss laws take the distance in km; distances are clamped below at
    ``min_distance_m`` before conversion.
    """

    macro_pl_const_db: float = 140.7
    macro_pl_slope_db: float = 36.7
    sc_pl_const_db: float = 128.1
    sc_pl_slope_db: float = 37.6
    macro_shadow_sigma_db: float = 8.0
    sc_shadow_sigma_db: float = 10.0
    noise_dbm: float = DEFAULT_NOISE_DBM
    min_distance_m: float = 1.0

    def path_loss_db(self, distance_m, small_cell):
        """Path loss for a link; ``small_cell`` selects the tier law.

        Both arguments broadcast; ``small_cell`` is boolean.
        """
        d = np.maximum(np.asarray(distance_m, dtype=float), self.min_distance_m)
        km = d / 1000.0
        log_km = np.log10(km)
        macro = self.macro_pl_const_db + self.macro_pl_slope_db * log_km
        small = self.sc_pl_const_db + self.sc_pl_slope_db * log_km
        out = np.where(small_cell, small, macro)
        if np.isscalar(distance_m) and np.isscalar(small_cell):
            return float(out)
        return out

    def shadow_sigma_db(self, small_cell):
        out = np.where(
            small_cell, self.sc_shadow_sigma_db, self.macro_shadow_sigma_db
        )
        if np.isscalar(small_cell):
            return float(out)
        return out

    def snr_db(self, tx_power_dbm, distance_m, small_cell, shadow_db=0.0):
        """Link SNR: transmit power minus path loss, shadowing, and noise."""
        pl = self.path_loss_db(distance_m, small_cell)
        out = (
            np.asarray(tx_power_dbm, dtype=float)
            - pl
            - np.asarray(shadow_db, dtype=float)
            - self.noise_dbm
        )
        if out.ndim == 0:
            return float(out)
        return out

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelModel":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown channel keys: {sorted(extra)}")
        return cls(**data)


def station_small_mask(stations: Sequence[BaseStation]) -> np.ndarray:
    return np.array([b.tier == TIER_SMALL for b in stations])


def link_distances(deployment: Deployment) -> np.ndarray:
    """(U, B) user-to-station distances in metres."""
    diff = deployment.user_xy[:, None, :] - deployment.bs_xy[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def draw_shadowing(
    channel: ChannelModel, deployment: Deployment, rng: np.random.Generator
) -> np.ndarray:
    """(U, B) lognormal shadowing draws, sigma chosen by the serving tier."""
    small = station_small_mask(deployment.stations)
    sigma = channel.shadow_sigma_db(small)
    n_users = len(deployment.users)
    return rng.standard_normal((n_users, len(deployment.stations))) * sigma[None, :]


def snr_matrix(
    channel: ChannelModel, deployment: Deployment, shadow_db: np.ndarray
) -> np.ndarray:
    """(U, B) SNR matrix for every user-station pair."""
    small = station_small_mask(deployment.stations)
    power = np.array([b.tx_power_dbm for b in deployment.stations])
    dist = link_distances(deployment)
    return channel.snr_db(power[None, :], dist, small[None, :], shadow_db)
