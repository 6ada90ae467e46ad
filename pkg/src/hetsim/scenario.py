"""Deployment geometry: one macro eNB, a cluster of small cells, and users.

Conventions
-----------
* Base-station index 0 is the macro eNB; indices 1..N are small cells (SCs).
* All positions are metres in a plane with the eNB at the origin.
* The SC cluster is a disc of radius ``cluster_radius_m`` whose center is drawn
  uniformly so the cluster lies inside macro coverage; SC centers are drawn
  uniformly so each SC disc lies inside the cluster disc.
* Resource-block (RB) identifiers are global integers: the macro band occupies
  ``[0, rb_per_tier)`` and the SC band ``[rb_per_tier, 2 * rb_per_tier)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Any

import numpy as np

MACRO_INDEX = 0

# Tier labels used across the package.
TIER_MACRO = "macro"
TIER_SMALL = "small"


class ConfigError(ValueError):
    """A scenario configuration violates one of its structural constraints."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Geometry, power, resource, and population parameters for one scenario.

    Distances are metres, powers dBm. ``sc_power_dbm`` is per-RB transmit
    power; ``macro_power_dbm`` is the macro per-RB transmit power.
    """

    enb_radius_m: float = 250.0          # macro coverage disc radius (500 m ISD)
    cluster_radius_m: float = 100.0      # SC cluster disc radius
    sc_radius_m: float = 25.0            # small-cell coverage disc radius
    n_small_cells: int = 6
    macro_power_dbm: float = 46.0
    sc_power_dbm: float = 17.0
    rb_per_tier: int = 100               # RBs per tier band (20 MHz of 180 kHz RBs)
    demand_bps: float = 300_000.0        # per-user constant-rate demand
    sc_user_fraction: float = 2.0 / 3.0  # fraction of users dropped on the SC layer
    slice_count: int = 2
    sc_user_placement: str = "per_cell"  # "per_cell" | "union"
    slice_assignment: str = "uniform"    # "uniform" | "macro_split"

    def validate(self) -> None:
        """Raise :class:`ConfigError` naming the first violated constraint."""
        if self.enb_radius_m <= 0:
            raise ConfigError("enb_radius_m must be positive")
        if self.sc_radius_m <= 0:
            raise ConfigError("sc_radius_m must be positive")
        if self.cluster_radius_m <= self.sc_radius_m:
            raise ConfigError(
                "cluster_radius_m must exceed sc_radius_m so SC discs fit the cluster"
            )
        if self.cluster_radius_m > self.enb_radius_m:
            raise ConfigError("cluster_radius_m must not exceed enb_radius_m")
        if self.n_small_cells < 1:
            raise ConfigError("n_small_cells must be at least 1")
        if self.rb_per_tier < 1:
            raise ConfigError("rb_per_tier must be at least 1")
        if self.demand_bps <= 0:
            raise ConfigError("demand_bps must be positive")
        if not 0.0 <= self.sc_user_fraction <= 1.0:
            raise ConfigError("sc_user_fraction must lie in [0, 1]")
        if self.slice_count < 1:
            raise ConfigError("slice_count must be at least 1")
        if self.sc_user_placement not in ("per_cell", "union"):
            raise ConfigError("sc_user_placement must be 'per_cell' or 'union'")
        if self.slice_assignment not in ("uniform", "macro_split"):
            raise ConfigError("slice_assignment must be 'uniform' or 'macro_split'")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown scenario keys: {sorted(extra)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg


@dataclass(frozen=True)
class BaseStation:
    """One base station: geometry, power, and the RB ids it owns at rest."""

    index: int
    x_m: float
    y_m: float
    radius_m: float
    tx_power_dbm: float
    tier: str                    # TIER_MACRO or TIER_SMALL
    rb_ids: tuple[int, ...]      # global RB ids owned before any transfer

    @property
    def rb_count(self) -> int:
        return len(self.rb_ids)

    def distance_to(self, other: "BaseStation") -> float:
        return math.hypot(self.x_m - other.x_m, self.y_m - other.y_m)


@dataclass(frozen=True)
class UserEquipment:
    """One user: position, drop layer, and slice membership."""

    index: int
    x_m: float
    y_m: float
    home_bs: int        # index of the BS whose disc the user was dropped in
    slice_id: int
    demand_bps: float


@dataclass
class Deployment:
    """A realized scenario: stations, users, and derived geometry tables."""

    config: ScenarioConfig
    stations: list[BaseStation]
    users: list[UserEquipment]
    cluster_center: tuple[float, float]
    # Derived arrays, filled in __post_init__.
    bs_xy: np.ndarray = field(init=False)       # (B, 2)
    user_xy: np.ndarray = field(init=False)     # (U, 2)
    user_home: np.ndarray = field(init=False)   # (U,) int
    user_slice: np.ndarray = field(init=False)  # (U,) int
    overlap: np.ndarray = field(init=False)     # (B, B) bool, discs intersect

    def __post_init__(self) -> None:
        self.bs_xy = np.array([[b.x_m, b.y_m] for b in self.stations], dtype=float)
        if self.users:
            self.user_xy = np.array([[u.x_m, u.y_m] for u in self.users], dtype=float)
            self.user_home = np.array([u.home_bs for u in self.users], dtype=np.int64)
            self.user_slice = np.array([u.slice_id for u in self.users], dtype=np.int64)
        else:
            self.user_xy = np.zeros((0, 2))
            self.user_home = np.zeros(0, dtype=np.int64)
            self.user_slice = np.zeros(0, dtype=np.int64)
        radii = np.array([b.radius_m for b in self.stations])
        diff = self.bs_xy[:, None, :] - self.bs_xy[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        self.overlap = dist < (radii[:, None] + radii[None, :])
        np.fill_diagonal(self.overlap, False)

    @property
    def n_small_cells(self) -> int:
        return len(self.stations) - 1

    def small_cells(self) -> list[BaseStation]:
        return self.stations[1:]

    def overlaps(self, i: int, j: int) -> bool:
        """True when the coverage discs of stations i and j intersect (strict)."""
        return bool(self.overlap[i, j])


def split_rb_band(total: int, parts: int) -> list[int]:
    """Split ``total`` RBs into ``parts`` near-equal integers (largest remainder).

    The first ``total % parts`` parts receive the extra RB, so the split is
    deterministic and order-stable.
    """
    if parts < 1:
        raise ValueError("parts must be >= 1")
    base, rem = divmod(total, parts)
    return [base + (1 if i < rem else 0) for i in range(parts)]


def _uniform_in_disc(rng: np.random.Generator, radius: float, n: int) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    theta = 2.0 * math.pi * rng.random(n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def _sample_union_points(
    rng: np.random.Generator, centers: np.ndarray, radius: float, n: int
) -> np.ndarray:
    """Uniform points over the union of equal discs via multiplicity rejection."""
    out = np.zeros((n, 2))
    filled = 0
    while filled < n:
        todo = n - filled
        idx = rng.integers(0, len(centers), todo)
        pts = centers[idx] + _uniform_in_disc(rng, radius, todo)
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        mult = (d2 <= radius * radius).sum(axis=1)
        accept = rng.random(todo) < 1.0 / mult
        kept = pts[accept]
        out[filled : filled + len(kept)] = kept
        filled += len(kept)
    return out


def user_counts(total_users: int, sc_fraction: float) -> tuple[int, int]:
    """(SC-layer count, macro-layer count): SC share rounded up."""
    n_sc = math.ceil(total_users * sc_fraction)
    n_sc = min(n_sc, total_users)
    return n_sc, total_users - n_sc


def generate_deployment(
    config: ScenarioConfig, n_users: int, rng: np.random.Generator
) -> Deployment:
    """Draw one deployment: cluster, SC positions, RB ownership, and users.

    The macro owns the full macro band; the SC band is split near-equally
    across SCs. User drop: ``ceil(n_users * sc_user_fraction)`` users on the
    SC layer (home = drop SC), the rest uniform over the macro disc (home 0).
    """
    config.validate()
    if n_users < 0:
        raise ConfigError("n_users must be non-negative")

    n_sc = config.n_small_cells
    rb = config.rb_per_tier

    center_margin = config.enb_radius_m - config.cluster_radius_m
    cluster_center = _uniform_in_disc(rng, center_margin, 1)[0] if center_margin > 0 else np.zeros(2)

    sc_margin = config.cluster_radius_m - config.sc_radius_m
    sc_centers = cluster_center + _uniform_in_disc(rng, sc_margin, n_sc)

    stations = [
        BaseStation(
            index=MACRO_INDEX,
            x_m=0.0,
            y_m=0.0,
            radius_m=config.enb_radius_m,
            tx_power_dbm=config.macro_power_dbm,
            tier=TIER_MACRO,
            rb_ids=tuple(range(rb)),
        )
    ]
    sc_rb_counts = split_rb_band(rb, n_sc)
    offset = rb
    for i in range(n_sc):
        count = sc_rb_counts[i]
        stations.append(
            BaseStation(
                index=i + 1,
                x_m=float(sc_centers[i, 0]),
                y_m=float(sc_centers[i, 1]),
                radius_m=config.sc_radius_m,
                tx_power_dbm=config.sc_power_dbm,
                tier=TIER_SMALL,
                rb_ids=tuple(range(offset, offset + count)),
            )
        )
        offset += count

    n_sc_users, n_macro_users = user_counts(n_users, config.sc_user_fraction)

    users: list[UserEquipment] = []
    if n_sc_users:
        if config.sc_user_placement == "per_cell":
            homes = rng.integers(1, n_sc + 1, n_sc_users)
            local = _uniform_in_disc(rng, config.sc_radius_m, n_sc_users)
            pts = sc_centers[homes - 1] + local
        else:
            pts = _sample_union_points(rng, sc_centers, config.sc_radius_m, n_sc_users)
            d2 = ((pts[:, None, :] - sc_centers[None, :, :]) ** 2).sum(axis=2)
            homes = d2.argmin(axis=1) + 1
        for k in range(n_sc_users):
            users.append(
                UserEquipment(
                    index=k,
                    x_m=float(pts[k, 0]),
                    y_m=float(pts[k, 1]),
                    home_bs=int(homes[k]),
                    slice_id=0,
                    demand_bps=config.demand_bps,
                )
            )
    if n_macro_users:
        pts = _uniform_in_disc(rng, config.enb_radius_m, n_macro_users)
        for k in range(n_macro_users):
            users.append(
                UserEquipment(
                    index=n_sc_users + k,
                    x_m=float(pts[k, 0]),
                    y_m=float(pts[k, 1]),
                    home_bs=MACRO_INDEX,
                    slice_id=0,
                    demand_bps=config.demand_bps,
                )
            )

    users = _assign_slices(users, config, rng)
    return Deployment(
        config=config,
        stations=stations,
        users=users,
        cluster_center=(float(cluster_center[0]), float(cluster_center[1])),
    )


def _assign_slices(
    users: list[UserEquipment], config: ScenarioConfig, rng: np.random.Generator
) -> list[UserEquipment]:
    if not users:
        return users
    if config.slice_assignment == "uniform":
        sids = rng.integers(0, config.slice_count, len(users))
    else:
        # "macro_split": SC-layer users all on slice 0; macro-layer users spread
        # uniformly over the remaining slices (slice 0 if there is only one).
        sids = np.zeros(len(users), dtype=np.int64)
        macro_mask = np.array([u.home_bs == MACRO_INDEX for u in users])
        if config.slice_count > 1 and macro_mask.any():
            sids[macro_mask] = rng.integers(1, config.slice_count, int(macro_mask.sum()))
    return [
        UserEquipment(
            index=u.index,
            x_m=u.x_m,
            y_m=u.y_m,
            home_bs=u.home_bs,
            slice_id=int(sids[i]),
            demand_bps=u.demand_bps,
        )
        for i, u in enumerate(users)
    ]


def load_scenario_json(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if "scenario" in data:
        data = data["scenario"]
    return ScenarioConfig.from_dict(data)
