"""Closed-form aggregate-throughput bounds with and without transfers.

Structure of every bound: each service pool contributes
``min(demand placed on it, capacity it can carry)``. Demands are the random
attached-user counts (binomial mixtures of the two drop layers); capacities
price RBs at the demand-quantized effective rate (demand divided by the
expected whole-RB need of a user, so integer grants are respected). All
``min`` terms are taken inside the expectation over the attached-count
distributions, which removes the optimism of min-of-means at mid load.

Without transfers, each SC is its own pool and overflow may fall back to the
macro's spare. With transfers, the SC tier acts as one pooled band, and the
macro's spare additionally feeds the tier through donations, multiplied by
the expected spatial-reuse factor.

A literal min-of-means variant of both bounds (raw rates, scalar loads) is
reported alongside for reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as sstats

from hetsim.analysis.mcs import LayerStats, layer_statistics, rate_summary
from hetsim.analysis.qgroups import expected_reuse_multiplier, overlap_probability
from hetsim.radio import ChannelModel, McsTable
from hetsim.scenario import MACRO_INDEX, ScenarioConfig, generate_deployment, user_counts


@dataclass(frozen=True)
class AnalysisConfig:
    """Ensemble controls for the analytical engine."""

    geometries: int = 32
    spatial_points: int = 1024
    seed: int = 777
    method: str = "quadrature"     # "quadrature" | "pairwise"
    representative_sc: bool = True  # SC layers are exchangeable; evaluate one


@dataclass(frozen=True)
class GeometryRates:
    """Scalar attachment/rate figures extracted from one deployment."""

    a_home_sc: float       # SC-layer user attaches its home SC
    a_macro_sc: float      # SC-layer user attaches the macro
    a_other_sc: float      # SC-layer user attaches another SC
    a_macro_layer: float   # macro-layer user attaches the macro
    e_need_sc: float       # E[RB need] for SC-tier service
    e_need_macro: float    # E[RB need] for macro-attached service
    e_need_fb: float       # E[RB need] for SC-attached users served by the macro
    raw_sc_bps: float
    raw_macro_bps: float
    raw_fb_bps: float


@dataclass
class ThroughputBound:
    """Bound terms for one offered-load point (all Mbps)."""

    load_mbps: float
    t_r_mbps: float
    t_nr_mbps: float
    macro_mbps: float
    sc_pooled_mbps: float
    feed_mbps: float
    sc_per_bs_mbps: float
    fallback_mbps: float
    t_r_meanform_mbps: float
    t_nr_meanform_mbps: float

    def to_dict(self) -> dict[str, float]:
        return {
            "load_mbps": self.load_mbps,
            "T_R": self.t_r_mbps,
            "T_NR": self.t_nr_mbps,
            "T_macro": self.macro_mbps,
            "T_R_sc": self.sc_pooled_mbps,
            "T_R_feed": self.feed_mbps,
            "T_NR_sc": self.sc_per_bs_mbps,
            "T_NR_fallback": self.fallback_mbps,
            "T_R_meanform": self.t_r_meanform_mbps,
            "T_NR_meanform": self.t_nr_meanform_mbps,
        }


class AnalysisContext:
    """Caches per-geometry layer statistics for one scenario/channel/MCS."""

    def __init__(
        self,
        scenario: ScenarioConfig,
        channel: ChannelModel | None = None,
        mcs: McsTable | None = None,
        config: AnalysisConfig | None = None,
    ):
        from hetsim.radio import default_mcs_table

        scenario.validate()
        self.scenario = scenario
        self.channel = channel if channel is not None else ChannelModel()
        self.mcs = mcs if mcs is not None else default_mcs_table()
        self.config = config if config is not None else AnalysisConfig()
        self.p_overlap = overlap_probability(
            scenario.sc_radius_m, scenario.sc_radius_m, scenario.cluster_radius_m
        )
        self.geometry_rates: list[GeometryRates] = []
        self._build()

    def _build(self) -> None:
        cfg = self.config
        for g in range(cfg.geometries):
            rng = np.random.default_rng(
                np.random.SeedSequence(cfg.seed, spawn_key=(g,))
            )
            dep = generate_deployment(self.scenario, 0, rng)
            macro_stats = layer_statistics(
                dep, self.channel, self.mcs, MACRO_INDEX,
                n_points=cfg.spatial_points, method=cfg.method,
            )
            if cfg.representative_sc:
                sc_layers = [1]
            else:
                sc_layers = list(range(1, self.scenario.n_small_cells + 1))
            sc_stats = [
                layer_statistics(
                    dep, self.channel, self.mcs, layer,
                    n_points=cfg.spatial_points, method=cfg.method,
                )
                for layer in sc_layers
            ]
            self.geometry_rates.append(
                self._extract(macro_stats, sc_stats)
            )

    def _extract(
        self, macro_stats: LayerStats, sc_stats: list[LayerStats]
    ) -> GeometryRates:
        d = self.scenario.demand_bps
        mcs = self.mcs

        def avg(vals: Sequence[float]) -> float:
            return float(np.mean(vals))

        home = [rate_summary(s.pmf_home, s.outage_home, mcs, d) for s in sc_stats]
        fb = [
            rate_summary(s.pmf_fallback, s.outage_fallback, mcs, d)
            for s in sc_stats
        ]
        macro = rate_summary(macro_stats.pmf_home, macro_stats.outage_home, mcs, d)
        e_need_sc = avg([h.e_need_rb for h in home])
        # Best-SNR attachment makes the serving link at least as good as the
        # macro link, so the fallback need can never be smaller.
        e_need_fb = max(avg([f.e_need_rb for f in fb]), e_need_sc)
        return GeometryRates(
            a_home_sc=avg([s.p_attach_home for s in sc_stats]),
            a_macro_sc=avg([s.p_attach_macro for s in sc_stats]),
            a_other_sc=avg([s.p_attach_other for s in sc_stats]),
            a_macro_layer=macro_stats.p_attach_home,
            e_need_sc=e_need_sc,
            e_need_macro=macro.e_need_rb,
            e_need_fb=e_need_fb,
            raw_sc_bps=avg([h.raw_bps for h in home]),
            raw_macro_bps=macro.raw_bps,
            raw_fb_bps=avg([f.raw_bps for f in fb]),
        )


# ----------------------------------------------------------- pmf arithmetic

def _binom_pmf(n: int, p: float) -> np.ndarray:
    if n == 0:
        return np.array([1.0])
    p = min(max(p, 0.0), 1.0)
    return sstats.binom.pmf(np.arange(n + 1), n, p)


def _convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.convolve(a, b)


def _e_min_const(pmf: np.ndarray, cap: float) -> float:
    """E[min(A, cap)] for integer-valued A and a real capacity."""
    k = np.arange(len(pmf))
    return float((pmf * np.minimum(k, cap)).sum())


def _integerize(values: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Project a real-valued pmf onto the integer grid, preserving the mean.

    Each atom v splits between floor(v) and floor(v)+1 with linear weights.
    """
    top = int(math.ceil(values.max())) if len(values) else 0
    out = np.zeros(top + 2)
    lo = np.floor(values).astype(int)
    frac = values - lo
    np.add.at(out, lo, probs * (1.0 - frac))
    np.add.at(out, lo + 1, probs * frac)
    return out


def _overflow_pmf(pmf: np.ndarray, cap: float) -> np.ndarray:
    """Integer pmf of (A - cap)^+ for integer A and real cap."""
    k = np.arange(len(pmf))
    values = np.maximum(0.0, k - cap)
    return _integerize(values, pmf)


def _transform_pmf(pmf: np.ndarray, fn) -> np.ndarray:
    """Integer pmf of fn(A) >= 0 for integer A."""
    k = np.arange(len(pmf))
    values = np.maximum(0.0, fn(k.astype(float)))
    return _integerize(values, pmf)


def _e_min_indep(pmf_a: np.ndarray, pmf_b: np.ndarray) -> float:
    """E[min(A, B)] for independent non-negative integer RVs."""
    n = max(len(pmf_a), len(pmf_b))
    a = np.zeros(n)
    a[: len(pmf_a)] = pmf_a
    b = np.zeros(n)
    b[: len(pmf_b)] = pmf_b
    surv_a = 1.0 - np.cumsum(a)
    surv_b = 1.0 - np.cumsum(b)
    return float(np.sum(np.clip(surv_a, 0, 1) * np.clip(surv_b, 0, 1)))


# ----------------------------------------------------------------- bounds

def _bound_for_geometry(
    rates: GeometryRates,
    scenario: ScenarioConfig,
    load_mbps: float,
    p_overlap: float,
) -> dict[str, float]:
    d = scenario.demand_bps
    n_users = int(round(load_mbps * 1e6 / d))
    n_sc_u, n_m_u = user_counts(n_users, scenario.sc_user_fraction)
    n_cells = scenario.n_small_cells
    rb_tier = scenario.rb_per_tier

    p_stay = rates.a_home_sc + rates.a_other_sc
    p_leak_in = max(0.0, 1.0 - rates.a_macro_layer)

    # Attached-count distributions.
    pmf_a0 = _convolve(
        _binom_pmf(n_m_u, rates.a_macro_layer), _binom_pmf(n_sc_u, rates.a_macro_sc)
    )
    pmf_ai = _convolve(
        _binom_pmf(n_sc_u, p_stay / n_cells),
        _binom_pmf(n_m_u, p_leak_in / n_cells),
    )
    pmf_tier = _binom_pmf(1, 0.0)   # delta at zero
    for _ in range(n_cells):
        pmf_tier = _convolve(pmf_tier, pmf_ai)

    cap_sc_users = (rb_tier / n_cells) / rates.e_need_sc
    cap_tier_users = rb_tier / rates.e_need_sc
    cap_macro_users = rb_tier / rates.e_need_macro

    macro_term = _e_min_const(pmf_a0, cap_macro_users)

    # --- without transfers: per-SC pools plus macro-spare fallback
    sc_per_bs = n_cells * _e_min_const(pmf_ai, cap_sc_users)
    pmf_over_one = _overflow_pmf(pmf_ai, cap_sc_users)
    pmf_over = np.array([1.0])
    for _ in range(n_cells):
        pmf_over = _convolve(pmf_over, pmf_over_one)
    spare_fb = _transform_pmf(
        pmf_a0,
        lambda a: (rb_tier - a * rates.e_need_macro) / rates.e_need_fb,
    )
    fallback_term = _e_min_indep(pmf_over, spare_fb)
    t_nr_users = macro_term + sc_per_bs + fallback_term

    # --- with transfers: pooled tier plus reuse-amplified macro feed
    sc_pooled = _e_min_const(pmf_tier, cap_tier_users)
    pmf_deficit = _overflow_pmf(pmf_tier, cap_tier_users)
    mult = expected_reuse_multiplier(n_cells, p_overlap)
    supply = _transform_pmf(
        pmf_a0,
        lambda a: (rb_tier - a * rates.e_need_macro) * mult / rates.e_need_sc,
    )
    feed_term = _e_min_indep(pmf_deficit, supply)
    t_r_users = macro_term + sc_pooled + feed_term

    # --- literal min-of-means reference forms (raw rates, scalar loads)
    mean_a0 = float(np.dot(np.arange(len(pmf_a0)), pmf_a0))
    x0_d = mean_a0 * d
    r0_cap = rates.raw_macro_bps * rb_tier
    macro_mean = min(x0_d, r0_cap)
    mean_tier = n_users - mean_a0
    spare_mean = max(0.0, rb_tier - x0_d / rates.raw_macro_bps if rates.raw_macro_bps > 0 else 0.0)
    t_r_meanform = macro_mean + min(
        mean_tier * d,
        rb_tier * rates.raw_sc_bps + spare_mean * mult * rates.raw_sc_bps,
    )
    mean_ai = float(np.dot(np.arange(len(pmf_ai)), pmf_ai))
    per_sc_mean = n_cells * min(mean_ai * d, (rb_tier / n_cells) * rates.raw_sc_bps)
    overflow_mean = max(0.0, mean_tier - n_cells * min(mean_ai, (rb_tier / n_cells) * rates.raw_sc_bps / d))
    t_nr_meanform = macro_mean + per_sc_mean + min(
        overflow_mean * d, spare_mean * rates.raw_fb_bps
    )

    to_mbps = d / 1e6
    return {
        "t_r": t_r_users * to_mbps,
        "t_nr": t_nr_users * to_mbps,
        "macro": macro_term * to_mbps,
        "sc_pooled": sc_pooled * to_mbps,
        "feed": feed_term * to_mbps,
        "sc_per_bs": sc_per_bs * to_mbps,
        "fallback": fallback_term * to_mbps,
        "t_r_meanform": t_r_meanform / 1e6,
        "t_nr_meanform": t_nr_meanform / 1e6,
    }


def throughput_bounds(
    ctx: AnalysisContext, loads_mbps: Sequence[float]
) -> list[ThroughputBound]:
    """Geometry-averaged bound terms for each offered-load point."""
    out: list[ThroughputBound] = []
    for load in loads_mbps:
        rows = [
            _bound_for_geometry(r, ctx.scenario, load, ctx.p_overlap)
            for r in ctx.geometry_rates
        ]
        mean = {k: float(np.mean([row[k] for row in rows])) for k in rows[0]}
        out.append(
            ThroughputBound(
                load_mbps=float(load),
                t_r_mbps=mean["t_r"],
                t_nr_mbps=mean["t_nr"],
                macro_mbps=mean["macro"],
                sc_pooled_mbps=mean["sc_pooled"],
                feed_mbps=mean["feed"],
                sc_per_bs_mbps=mean["sc_per_bs"],
                fallback_mbps=mean["fallback"],
                t_r_meanform_mbps=mean["t_r_meanform"],
                t_nr_meanform_mbps=mean["t_nr_meanform"],
            )
        )
    return out
