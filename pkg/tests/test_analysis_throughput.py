"""Closed-form throughput bounds: ordering, caps, and component sanity."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest

from hetsim.analysis.throughput import (
    AnalysisConfig,
    AnalysisContext,
    ThroughputBound,
    throughput_bounds,
)
from hetsim.scenario import ScenarioConfig

LOADS = (6.0, 18.0, 42.0, 66.0, 96.0)


@pytest.fixture(scope="module")
def ctx(scenario):
    return AnalysisContext(
        scenario, config=AnalysisConfig(geometries=2, spatial_points=256, seed=31)
    )


@pytest.fixture(scope="module")
def bounds(ctx):
    return throughput_bounds(ctx, LOADS)


def test_geometry_cache_size_matches_config(ctx):
    assert len(ctx.geometry_rates) == 2
    for g in ctx.geometry_rates:
        assert 0.0 <= g.a_home_sc <= 1.0
        assert g.e_need_sc >= 1.0
        assert g.raw_sc_bps > 0.0


def test_one_bound_per_load(bounds):
    assert [b.load_mbps for b in bounds] == list(LOADS)


def test_transfer_bound_dominates(bounds):
    for b in bounds:
        assert b.t_r_mbps >= b.t_nr_mbps - 1e-9
        assert b.t_r_meanform_mbps >= b.t_nr_meanform_mbps - 1e-9


def test_offered_load_caps_both_bounds(bounds):
    for b in bounds:
        assert b.t_r_mbps <= b.load_mbps + 1e-9
        assert b.t_nr_mbps <= b.load_mbps + 1e-9


def test_components_finite_and_nonnegative(bounds):
    for b in bounds:
        for f in dataclasses.fields(b):
            v = getattr(b, f.name)
            assert math.isfinite(v), f.name
            assert v >= 0.0, f.name


def test_unsaturated_regime_serves_everything(bounds):
    # At light load every admitted user is served under the default radio
    # parameters, so both bounds sit on the offered-load line.
    for b in bounds[:3]:
        assert b.t_r_mbps == pytest.approx(b.load_mbps, rel=1e-3)
        assert b.t_nr_mbps == pytest.approx(b.load_mbps, rel=1e-3)


def test_to_dict_keys(bounds):
    d = bounds[0].to_dict()
    assert set(d) == {
        "load_mbps",
        "T_R",
        "T_NR",
        "T_macro",
        "T_R_sc",
        "T_R_feed",
        "T_NR_sc",
        "T_NR_fallback",
        "T_R_meanform",
        "T_NR_meanform",
    }
    assert d["T_R"] == bounds[0].t_r_mbps


def test_whole_cluster_average_without_representative_sc(scenario):
    ctx = AnalysisContext(
        scenario,
        config=AnalysisConfig(
            geometries=2, spatial_points=128, seed=5, representative_sc=False
        ),
    )
    for b in throughput_bounds(ctx, (42.0, 90.0)):
        assert math.isfinite(b.t_r_mbps)
        assert b.t_r_mbps >= b.t_nr_mbps - 1e-9


@pytest.mark.parametrize("seed", range(6))
def test_dominance_over_randomized_scenarios(seed):
    rng = np.random.default_rng(seed)
    cluster = float(rng.uniform(60.0, 160.0))
    sc = ScenarioConfig(
        cluster_radius_m=cluster,
        sc_radius_m=float(rng.uniform(10.0, min(30.0, cluster / 3))),
        n_small_cells=int(rng.integers(3, 9)),
        demand_bps=float(rng.choice([200e3, 300e3, 500e3])),
        sc_user_fraction=float(rng.uniform(0.4, 0.8)),
    )
    ctx = AnalysisContext(
        sc, config=AnalysisConfig(geometries=2, spatial_points=128, seed=seed)
    )
    for b in throughput_bounds(ctx, (30.0, 66.0, 90.0)):
        assert b.t_r_mbps >= b.t_nr_mbps - 1e-9
