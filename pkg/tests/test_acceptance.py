"""Acceptance gate: every headline figure and property suite, one line each.

Each test prints a single PASS/FAIL line with the measured value and the
target band, then asserts. Campaign fixtures run the full Table-1-style
sweep (1000 iterations per load point), so this module takes a few minutes.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from hetsim.analysis import oracles
from hetsim.analysis.mcs import layer_statistics
from hetsim.analysis.qgroups import enb_share_equal, enb_share_equal_direct, p_q_groups
from hetsim.analysis.states import feasible_finals
from hetsim.analysis.throughput import (
    AnalysisConfig,
    AnalysisContext,
    throughput_bounds,
)
from hetsim.montecarlo import (
    RunConfig,
    iteration_seed,
    run_campaign,
    run_iteration,
    users_for_load,
)
from hetsim.radio import ChannelModel, default_mcs_table
from hetsim.renev import LedgerError, RenevEngine, Role
from hetsim.scenario import (
    BaseStation,
    Deployment,
    ScenarioConfig,
    generate_deployment,
)
from hetsim.slicing import parse_scheme

LOADS = tuple(float(x) for x in range(18, 97, 6))
SEED = 12345

RESULTS: list[str] = []


def _record(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def _sweep_run(renev: bool, scheme: str = "prr:1.0") -> RunConfig:
    return RunConfig(
        iterations=1000,
        seed=SEED,
        offered_load_mbps=LOADS,
        scheme=scheme,
        renev_enabled=renev,
        donor_floor=0,
        jobs=1,
    )


@pytest.fixture(scope="module")
def camp_renev(scenario):
    return run_campaign(scenario, _sweep_run(True))


@pytest.fixture(scope="module")
def camp_plain(scenario):
    return run_campaign(scenario, _sweep_run(False))


@pytest.fixture(scope="module")
def camp_nvs(scenario):
    return run_campaign(scenario, _sweep_run(False, scheme="nvs"))


@pytest.fixture(scope="module")
def camp_n10():
    run = RunConfig(
        iterations=1000,
        seed=SEED,
        offered_load_mbps=(42.0, 66.0, 78.0),
        scheme="prr:1.0",
        renev_enabled=True,
        donor_floor=0,
        jobs=1,
    )
    return run_campaign(ScenarioConfig(n_small_cells=10), run)


@pytest.fixture(scope="module")
def bounds_full(scenario):
    ctx = AnalysisContext(scenario, config=AnalysisConfig())
    return throughput_bounds(ctx, LOADS)


# ------------------------------------------------------------- criterion 1

def test_c1_analytic_simulation_match(camp_renev, camp_plain, bounds_full):
    worst = 0.0
    where = ""
    for bound in bounds_full:
        for tag, camp, ref in (
            ("renev", camp_renev, bound.t_r_mbps),
            ("norenev", camp_plain, bound.t_nr_mbps),
        ):
            sim = camp.point(bound.load_mbps).throughput_mbps
            gap = abs(sim - ref) / ref
            if gap > worst:
                worst, where = gap, f"{tag}@{bound.load_mbps:.0f}"
    _record(
        "C1 analytic-vs-simulated throughput",
        worst <= 0.05,
        f"max relative gap {worst * 100:.2f}% at {where} (limit 5% at every load)",
    )


# ------------------------------------------------------------- criterion 2

def test_c2_saturation_throughput_and_gain(camp_renev, camp_plain):
    thr = camp_renev.point(78.0).throughput_mbps
    base = camp_plain.point(78.0).throughput_mbps
    gain_pp = 100.0 * (thr - base) / base
    ok_thr = abs(thr - 60.93) / 60.93 <= 0.10
    ok_gain = abs(gain_pp - 50.68) <= 10.0
    _record(
        "C2 saturation throughput and gain",
        ok_thr and ok_gain,
        f"78 Mbps transfer throughput {thr:.2f} Mbps (target 60.93 +-10% rel), "
        f"gain {gain_pp:.2f}% (target 50.68 +-10pp)",
    )


# ------------------------------------------------------------- criterion 3

def test_c3_static_slicing_plateau(camp_nvs):
    peak = max(p.throughput_mbps for p in camp_nvs.points)
    _record(
        "C3 static-slicing plateau",
        abs(peak - 23.19) / 23.19 <= 0.10,
        f"max weighted-slicing aggregate {peak:.2f} Mbps (target 23.19 +-10% rel)",
    )


# ------------------------------------------------------------- criterion 4

def _peak(points, attr):
    best = max(points, key=lambda p: getattr(p, attr))
    return best.load_mbps, getattr(best, attr)


def test_c4_transferred_rb_peaks(camp_renev):
    sc_at, sc_val = _peak(camp_renev.points, "sc_lent_pct")
    enb_at, enb_val = _peak(camp_renev.points, "enb_lent_unique_pct")
    step = LOADS[1] - LOADS[0]
    ok_sc = abs(sc_val - 32.2) <= 5.0 and abs(sc_at - 60.0) <= step
    ok_enb = abs(enb_val - 32.64) <= 5.0 and abs(enb_at - 78.0) <= step
    _record(
        "C4 transferred-RB peaks",
        ok_sc and ok_enb,
        f"SC tier peak {sc_val:.2f}% at {sc_at:.0f} Mbps (target 32.2% near 60), "
        f"macro peak {enb_val:.2f}% at {enb_at:.0f} Mbps (target 32.64% near 78); "
        f"+-5pp and +-{step:.0f} Mbps",
    )


# ------------------------------------------------------------- criterion 5

def test_c5_request_success_rates(camp_renev, camp_n10):
    targets = {
        6: {42.0: 86.5, 66.0: 80.0, 78.0: 72.0},
        10: {42.0: 77.0, 66.0: 70.0, 78.0: 61.0},
    }
    details = []
    ok = True
    for n, camp in ((6, camp_renev), (10, camp_n10)):
        for load, want in targets[n].items():
            got = 100.0 * camp.point(load).success_rate
            ok = ok and abs(got - want) <= 8.0
            details.append(f"N={n}@{load:.0f}: {got:.1f}% (want {want}%)")
    _record(
        "C5 request success rates",
        ok,
        "; ".join(details) + " (+-8pp each)",
    )


# ------------------------------------------------------------- criterion 6

def test_c6_messages_per_sc(camp_renev):
    targets = {42.0: 8.5, 66.0: 10.4, 78.0: 12.4}
    details = []
    ok = True
    for load, want in targets.items():
        got = camp_renev.point(load).msgs_per_sc
        ok = ok and abs(got - want) / want <= 0.15
        details.append(f"{load:.0f} Mbps: {got:.2f} (want {want})")
    _record(
        "C6 messages per small cell",
        ok,
        "; ".join(details) + " (+-15% rel each)",
    )


def test_c6_message_count_identity(scenario, channel, mcs):
    """Simulated message totals equal the accounting identity exactly."""
    scheme = parse_scheme("prr:1.0", scenario.slice_count)
    run = _sweep_run(True)
    n = scenario.n_small_cells
    checked = 0
    worst = 0
    for load in (42.0, 66.0, 78.0):
        n_users = users_for_load(load, scenario.demand_bps)
        for it in range(200):
            res = run_iteration(
                scenario,
                channel,
                mcs,
                scheme,
                run,
                n_users,
                iteration_seed(SEED, load, it),
            )
            ident = (
                3 * (n - 1) * res.n_requests
                + 3 * res.n_enb_polls
                + 2 * res.n_successes
            )
            worst = max(worst, abs(res.n_messages - ident))
            checked += 1
    _record(
        "C6 message-count identity",
        worst == 0,
        f"max |simulated - identity| = {worst} over {checked} iterations "
        "(zero tolerance)",
    )


# ------------------------------------------------------------- criterion 7

def _random_deployment(rng):
    n_sc = int(rng.integers(2, 6))
    cfg = ScenarioConfig(
        n_small_cells=n_sc, slice_count=int(rng.integers(1, 3))
    )
    stations = [
        BaseStation(
            0, 0.0, 0.0, cfg.enb_radius_m, 46.0, "macro",
            tuple(range(int(rng.integers(6, 15)))),
        )
    ]
    next_id = cfg.rb_per_tier
    for k in range(1, n_sc + 1):
        count = int(rng.integers(2, 7))
        r = 120.0 * np.sqrt(rng.random())
        th = 2 * np.pi * rng.random()
        stations.append(
            BaseStation(
                k, r * np.cos(th), r * np.sin(th), cfg.sc_radius_m, 17.0,
                "small", tuple(range(next_id, next_id + count)),
            )
        )
        next_id += count
    return cfg, Deployment(cfg, stations, [], (0.0, 0.0))


def test_c7a_conservation_and_isolation():
    rng = np.random.default_rng(987654321)
    n_sequences = 10_000
    for _ in range(n_sequences):
        cfg, dep = _random_deployment(rng)
        scheme = parse_scheme(
            str(rng.choice(["prr:1.0", "prr:0.5", "nvs"])), cfg.slice_count
        )
        eng = RenevEngine(dep, scheme, donor_floor=int(rng.integers(0, 2)))
        initial = eng.conservation_totals()
        for _ in range(int(rng.integers(4, 13))):
            op = rng.random()
            bs = int(rng.integers(1, cfg.n_small_cells + 1))
            sl = int(rng.integers(0, cfg.slice_count))
            if op < 0.55:
                eng.admit_user(bs, sl, int(rng.integers(1, 4)))
            elif op < 0.78:
                eng.request(bs, sl, int(rng.integers(1, 4)))
            elif op < 0.9:
                try:
                    eng.revert_last()
                except LedgerError:
                    pass
            else:
                eng.revert_all()
            eng.verify()
            assert eng.conservation_totals() == initial
        eng.revert_all()
        eng.verify()
        assert eng.conservation_totals() == initial
        assert all(r == Role.IDLE for r in eng.roles)
        assert all(
            led.borrowed_count == 0 and led.lent_count == 0
            for led in eng.ledgers
        )
    _record(
        "C7a ledger conservation and isolation",
        True,
        f"{n_sequences} randomized operation sequences, zero violations",
    )


def test_c7b_state_filter_exhaustive():
    levels = (-2, -1, 0, 1, 2, 3)
    n_cases = 0
    mismatches = 0
    for size in (1, 2, 3):
        for multiset in itertools.combinations_with_replacement(levels, size):
            counts = [0] * len(levels)
            for v in multiset:
                counts[levels.index(v)] += 1
            got = feasible_finals(tuple(counts), levels)
            want = oracles.terminal_states(tuple(counts), levels)
            mismatches += got != want
            n_cases += 1
    _record(
        "C7b transfer-state filter vs exhaustive search",
        mismatches == 0,
        f"{n_cases} state spaces (up to 3 BSs, levels -2..3), "
        f"{mismatches} mismatches (exact equality required)",
    )


def test_c7c_attachment_probabilities_vs_sampling(scenario, channel, mcs):
    dep = generate_deployment(scenario, 0, np.random.default_rng(99))
    rng = np.random.default_rng(424242)
    worst = 0.0
    for layer in (0, 1):
        quad = layer_statistics(dep, channel, mcs, layer, n_points=1024)
        emp = oracles.sample_layer_statistics(dep, channel, mcs, layer, 1_000_000, rng)
        worst = max(
            worst,
            abs(quad.p_attach_home - emp.p_attach_home),
            abs(quad.p_attach_macro - emp.p_attach_macro),
            float(np.max(np.abs(np.asarray(quad.pmf_home) - np.asarray(emp.pmf_home)))),
        )
        if quad.pmf_fallback is not None and emp.pmf_fallback is not None:
            worst = max(
                worst,
                float(
                    np.max(
                        np.abs(
                            np.asarray(quad.pmf_fallback)
                            - np.asarray(emp.pmf_fallback)
                        )
                    )
                ),
            )
    _record(
        "C7c attachment and rate probabilities vs sampling",
        worst <= 1e-2,
        f"max |quadrature - 1e6-sample estimate| = {worst:.5f} (limit 1e-2)",
    )


def test_c7d_reuse_groups_vs_component_oracle(scenario):
    rng = np.random.default_rng(20260821)
    p_o = 0.25
    worst_tv = 0.0
    worst_cell = ""
    n_bad = 0
    cells = 0
    for n in range(2, 7):
        for m in range(2, n + 1):
            sample = oracles.sample_group_counts_centered(
                n, m, scenario.sc_radius_m, scenario.cluster_radius_m, 50_000, rng
            )
            model = p_q_groups(n, m, p_o)
            tv = 0.5 * float(np.abs(np.asarray(sample.pmf) - model).sum())
            cells += 1
            if tv > 2e-2:
                n_bad += 1
            if tv > worst_tv:
                worst_tv, worst_cell = tv, f"(N={n}, M={m})"
    _record(
        "C7d reuse-group distribution vs component oracle",
        n_bad == 0,
        f"{cells} (N, M) cells, {n_bad} above 2e-2 total variation; "
        f"worst {worst_tv:.4f} at {worst_cell}",
    )


def test_c7e_macro_share_closed_form():
    worst = 0.0
    for n in range(1, 21):
        for p_o in (0.0, 0.1, 0.25, 0.5, 0.9, 1.0):
            closed = enb_share_equal(n, 10, p_o)
            direct = enb_share_equal_direct(n, 10, p_o)
            worst = max(worst, abs(closed - direct))
    _record(
        "C7e macro-share closed form vs direct summation",
        worst <= 1e-9,
        f"max |closed - direct| = {worst:.2e} over N<=20 (limit 1e-9)",
    )


# ------------------------------------------------------------- criterion 8

def test_c8_dominance_sweeps():
    n_configs = 50
    sweep = (30.0, 60.0, 90.0)
    bound_viol = 0
    sim_viol = 0
    for k in range(n_configs):
        rng = np.random.default_rng(5000 + k)
        cluster = float(rng.uniform(60.0, 160.0))
        sc = ScenarioConfig(
            cluster_radius_m=cluster,
            sc_radius_m=float(rng.uniform(10.0, min(30.0, cluster / 3))),
            n_small_cells=int(rng.integers(3, 9)),
            demand_bps=float(rng.choice([200e3, 300e3, 500e3])),
            sc_user_fraction=float(rng.uniform(0.4, 0.8)),
        )
        ctx = AnalysisContext(
            sc, config=AnalysisConfig(geometries=2, spatial_points=128, seed=k)
        )
        for b in throughput_bounds(ctx, sweep):
            if b.t_r_mbps < b.t_nr_mbps - 1e-9:
                bound_viol += 1
        base = dict(
            iterations=60,
            seed=9000 + k,
            offered_load_mbps=sweep,
            scheme="prr:1.0",
            donor_floor=0,
            jobs=1,
        )
        with_r = run_campaign(sc, RunConfig(renev_enabled=True, **base))
        without = run_campaign(sc, RunConfig(renev_enabled=False, **base))
        for load in sweep:
            if (
                with_r.point(load).throughput_mbps
                < without.point(load).throughput_mbps - 1e-9
            ):
                sim_viol += 1
    _record(
        "C8 dominance sweeps",
        bound_viol == 0 and sim_viol == 0,
        f"{n_configs} randomized configurations x {len(sweep)} loads: "
        f"{bound_viol} analytic and {sim_viol} matched-seed simulation "
        "violations (zero tolerance)",
    )
