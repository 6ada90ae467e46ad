"""Monte-Carlo campaign: repeated deployments, admissions, transfers, metrics.

Each iteration draws a fresh deployment and shadowing, attaches every user to
its best-SNR station, and replays admissions in a random order. An SC
admission failure triggers one transfer request (when enabled); a user still
unserved falls back to direct eNB admission. Users are all-or-nothing: a
served user scores its full demand, a blocked user zero.

Determinism: every iteration's RNG derives from
``SeedSequence(seed, spawn_key=(round(load_mbps * 1000), iteration))`` so the
same (seed, load, iteration) triple yields the same deployment regardless of
scheme, transfer flag, or sweep composition. Scheme comparisons are therefore
exactly paired.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from multiprocessing import get_context
from typing import Any

import numpy as np

from hetsim.radio import (
    ChannelModel,
    McsTable,
    RB_UNSERVABLE,
    default_mcs_table,
    draw_shadowing,
    snr_matrix,
)
from hetsim.renev import RenevEngine
from hetsim.scenario import MACRO_INDEX, Deployment, ScenarioConfig, generate_deployment
from hetsim.signaling import MessageLog, expected_message_count
from hetsim.slicing import SliceScheme, parse_scheme

DEFAULT_SWEEP_MBPS = tuple(float(x) for x in range(18, 97, 6))


@dataclass(frozen=True)
class RunConfig:
    """Campaign controls: sweep, repetition, scheme, transfer flag."""

    iterations: int = 1000
    seed: int = 12345
    offered_load_mbps: tuple[float, ...] = DEFAULT_SWEEP_MBPS
    scheme: str = "prr:1.0"
    renev_enabled: bool = True
    donor_floor: int = 0
    jobs: int = 1
    message_trace_iterations: int = 1   # per point, kept for CSV export

    def validate(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if not self.offered_load_mbps:
            raise ValueError("offered_load_mbps must not be empty")
        if any(l <= 0 for l in self.offered_load_mbps):
            raise ValueError("offered loads must be positive")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if self.message_trace_iterations < 0:
            raise ValueError("message_trace_iterations must be non-negative")
        parse_scheme(self.scheme, 2)   # format check; real slice count applied later


@dataclass(frozen=True)
class IterationResult:
    """Counters from one simulated iteration."""

    n_users: int
    served: int
    served_macro: int        # users served by the eNB that attached to it
    served_sc: int           # users served by their SC (loans included)
    served_fallback: int     # SC-attached users served by eNB fallback
    blocked: int
    n_requests: int
    n_enb_polls: int
    n_successes: int
    n_enb_donations: int
    n_messages: int
    sc_lent_ids: int
    enb_lent_ids: int
    enb_granted_loans: int
    state_snapshot: tuple[int, ...]   # (r_1..r_N, r_0) before any admission


@dataclass
class PointSummary:
    """Aggregates for one offered-load sweep point."""

    load_mbps: float
    n_users: int
    iterations: int
    throughput_mbps: float
    throughput_ci95_mbps: float
    macro_mbps: float
    sc_mbps: float
    fallback_mbps: float
    served_mean: float
    blocked_mean: float
    requests_mean: float
    enb_polls_mean: float
    successes_mean: float
    enb_donations_mean: float
    success_rate: float               # ratio of sums; nan with no requests
    messages_mean: float
    msgs_per_sc: float
    sc_lent_mean: float
    sc_lent_pct: float                # % of the SC tier band on SC->SC loan
    enb_lent_unique_mean: float
    enb_lent_unique_pct: float        # % of macro band lent (ids counted once)
    enb_loans_mean: float
    enb_loans_pct: float              # % including spatial reuse multiplicity
    served_fraction: float
    served_by_iteration: tuple[int, ...] = field(repr=False, default=())
    state_snapshots: tuple[tuple[int, ...], ...] = field(repr=False, default=())

    def metric_row(self) -> dict[str, Any]:
        row = {
            "load_mbps": self.load_mbps,
            "n_users": self.n_users,
            "iterations": self.iterations,
            "throughput_mbps": self.throughput_mbps,
            "throughput_ci95_mbps": self.throughput_ci95_mbps,
            "macro_mbps": self.macro_mbps,
            "sc_mbps": self.sc_mbps,
            "fallback_mbps": self.fallback_mbps,
            "served_mean": self.served_mean,
            "blocked_mean": self.blocked_mean,
            "requests_mean": self.requests_mean,
            "enb_polls_mean": self.enb_polls_mean,
            "successes_mean": self.successes_mean,
            "enb_donations_mean": self.enb_donations_mean,
            "success_rate": self.success_rate,
            "messages_mean": self.messages_mean,
            "msgs_per_sc": self.msgs_per_sc,
            "sc_lent_mean": self.sc_lent_mean,
            "sc_lent_pct": self.sc_lent_pct,
            "enb_lent_unique_mean": self.enb_lent_unique_mean,
            "enb_lent_unique_pct": self.enb_lent_unique_pct,
            "enb_loans_mean": self.enb_loans_mean,
            "enb_loans_pct": self.enb_loans_pct,
            "served_fraction": self.served_fraction,
        }
        return row


@dataclass
class CampaignResult:
    """All sweep points of one campaign plus the message trace sample."""

    scenario: ScenarioConfig
    run: RunConfig
    scheme: SliceScheme
    points: list[PointSummary]
    message_rows: list[tuple[float, int, int, str, int, int]]
    # (load_mbps, iteration, seq, kind, src, dst)

    def point(self, load_mbps: float) -> PointSummary:
        for p in self.points:
            if abs(p.load_mbps - load_mbps) < 1e-9:
                return p
        raise KeyError(f"no sweep point at {load_mbps} Mbps")


def users_for_load(load_mbps: float, demand_bps: float) -> int:
    """Offered load is carried by n users of fixed demand; n rounded."""
    return int(round(load_mbps * 1e6 / demand_bps))


def iteration_seed(seed: int, load_mbps: float, iteration: int) -> np.random.SeedSequence:
    point_key = int(round(load_mbps * 1000.0))
    return np.random.SeedSequence(seed, spawn_key=(point_key, iteration))


def pre_admission_state(
    deployment: Deployment, serving: np.ndarray, need: np.ndarray
) -> tuple[int, ...]:
    """Availability r_b = own RBs minus attached demand, SCs first then eNB.

    Unservable (outage) links contribute no load. Values go negative when
    attached demand exceeds the RB budget.
    """
    n_bs = len(deployment.stations)
    load = np.zeros(n_bs, dtype=np.int64)
    for u, b in enumerate(serving):
        need_ub = need[u, b]
        if need_ub < RB_UNSERVABLE:
            load[b] += need_ub
    r = np.array([st.rb_count for st in deployment.stations], dtype=np.int64) - load
    order = list(range(1, n_bs)) + [MACRO_INDEX]
    return tuple(int(r[b]) for b in order)


def run_iteration(
    scenario: ScenarioConfig,
    channel: ChannelModel,
    mcs: McsTable,
    scheme: SliceScheme,
    run: RunConfig,
    n_users: int,
    seed: np.random.SeedSequence,
    message_log: MessageLog | None = None,
) -> IterationResult:
    """Simulate one deployment snapshot and return its counters."""
    rng = np.random.default_rng(seed)
    dep = generate_deployment(scenario, n_users, rng)
    n_sc = scenario.n_small_cells

    if n_users == 0:
        return IterationResult(
            n_users=0, served=0, served_macro=0, served_sc=0, served_fallback=0,
            blocked=0, n_requests=0, n_enb_polls=0, n_successes=0,
            n_enb_donations=0, n_messages=0, sc_lent_ids=0, enb_lent_ids=0,
            enb_granted_loans=0,
            state_snapshot=tuple(
                [st.rb_count for st in dep.stations[1:]] + [dep.stations[0].rb_count]
            ),
        )

    shadow = draw_shadowing(channel, dep, rng)
    snr = snr_matrix(channel, dep, shadow)
    mcs_idx = mcs.select(snr)
    need = mcs.rb_demand(scenario.demand_bps, mcs_idx)
    serving = snr.argmax(axis=1)
    snapshot = pre_admission_state(dep, serving, need)

    log = message_log if message_log is not None else MessageLog()
    engine = RenevEngine(
        dep, scheme, donor_floor=run.donor_floor, message_log=log
    )

    order = rng.permutation(n_users)
    served_macro = served_sc = served_fallback = blocked = 0
    for u in order:
        b = int(serving[u])
        slice_id = int(dep.user_slice[u])
        need_b = int(need[u, b])
        if need_b >= RB_UNSERVABLE:
            blocked += 1               # outage at the best station: outage everywhere
            continue
        if b == MACRO_INDEX:
            if engine.admit_user(MACRO_INDEX, slice_id, need_b):
                served_macro += 1
            else:
                blocked += 1
            continue
        ok = engine.admit_user(b, slice_id, need_b)
        if not ok and run.renev_enabled:
            deficit = need_b - engine.grantable(b, slice_id)
            if engine.request(b, slice_id, deficit):
                ok = engine.admit_user(b, slice_id, need_b)
                if not ok:
                    raise RuntimeError("post-transfer retry must succeed")
        if ok:
            served_sc += 1
            continue
        need_0 = int(need[u, MACRO_INDEX])
        if need_0 < RB_UNSERVABLE and engine.admit_user(
            MACRO_INDEX, slice_id, need_0
        ):
            served_fallback += 1
        else:
            blocked += 1

    stats = engine.donation_stats()
    n_messages = len(log)
    expected = expected_message_count(
        n_sc, engine.n_requests, engine.n_enb_polls, engine.n_successes
    )
    if n_messages != expected:
        raise RuntimeError(
            f"message log {n_messages} != closed form {expected}"
        )
    engine.revert_all()

    served = served_macro + served_sc + served_fallback
    assert served + blocked == n_users
    return IterationResult(
        n_users=n_users,
        served=served,
        served_macro=served_macro,
        served_sc=served_sc,
        served_fallback=served_fallback,
        blocked=blocked,
        n_requests=engine.n_requests,
        n_enb_polls=engine.n_enb_polls,
        n_successes=engine.n_successes,
        n_enb_donations=engine.n_enb_donations,
        n_messages=n_messages,
        sc_lent_ids=stats["sc_lent_ids"],
        enb_lent_ids=stats["enb_lent_ids"],
        enb_granted_loans=stats["enb_granted_loans"],
        state_snapshot=snapshot,
    )


def _summarize_point(
    load_mbps: float,
    n_users: int,
    results: list[IterationResult],
    scenario: ScenarioConfig,
) -> PointSummary:
    iters = len(results)
    d_mbps = scenario.demand_bps / 1e6
    served = np.array([r.served for r in results], dtype=float)
    thr = served * d_mbps
    mean_thr = float(thr.mean())
    ci95 = float(1.96 * thr.std(ddof=1) / math.sqrt(iters)) if iters > 1 else 0.0
    total_requests = sum(r.n_requests for r in results)
    total_successes = sum(r.n_successes for r in results)
    success_rate = (
        total_successes / total_requests if total_requests > 0 else float("nan")
    )
    rb_tier = scenario.rb_per_tier
    mean = lambda attr: float(np.mean([getattr(r, attr) for r in results]))
    return PointSummary(
        load_mbps=load_mbps,
        n_users=n_users,
        iterations=iters,
        throughput_mbps=mean_thr,
        throughput_ci95_mbps=ci95,
        macro_mbps=mean("served_macro") * d_mbps,
        sc_mbps=mean("served_sc") * d_mbps,
        fallback_mbps=mean("served_fallback") * d_mbps,
        served_mean=mean("served"),
        blocked_mean=mean("blocked"),
        requests_mean=mean("n_requests"),
        enb_polls_mean=mean("n_enb_polls"),
        successes_mean=mean("n_successes"),
        enb_donations_mean=mean("n_enb_donations"),
        success_rate=success_rate,
        messages_mean=mean("n_messages"),
        msgs_per_sc=mean("n_messages") / scenario.n_small_cells,
        sc_lent_mean=mean("sc_lent_ids"),
        sc_lent_pct=100.0 * mean("sc_lent_ids") / rb_tier,
        enb_lent_unique_mean=mean("enb_lent_ids"),
        enb_lent_unique_pct=100.0 * mean("enb_lent_ids") / rb_tier,
        enb_loans_mean=mean("enb_granted_loans"),
        enb_loans_pct=100.0 * mean("enb_granted_loans") / rb_tier,
        served_fraction=float(served.sum() / (n_users * iters)) if n_users else 1.0,
        served_by_iteration=tuple(int(s) for s in served),
        state_snapshots=tuple(r.state_snapshot for r in results),
    )


def _run_point(args: tuple) -> tuple[PointSummary, list[tuple]]:
    (scenario, channel, mcs, scheme, run, load_mbps) = args
    n_users = users_for_load(load_mbps, scenario.demand_bps)
    results: list[IterationResult] = []
    message_rows: list[tuple] = []
    for it in range(run.iterations):
        seed = iteration_seed(run.seed, load_mbps, it)
        keep_msgs = it < run.message_trace_iterations
        log = MessageLog() if keep_msgs else None
        res = run_iteration(
            scenario, channel, mcs, scheme, run, n_users, seed, message_log=log
        )
        results.append(res)
        if keep_msgs and log is not None:
            for seq, kind, src, dst in log.rows():
                message_rows.append((load_mbps, it, seq, kind, src, dst))
    return _summarize_point(load_mbps, n_users, results, scenario), message_rows


def run_campaign(
    scenario: ScenarioConfig,
    run: RunConfig,
    channel: ChannelModel | None = None,
    mcs: McsTable | None = None,
    shares: list[float] | None = None,
) -> CampaignResult:
    """Run the full offered-load sweep and aggregate per-point summaries."""
    scenario.validate()
    run.validate()
    channel = channel if channel is not None else ChannelModel()
    mcs = mcs if mcs is not None else default_mcs_table()
    scheme = parse_scheme(run.scheme, scenario.slice_count, shares)

    tasks = [
        (scenario, channel, mcs, scheme, run, load)
        for load in run.offered_load_mbps
    ]
    if run.jobs > 1 and len(tasks) > 1:
        with get_context("fork").Pool(min(run.jobs, len(tasks))) as pool:
            outcomes = pool.map(_run_point, tasks)
    else:
        outcomes = [_run_point(t) for t in tasks]

    points = [p for p, _ in outcomes]
    message_rows: list[tuple] = []
    for _, rows in outcomes:
        message_rows.extend(rows)
    return CampaignResult(
        scenario=scenario,
        run=run,
        scheme=scheme,
        points=points,
        message_rows=message_rows,
    )
