"""Command-line front end.

Subcommands: simulate (Monte-Carlo sweep), analyze (closed-form bounds and
signaling expectations), compare (both, side by side), validate (oracle
cross-checks). Exit codes: 0 success, 2 usage or missing file, 3 config
schema violation, 4 numeric guard tripped, 1 anything else.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path
from typing import Any

import numpy as np

from hetsim.analysis.qgroups import (
    enb_share_equal,
    enb_share_equal_direct,
    overlap_probability,
    p_q_groups,
)
from hetsim.analysis.states import (
    NumericGuardError,
    feasible_finals,
    signaling_expectations,
)
from hetsim.analysis.throughput import AnalysisConfig, AnalysisContext, throughput_bounds
from hetsim.montecarlo import RunConfig, run_campaign
from hetsim.radio import ChannelModel, McsTable, default_mcs_table
from hetsim.scenario import ConfigError, ScenarioConfig
from hetsim import report

EXIT_OK = 0
EXIT_GENERIC = 1
EXIT_USAGE = 2
EXIT_SCHEMA = 3
EXIT_NUMERIC = 4

DEFAULT_CONFIG: dict[str, Any] = {
    "scenario": {},
    "channel": {},
    "mcs": None,
    "slicing": {"scheme": "prr:1.0", "shares": None},
    "renev": {"enabled": True, "donor_floor": 0},
    "run": {
        "iterations": 1000,
        "seed": 12345,
        "offered_load_mbps": [float(x) for x in range(18, 97, 6)],
        "jobs": 1,
        "message_trace_iterations": 1,
    },
    "analysis": {
        "geometries": 32,
        "spatial_points": 1024,
        "seed": 777,
        "method": "quadrature",
        "representative_sc": True,
        "bucket_rb": 8,
        "signaling_load_mbps": 66.0,
        "signaling_iterations": 300,
    },
}


# -------------------------------------------------------------------- config

def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key in out and isinstance(out[key], dict) and isinstance(value, dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _apply_set(config: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = config
    parts = key.split(".")
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"unknown config section {key!r}")
        node = node[part]
    node[parts[-1]] = value


def load_config(path: str | None, overrides: list[str]) -> dict:
    config = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        text = Path(path).read_text()
        user = json.loads(text)
        if not isinstance(user, dict):
            raise ConfigError("config root must be a JSON object")
        known = set(DEFAULT_CONFIG)
        unknown = set(user) - known
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        config = _deep_merge(config, user)
    for assignment in overrides:
        _apply_set(config, assignment)
    return config


def build_objects(config: dict, args: argparse.Namespace):
    scenario = ScenarioConfig.from_dict(config["scenario"])
    channel = ChannelModel.from_dict(config["channel"])
    mcs_cfg = config.get("mcs")
    if mcs_cfg is None:
        mcs = default_mcs_table()
    elif isinstance(mcs_cfg, str):
        mcs = McsTable.from_json(mcs_cfg)
    elif isinstance(mcs_cfg, dict):
        mcs = McsTable.from_dict(mcs_cfg)
    else:
        raise ConfigError("mcs must be null, a path, or an entries object")
    run_cfg = dict(config["run"])
    if getattr(args, "seed", None) is not None:
        run_cfg["seed"] = args.seed
    if getattr(args, "jobs", None) is not None:
        run_cfg["jobs"] = args.jobs
    slicing = config["slicing"]
    renev = config["renev"]
    run = RunConfig(
        iterations=int(run_cfg["iterations"]),
        seed=int(run_cfg["seed"]),
        offered_load_mbps=tuple(float(x) for x in run_cfg["offered_load_mbps"]),
        scheme=str(slicing["scheme"]),
        renev_enabled=bool(renev["enabled"]),
        donor_floor=int(renev["donor_floor"]),
        jobs=int(run_cfg["jobs"]),
        message_trace_iterations=int(run_cfg["message_trace_iterations"]),
    )
    run.validate()
    shares = slicing.get("shares")
    if shares is not None:
        shares = [float(s) for s in shares]
    return scenario, channel, mcs, run, shares


def _analysis_pieces(config: dict) -> tuple[AnalysisConfig, int, float, int]:
    section = dict(config["analysis"])
    bucket_rb = int(section.pop("bucket_rb"))
    sig_load = float(section.pop("signaling_load_mbps"))
    sig_iters = int(section.pop("signaling_iterations"))
    cfg = AnalysisConfig(
        geometries=int(section["geometries"]),
        spatial_points=int(section["spatial_points"]),
        seed=int(section["seed"]),
        method=str(section["method"]),
        representative_sc=bool(section["representative_sc"]),
    )
    extra = set(section) - {
        "geometries", "spatial_points", "seed", "method", "representative_sc",
    }
    if extra:
        raise ConfigError(f"unknown analysis keys: {sorted(extra)}")
    return cfg, bucket_rb, sig_load, sig_iters


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- commands

def cmd_simulate(args: argparse.Namespace) -> int:
    config = load_config(args.config, args.set or [])
    scenario, channel, mcs, run, shares = build_objects(config, args)
    out = _out_dir(args)
    campaign = run_campaign(scenario, run, channel=channel, mcs=mcs, shares=shares)
    written = [
        report.write_metrics_csv(out / "metrics.csv", [campaign]),
        report.write_cdf_csv(out / "cdf.csv", [campaign]),
        report.write_messages_csv(out / "messages.csv", campaign),
    ]
    if not args.no_figures:
        written += [
            report.fig_throughput(out / "fig_throughput.png", [campaign]),
            report.fig_transfers(out / "fig_transfers.png", campaign),
            report.fig_user_rates(out / "fig_user_rates.png", [campaign]),
            report.fig_signaling(out / "fig_signaling.png", campaign),
        ]
    label = report.campaign_label(campaign)
    print(f"campaign {label}: {len(campaign.points)} sweep points")
    for p in campaign.points:
        print(
            f"  load {p.load_mbps:6.1f} Mbps  throughput {p.throughput_mbps:7.3f}"
            f" +- {p.throughput_ci95_mbps:.3f}  served {p.served_fraction:.3f}"
        )
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    config = load_config(args.config, args.set or [])
    scenario, channel, mcs, run, shares = build_objects(config, args)
    acfg, bucket_rb, sig_load, sig_iters = _analysis_pieces(config)
    out = _out_dir(args)
    ctx = AnalysisContext(scenario, channel=channel, mcs=mcs, config=acfg)
    bounds = throughput_bounds(ctx, run.offered_load_mbps)

    sig_run = RunConfig(
        iterations=sig_iters,
        seed=run.seed,
        offered_load_mbps=(sig_load,),
        scheme=run.scheme,
        renev_enabled=True,
        donor_floor=run.donor_floor,
        jobs=run.jobs,
        message_trace_iterations=0,
    )
    sig_campaign = run_campaign(scenario, sig_run, channel=channel, mcs=mcs,
                                shares=shares)
    snapshots = np.array(sig_campaign.points[0].state_snapshots, dtype=float)
    exp = signaling_expectations(
        snapshots, scenario.n_small_cells, ctx.p_overlap, bucket_rb=bucket_rb
    )
    meta = {
        "signaling_load_mbps": sig_load,
        "signaling_iterations": sig_iters,
        "geometries": acfg.geometries,
        "method": acfg.method,
    }
    path = report.write_analysis_json(out / "analysis.json", bounds, exp, meta)
    for b in bounds:
        print(
            f"  load {b.load_mbps:6.1f} Mbps  T_R {b.t_r_mbps:7.3f}"
            f"  T_NR {b.t_nr_mbps:7.3f}"
        )
    print(
        f"signaling at {sig_load} Mbps: E[n_R] {exp.e_n_r:.3f}"
        f"  E[I] {exp.e_messages:.2f}  per-SC {exp.msgs_per_sc:.2f}"
    )
    print(f"wrote {path}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    config = load_config(args.config, args.set or [])
    scenario, channel, mcs, run, shares = build_objects(config, args)
    acfg, _, _, _ = _analysis_pieces(config)
    out = _out_dir(args)

    run_on = run if run.renev_enabled else _with_renev(run, True)
    run_off = _with_renev(run, False)
    camp_on = run_campaign(scenario, run_on, channel=channel, mcs=mcs, shares=shares)
    camp_off = run_campaign(scenario, run_off, channel=channel, mcs=mcs, shares=shares)

    ctx = AnalysisContext(scenario, channel=channel, mcs=mcs, config=acfg)
    bounds = throughput_bounds(ctx, run.offered_load_mbps)
    rows = report.build_compare_rows(camp_on, camp_off, bounds)
    written = [
        report.write_compare_csv(out / "compare.csv", rows),
        report.write_metrics_csv(out / "metrics.csv", [camp_on, camp_off]),
        report.write_cdf_csv(out / "cdf.csv", [camp_on, camp_off]),
    ]
    if not args.no_figures:
        written += [
            report.fig_throughput(out / "fig_throughput.png", [camp_on, camp_off],
                                  bounds),
            report.fig_user_rates(out / "fig_user_rates.png", [camp_on, camp_off]),
            report.fig_transfers(out / "fig_transfers.png", camp_on),
            report.fig_signaling(out / "fig_signaling.png", camp_on),
        ]
    header = (
        f"{'load':>6}  {'sim+renev':>10}  {'sim-renev':>10}"
        f"  {'bound T_R':>10}  {'bound T_NR':>10}"
    )
    print(header)
    for row in rows:
        print(
            f"{row['load_mbps']:6.1f}  {row['sim_renev_mbps']:10.3f}"
            f"  {row['sim_norenev_mbps']:10.3f}  {row['bound_renev_mbps']:10.3f}"
            f"  {row['bound_norenev_mbps']:10.3f}"
        )
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _with_renev(run: RunConfig, enabled: bool) -> RunConfig:
    return RunConfig(
        iterations=run.iterations,
        seed=run.seed,
        offered_load_mbps=run.offered_load_mbps,
        scheme=run.scheme,
        renev_enabled=enabled,
        donor_floor=run.donor_floor,
        jobs=run.jobs,
        message_trace_iterations=run.message_trace_iterations,
    )


def cmd_validate(args: argparse.Namespace) -> int:
    from hetsim.analysis import oracles
    from hetsim.analysis.mcs import layer_statistics
    from hetsim.scenario import generate_deployment

    config = load_config(args.config, args.set or [])
    scenario, channel, mcs, run, shares = build_objects(config, args)
    out = _out_dir(args)
    rng = np.random.default_rng(2024)
    checks: list[tuple[str, bool, str]] = []

    # 1. X2 message-count identity, re-derived from campaign means
    short = RunConfig(
        iterations=60,
        seed=run.seed,
        offered_load_mbps=(42.0, 66.0),
        scheme=run.scheme,
        renev_enabled=True,
        donor_floor=run.donor_floor,
        jobs=1,
        message_trace_iterations=0,
    )
    campaign = run_campaign(scenario, short, channel=channel, mcs=mcs, shares=shares)
    n = scenario.n_small_cells
    worst = 0.0
    for p in campaign.points:
        expected = (
            3.0 * (n - 1) * p.requests_mean
            + 3.0 * p.enb_polls_mean
            + 2.0 * p.successes_mean
        )
        worst = max(worst, abs(expected - p.messages_mean))
    checks.append(
        (
            "x2-message-identity",
            worst < 1e-9,
            f"max |3(N-1)n_R + 3n_R' + 2n_s - I| = {worst:.2e} over "
            f"{short.iterations * len(short.offered_load_mbps)} iterations",
        )
    )

    # 2. overlap probability formula vs center-referenced sampling
    p_form = overlap_probability(
        scenario.sc_radius_m, scenario.sc_radius_m, scenario.cluster_radius_m
    )
    p_emp = oracles.empirical_center_overlap(
        scenario.sc_radius_m, scenario.sc_radius_m, scenario.cluster_radius_m,
        200_000, rng,
    )
    checks.append(
        (
            "overlap-probability",
            abs(p_form - p_emp) < 0.02,
            f"formula {p_form:.4f} vs sampled {p_emp:.4f}",
        )
    )

    # 3. macro-share closed form vs direct binomial sum
    worst = 0.0
    for n_sc in range(2, 13):
        for p_o in (0.0, 0.25, 0.6, 1.0):
            a = enb_share_equal(n_sc, 10, p_o)
            b = enb_share_equal_direct(n_sc, 10, p_o)
            worst = max(worst, abs(a - b))
    checks.append(
        ("macro-share-closed-form", worst < 1e-9, f"max deviation {worst:.2e}")
    )

    # 4. reuse-group recursion vs greedy grouping on sampled geometries
    sample = oracles.sample_group_counts(scenario, 2, 1500, rng)
    model = p_q_groups(scenario.n_small_cells, 2, sample.pairwise_overlap)
    tv = 0.5 * float(np.abs(model - sample.pmf).sum())
    checks.append(
        (
            "reuse-groups-m2",
            tv < 0.05,
            f"total variation {tv:.4f} at empirical overlap "
            f"{sample.pairwise_overlap:.3f}",
        )
    )

    # 5. attachment/MCS quadrature vs direct Monte-Carlo
    dep = generate_deployment(scenario, 0, np.random.default_rng(99))
    quad = layer_statistics(dep, channel, mcs, 1, n_points=1024)
    emp = oracles.sample_layer_statistics(dep, channel, mcs, 1, 200_000, rng)
    d_attach = abs(quad.p_attach_home - emp.p_attach_home)
    d_pmf = float(np.max(np.abs(quad.pmf_home - emp.pmf_home)))
    checks.append(
        (
            "attachment-quadrature",
            d_attach < 0.01 and d_pmf < 0.01,
            f"|dP_attach| = {d_attach:.4f}, max |dpmf| = {d_pmf:.4f}",
        )
    )

    # 6. transfer-state filter vs exhaustive mechanics search
    cases = [
        ((1, 0, 0, 1), (-1, 0, 1, 2)),
        ((1, 1, 0, 0, 1, 1), (-2, -1, 0, 1, 2, 3)),
        ((0, 2, 0, 0, 1), (-2, -1, 0, 1, 2)),
        ((2, 0, 1, 0), (-1, 0, 1, 2)),
    ]
    bad = []
    for counts, levels in cases:
        got = feasible_finals(counts, levels)
        want = oracles.terminal_states(counts, levels)
        if got != want:
            bad.append((counts, levels))
    checks.append(
        (
            "transfer-state-filter",
            not bad,
            f"{len(cases) - len(bad)}/{len(cases)} state spaces match exactly",
        )
    )

    path, all_ok = report.write_validate_txt(out / "validate.txt", checks)
    print(path.read_text(), end="")
    print(f"wrote {path}")
    return EXIT_OK if all_ok else EXIT_GENERIC


# ------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetsim",
        description="Two-tier network simulator with inter-station RB transfers",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument(
        "--set", action="append", metavar="KEY=VALUE",
        help="override a config entry via dotted path (repeatable)",
    )
    common.add_argument("--jobs", type=int, help="worker processes for the sweep")
    common.add_argument("--seed", type=int, help="override the campaign seed")
    common.add_argument(
        "--no-figures", action="store_true", help="skip figure rendering"
    )
    sub.add_parser("simulate", parents=[common],
                   help="run the Monte-Carlo sweep").set_defaults(func=cmd_simulate)
    sub.add_parser("analyze", parents=[common],
                   help="compute analytical bounds").set_defaults(func=cmd_analyze)
    sub.add_parser("compare", parents=[common],
                   help="simulate with and without transfers, next to the bounds"
                   ).set_defaults(func=cmd_compare)
    sub.add_parser("validate", parents=[common],
                   help="run oracle cross-checks").set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except NumericGuardError as exc:
        print(f"numeric guard: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GENERIC


if __name__ == "__main__":
    sys.exit(main())
