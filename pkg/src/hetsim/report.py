"""Campaign and analysis outputs: delimited files, JSON, and figures.

Float columns are written with a fixed 10-significant-digit format so that
repeated runs with the same seed produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from hetsim.analysis.states import SignalingExpectations
from hetsim.analysis.throughput import ThroughputBound
from hetsim.montecarlo import CampaignResult

_FLOAT_FMT = ".10g"


def _fmt(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        return format(v, _FLOAT_FMT)
    return str(value)


def campaign_label(campaign: CampaignResult) -> str:
    suffix = "renev" if campaign.run.renev_enabled else "norenev"
    return f"{campaign.scheme.label()}+{suffix}"


# ------------------------------------------------------------------- writers

def write_metrics_csv(path: str | Path, campaigns: Sequence[CampaignResult]) -> Path:
    """One row per (campaign, sweep point) with every summary metric."""
    path = Path(path)
    first = campaigns[0].points[0].metric_row()
    header = ["campaign", *first.keys()]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for campaign in campaigns:
            label = campaign_label(campaign)
            for point in campaign.points:
                row = point.metric_row()
                writer.writerow([label, *(_fmt(v) for v in row.values())])
    return path

def write_cdf_csv(path: str | Path, campaigns: Sequence[CampaignResult]) -> Path:
    """Per-user rate CDF at each load.

    Users are either blocked (rate 0) or served at full demand, so the CDF
    has two steps: cumulative mass at rate 0 and at the demand rate.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["campaign", "load_mbps", "rate_bps", "cum_fraction"])
        for campaign in campaigns:
            label = campaign_label(campaign)
            demand = campaign.scenario.demand_bps
            for point in campaign.points:
                blocked = 1.0 - point.served_fraction
                writer.writerow(
                    [label, _fmt(point.load_mbps), _fmt(0.0), _fmt(blocked)]
                )
                writer.writerow(
                    [label, _fmt(point.load_mbps), _fmt(demand), _fmt(1.0)]
                )
    return path

def write_messages_csv(path: str | Path, campaign: CampaignResult) -> Path:
    """Raw X2 message trace for the recorded iterations."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["load_mbps", "iteration", "seq", "kind", "src", "dst"])
        for load, it, seq, kind, src, dst in campaign.message_rows:
            writer.writerow([_fmt(load), it, seq, kind, src, dst])
    return path

def signaling_dict(exp: SignalingExpectations) -> dict[str, Any]:
    return {
        "E_n_R": exp.e_n_r,
        "E_n_s": exp.e_n_s,
        "E_n_R_enb": exp.e_n_r_enb,
        "E_n_s_enb": exp.e_n_s_enb,
        "E_n_s_total": exp.e_n_s_total,
        "P_success": exp.success_prob,
        "E_I": exp.e_messages,
        "msgs_per_sc": exp.msgs_per_sc,
        "n_support_states": exp.n_support_states,
        "bucket_rb": exp.bucket_rb,
    }

def write_analysis_json(
    path: str | Path,
    bounds: Sequence[ThroughputBound],
    signaling: SignalingExpectations | None = None,
    meta: dict[str, Any] | None = None,
) -> Path:
    path = Path(path)
    payload: dict[str, Any] = {
        "points": [b.to_dict() for b in bounds],
        "signaling": signaling_dict(signaling) if signaling is not None else None,
    }
    if meta:
        payload["meta"] = meta
    with path.open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path

def build_compare_rows(
    with_renev: CampaignResult,
    without_renev: CampaignResult,
    bounds: Sequence[ThroughputBound],
) -> list[dict[str, float]]:
    """Simulated throughput next to its analytical bound, with relative gaps.

    Gap is (bound - simulated) / bound; positive means the simulation sits
    below the bound as it should.
    """
    by_load = {round(b.load_mbps, 6): b for b in bounds}
    rows = []
    for p_r, p_nr in zip(with_renev.points, without_renev.points):
        if abs(p_r.load_mbps - p_nr.load_mbps) > 1e-9:
            raise ValueError("campaigns cover different sweep points")
        key = round(p_r.load_mbps, 6)
        if key not in by_load:
            raise ValueError(f"no analytical point at {p_r.load_mbps} Mbps")
        b = by_load[key]
        rows.append(
            {
                "load_mbps": p_r.load_mbps,
                "sim_renev_mbps": p_r.throughput_mbps,
                "sim_norenev_mbps": p_nr.throughput_mbps,
                "bound_renev_mbps": b.t_r_mbps,
                "bound_norenev_mbps": b.t_nr_mbps,
                "gap_renev": (b.t_r_mbps - p_r.throughput_mbps) / b.t_r_mbps
                if b.t_r_mbps
                else math.nan,
                "gap_norenev": (b.t_nr_mbps - p_nr.throughput_mbps) / b.t_nr_mbps
                if b.t_nr_mbps
                else math.nan,
            }
        )
    return rows

def write_compare_csv(path: str | Path, rows: Sequence[dict[str, float]]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(rows[0].keys())
        for row in rows:
            writer.writerow([_fmt(v) for v in row.values()])
    return path

def write_validate_txt(
    path: str | Path, checks: Iterable[tuple[str, bool, str]]
) -> tuple[Path, bool]:
    """One PASS/FAIL line per check; returns overall success."""
    path = Path(path)
    all_ok = True
    lines = []
    for name, ok, detail in checks:
        all_ok &= bool(ok)
        tag = "PASS" if ok else "FAIL"
        lines.append(f"{tag} {name}: {detail}")
    path.write_text("\n".join(lines) + "\n")
    return path, all_ok


# ------------------------------------------------------------------- figures

def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt

def fig_throughput(
    path: str | Path,
    campaigns: Sequence[CampaignResult],
    bounds: Sequence[ThroughputBound] | None = None,
) -> Path:
    """Simulated system throughput with CI bars, analytic bounds dashed."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for campaign in campaigns:
        loads = [p.load_mbps for p in campaign.points]
        thr = [p.throughput_mbps for p in campaign.points]
        ci = [p.throughput_ci95_mbps for p in campaign.points]
        ax.errorbar(
            loads, thr, yerr=ci, marker="o", markersize=3.5, capsize=2.5,
            label=f"sim {campaign_label(campaign)}",
        )
    if bounds:
        loads = [b.load_mbps for b in bounds]
        ax.plot(loads, [b.t_r_mbps for b in bounds], "--", label="bound with transfers")
        ax.plot(
            loads, [b.t_nr_mbps for b in bounds], ":", label="bound without transfers"
        )
    ax.set_xlabel("offered load (Mbps)")
    ax.set_ylabel("system throughput (Mbps)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path

def fig_transfers(path: str | Path, campaign: CampaignResult) -> Path:
    """Share of each tier's RB budget that moved between stations."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    loads = [p.load_mbps for p in campaign.points]
    ax.plot(loads, [p.sc_lent_pct for p in campaign.points], marker="o",
            markersize=3.5, label="small-cell RBs lent (% of tier)")
    ax.plot(loads, [p.enb_lent_unique_pct for p in campaign.points], marker="s",
            markersize=3.5, label="macro RBs lent, unique (% of tier)")
    ax.plot(loads, [p.enb_loans_pct for p in campaign.points], marker="^",
            markersize=3.5, label="macro RB loans incl. reuse (% of tier)")
    ax.set_xlabel("offered load (Mbps)")
    ax.set_ylabel("transferred resources (%)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path

def fig_user_rates(path: str | Path, campaigns: Sequence[CampaignResult]) -> Path:
    """Fraction of users served at their full demanded rate, per load."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for campaign in campaigns:
        loads = [p.load_mbps for p in campaign.points]
        frac = [p.served_fraction for p in campaign.points]
        ax.plot(loads, frac, marker="o", markersize=3.5,
                label=campaign_label(campaign))
    ax.set_xlabel("offered load (Mbps)")
    ax.set_ylabel("fraction of users at full rate")
    ax.set_ylim(0.0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path

def fig_signaling(
    path: str | Path,
    campaign: CampaignResult,
    expectations: SignalingExpectations | None = None,
) -> Path:
    """Mean X2 messages per iteration and per small cell across the sweep."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    loads = [p.load_mbps for p in campaign.points]
    ax.plot(loads, [p.messages_mean for p in campaign.points], marker="o",
            markersize=3.5, label="messages per iteration")
    ax.plot(loads, [p.msgs_per_sc for p in campaign.points], marker="s",
            markersize=3.5, label="messages per small cell")
    if expectations is not None:
        ax.axhline(expectations.e_messages, linestyle="--", alpha=0.7,
                   label="chain-model messages")
        ax.axhline(expectations.msgs_per_sc, linestyle=":", alpha=0.7,
                   label="chain-model per small cell")
    ax.set_xlabel("offered load (Mbps)")
    ax.set_ylabel("X2 messages")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
