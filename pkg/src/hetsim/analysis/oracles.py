"""Sampling and enumeration oracles that cross-check the analytical engines.

Each oracle recomputes a closed-form quantity by brute force on the same
probability space: attachment/MCS statistics by direct simulation of the
shadowing, reuse-group counts by greedy grouping on sampled geometries, and
the transfer feasibility set by exhaustive search over single-donor grants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hetsim.analysis.mcs import LayerStats
from hetsim.radio import ChannelModel, McsTable, station_small_mask
from hetsim.scenario import MACRO_INDEX, Deployment, ScenarioConfig, generate_deployment


# ------------------------------------------------------------ attachment MC

def sample_layer_statistics(
    deployment: Deployment,
    channel: ChannelModel,
    mcs: McsTable,
    layer: int,
    n_samples: int,
    rng: np.random.Generator,
) -> LayerStats:
    """Empirical counterpart of :func:`hetsim.analysis.mcs.layer_statistics`.

    Positions are uniform over the layer's drop disc, shadowing is drawn per
    station, and every sample attaches to its argmax-SNR station.
    """
    station = deployment.stations[layer]
    r = station.radius_m * np.sqrt(rng.random(n_samples))
    theta = 2.0 * np.pi * rng.random(n_samples)
    pts = np.column_stack(
        [station.x_m + r * np.cos(theta), station.y_m + r * np.sin(theta)]
    )
    small = station_small_mask(deployment.stations)
    power = np.array([b.tx_power_dbm for b in deployment.stations])
    sigma = np.asarray(channel.shadow_sigma_db(small), dtype=float)
    diff = pts[:, None, :] - deployment.bs_xy[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    pl = channel.path_loss_db(dist, small[None, :])
    shadow = rng.standard_normal(dist.shape) * sigma[None, :]
    snr = power[None, :] - pl - shadow - channel.noise_dbm
    serving = snr.argmax(axis=1)

    home = layer
    attached = serving == home
    p_home = float(attached.mean())
    p_macro = float((serving == MACRO_INDEX).mean())
    k_count = len(mcs)

    idx_home = mcs.select(snr[attached, home]) if attached.any() else np.array([], int)
    pmf_home = np.zeros(k_count)
    for k in range(k_count):
        pmf_home[k] = float((idx_home == k).sum())
    n_att = max(1, int(attached.sum()))
    pmf_home /= n_att
    outage_home = float((idx_home < 0).sum()) / n_att

    pmf_fb = None
    outage_fb = 0.0
    if home != MACRO_INDEX:
        idx_fb = (
            mcs.select(snr[attached, MACRO_INDEX]) if attached.any() else np.array([], int)
        )
        pmf_fb = np.zeros(k_count)
        for k in range(k_count):
            pmf_fb[k] = float((idx_fb == k).sum())
        pmf_fb /= n_att
        outage_fb = float((idx_fb < 0).sum()) / n_att
        p_other = max(0.0, 1.0 - p_home - p_macro)
    else:
        p_other = max(0.0, 1.0 - p_home)

    return LayerStats(
        layer=layer,
        p_attach_home=p_home,
        p_attach_macro=p_macro if home != MACRO_INDEX else p_home,
        p_attach_other=p_other,
        pmf_home=pmf_home,
        outage_home=outage_home,
        pmf_fallback=pmf_fb,
        outage_fallback=outage_fb,
    )


# --------------------------------------------------------------- reuse groups

@dataclass(frozen=True)
class GroupCountSample:
    """Empirical reuse-group distribution plus the matching overlap rate."""

    pmf: np.ndarray          # P(Q = q), q = 1..M
    pairwise_overlap: float  # fraction of requester pairs whose discs met


def overlap_group_count(overlap: np.ndarray, members: np.ndarray) -> int:
    """Connected components of the overlap graph induced on `members`.

    Requesters in one component share the macro grant; distinct components
    reuse it, so the component count is the number of spare replicas.
    """
    members = [int(m) for m in members]
    unvisited = set(members)
    groups = 0
    while unvisited:
        groups += 1
        stack = [unvisited.pop()]
        while stack:
            node = stack.pop()
            linked = [m for m in unvisited if overlap[node, m]]
            for m in linked:
                unvisited.remove(m)
            stack.extend(linked)
    return groups


def sample_group_counts(
    scenario: ScenarioConfig,
    big_m: int,
    n_samples: int,
    rng: np.random.Generator,
) -> GroupCountSample:
    """Group-count distribution over sampled cluster geometries.

    The first M small cells of each sampled deployment act as the requesters
    (SC indices are exchangeable by construction).
    """
    if not 1 <= big_m <= scenario.n_small_cells:
        raise ValueError("big_m must lie in [1, n_small_cells]")
    counts = np.zeros(big_m, dtype=float)
    pair_hits = 0
    pair_total = 0
    members = np.arange(1, big_m + 1)
    for _ in range(n_samples):
        dep = generate_deployment(scenario, 0, rng)
        q = overlap_group_count(dep.overlap, members)
        counts[q - 1] += 1
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                pair_total += 1
                if dep.overlap[members[a], members[b]]:
                    pair_hits += 1
    pmf = counts / counts.sum()
    overlap_rate = pair_hits / pair_total if pair_total else 0.0
    return GroupCountSample(pmf=pmf, pairwise_overlap=float(overlap_rate))


def sample_group_counts_centered(
    n_discs: int,
    big_m: int,
    sc_radius: float,
    cluster_radius: float,
    n_samples: int,
    rng: np.random.Generator,
) -> GroupCountSample:
    """Group counts with one disc pinned at the cluster center.

    The remaining centers are uniform over the full cluster disc, the
    placement for which the pairwise overlap formula is exact; the pinned
    disc is always among the M requesters.
    """
    if not 1 <= big_m <= n_discs:
        raise ValueError("big_m must lie in [1, n_discs]")
    counts = np.zeros(big_m, dtype=float)
    pair_hits = 0
    pair_total = 0
    members = np.arange(big_m)
    for _ in range(n_samples):
        r = cluster_radius * np.sqrt(rng.random(n_discs - 1))
        theta = 2.0 * np.pi * rng.random(n_discs - 1)
        xy = np.zeros((n_discs, 2))
        xy[1:, 0] = r * np.cos(theta)
        xy[1:, 1] = r * np.sin(theta)
        diff = xy[:, None, :] - xy[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        overlap = dist < 2.0 * sc_radius
        np.fill_diagonal(overlap, False)
        q = overlap_group_count(overlap, members)
        counts[q - 1] += 1
        for a in range(big_m):
            for b in range(a + 1, big_m):
                pair_total += 1
                if overlap[a, b]:
                    pair_hits += 1
    pmf = counts / counts.sum()
    overlap_rate = pair_hits / pair_total if pair_total else 0.0
    return GroupCountSample(pmf=pmf, pairwise_overlap=float(overlap_rate))


def empirical_center_overlap(
    radius_i: float,
    radius_j: float,
    cluster_radius: float,
    n_samples: int,
    rng: np.random.Generator,
) -> float:
    """Overlap frequency with one disc centered in the cluster.

    The second center is uniform over the full cluster disc, which is the
    placement for which ((R_i + R_j) / R_c)^2 is exact.
    """
    r = cluster_radius * np.sqrt(rng.random(n_samples))
    return float((r < radius_i + radius_j).mean())


# ------------------------------------------------------- transfer mechanics

def terminal_states(
    counts: tuple[int, ...], levels: tuple[int, ...]
) -> set[tuple[int, ...]]:
    """All states where the transfer process can halt after >= 1 grant.

    Moves: one requester (negative level, need q) is fully served by one
    donor holding at least q, landing the requester at level 0 and dropping
    the donor by q. The process only halts when no move remains.
    """
    index = {v: k for k, v in enumerate(levels)}
    if 0 not in index:
        raise ValueError("levels must include 0")

    def moves(state: tuple[int, ...]) -> list[tuple[int, ...]]:
        out = []
        for k, vk in enumerate(levels):
            if vk >= 0 or state[k] == 0:
                continue
            q = -vk
            for m, vm in enumerate(levels):
                if vm <= 0 or state[m] == 0 or vm < q:
                    continue
                nxt = list(state)
                nxt[k] -= 1
                nxt[m] -= 1
                nxt[index[0]] += 1
                nxt[index[vm - q]] += 1
                out.append(tuple(nxt))
        return out

    start = tuple(int(c) for c in counts)
    seen = {start}
    frontier = [start]
    terminals: set[tuple[int, ...]] = set()
    while frontier:
        nxt_frontier = []
        for state in frontier:
            succ = moves(state)
            if not succ and state != start:
                terminals.add(state)
            for s in succ:
                if s not in seen:
                    seen.add(s)
                    nxt_frontier.append(s)
        frontier = nxt_frontier
    return terminals
