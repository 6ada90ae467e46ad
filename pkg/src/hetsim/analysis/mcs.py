"""Attachment and serving-MCS probabilities under lognormal shadowing.

For a user at a fixed position, each station's SNR is Gaussian in dB around a
distance-driven mean; the user attaches to the best. The joint probability of
attaching to a station and landing in a given MCS bin is a one-dimensional
integral over that station's shadowing, with every competitor contributing a
tail-probability factor. The production route evaluates it by adaptive
trapezoid quadrature on a standardized grid; a simpler pairwise-product form
is available behind ``method="pairwise"`` for comparison (it ignores the
coupling between competitors and is known to disagree with sampling).

Spatial averaging uses a Halton sequence over the drop disc of the layer, so
results are deterministic for a given deployment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import ndtr
from scipy.stats import qmc

from hetsim.radio import ChannelModel, McsTable, station_small_mask
from hetsim.scenario import MACRO_INDEX, Deployment

_T_SPAN = 8.0            # integration span in shadowing standard deviations
_SIGMA_FLOOR = 1e-12     # degenerate (no-shadowing) links become step factors


@dataclass(frozen=True)
class LayerStats:
    """Spatially averaged attachment and MCS statistics for one drop layer."""

    layer: int
    p_attach_home: float
    p_attach_macro: float
    p_attach_other: float
    pmf_home: np.ndarray        # joint with attach-home, normalized by it
    outage_home: float          # conditional outage mass of the serving link
    pmf_fallback: np.ndarray | None   # macro-link MCS given attached home
    outage_fallback: float


@dataclass(frozen=True)
class RateSummary:
    """Demand-aware rate figures for one conditional MCS distribution."""

    raw_bps: float         # plain expectation of the per-RB rate
    effective_bps: float   # demand / E[RBs per user], the grant-quantized rate
    e_need_rb: float       # expected whole-RB demand of a servable user
    outage: float


def halton_disc(
    n_points: int, center: tuple[float, float], radius: float
) -> np.ndarray:
    """Deterministic low-discrepancy points uniform over a disc."""
    sampler = qmc.Halton(d=2, scramble=False)
    u = sampler.random(n_points)
    r = radius * np.sqrt(u[:, 0])
    theta = 2.0 * math.pi * u[:, 1]
    return np.column_stack(
        [center[0] + r * np.cos(theta), center[1] + r * np.sin(theta)]
    )


def _mean_snr_matrix(
    deployment: Deployment, channel: ChannelModel, points: np.ndarray
) -> np.ndarray:
    """(P, B) mean SNR (no shadowing) for each point-station pair."""
    small = station_small_mask(deployment.stations)
    power = np.array([b.tx_power_dbm for b in deployment.stations])
    diff = points[:, None, :] - deployment.bs_xy[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    pl = channel.path_loss_db(dist, small[None, :])
    return power[None, :] - pl - channel.noise_dbm


def _interp_on_grid(cum: np.ndarray, t: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Linear interpolation of row-wise cumulatives at per-row abscissae.

    ``cum`` is (P, n) over the common grid ``t``; ``x`` is (P,) or (P, K).
    Values clamp to the grid ends (tail mass beyond the span is negligible).
    """
    t0, dt = t[0], t[1] - t[0]
    pos = (np.asarray(x) - t0) / dt
    pos = np.clip(pos, 0.0, len(t) - 1.0)
    i0 = np.floor(pos).astype(int)
    i1 = np.minimum(i0 + 1, len(t) - 1)
    frac = pos - i0
    rows = np.arange(cum.shape[0])
    if pos.ndim == 1:
        return cum[rows, i0] * (1.0 - frac) + cum[rows, i1] * frac
    r = rows[:, None]
    return cum[r, i0] * (1.0 - frac) + cum[r, i1] * frac


def _quadrature_pass(
    g: np.ndarray,
    sigma: np.ndarray,
    home: int,
    thresholds: np.ndarray,
    nodes: int,
    want_fallback: bool,
):
    """One fixed-grid evaluation; returns per-point joint masses.

    ``g`` is the (P, B) mean-SNR matrix, ``thresholds`` the MCS bin lower
    edges. Output joints are per point: attach probability, per-bin mass of
    the serving link, and (optionally) per-bin mass of the macro link.
    """
    n_points, n_bs = g.shape
    t = np.linspace(-_T_SPAN, _T_SPAN, nodes)
    s = t * sigma[home]
    pdf = np.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)

    w_full = np.ones((n_points, nodes))
    w_no_macro = np.ones((n_points, nodes)) if want_fallback else None
    for j in range(n_bs):
        if j == home:
            continue
        c_hj = g[:, home] - g[:, j]
        arg = (s[None, :] - c_hj[:, None]) / sigma[j]
        factor = ndtr(-arg)
        w_full *= factor
        if want_fallback and j != MACRO_INDEX:
            w_no_macro *= factor

    integrand = w_full * pdf[None, :]
    cum = cumulative_trapezoid(integrand, t, initial=0.0, axis=1)
    attach = cum[:, -1]

    # Serving-link bins: SNR in [theta_k, theta_{k+1}) maps to a t-interval.
    k_count = len(thresholds)
    upper = np.empty((n_points, k_count))
    lower = np.empty((n_points, k_count))
    sig_h = sigma[home]
    for k in range(k_count):
        hi_snr = thresholds[k + 1] if k + 1 < k_count else np.inf
        upper[:, k] = (g[:, home] - thresholds[k]) / sig_h
        lower[:, k] = (g[:, home] - hi_snr) / sig_h
    joint = _interp_on_grid(cum, t, upper) - _interp_on_grid(cum, t, lower)
    joint = np.clip(joint, 0.0, None)

    joint_fb = None
    if want_fallback:
        c_h0 = g[:, home] - g[:, MACRO_INDEX]
        z = (s[None, :] - c_h0[:, None]) / sigma[MACRO_INDEX]
        phi_z = ndtr(z)
        joint_fb = np.empty((n_points, k_count))
        g0 = g[:, MACRO_INDEX]
        for k in range(k_count):
            hi_snr = thresholds[k + 1] if k + 1 < k_count else np.inf
            b_hi = ndtr((g0 - thresholds[k]) / sigma[MACRO_INDEX])
            b_lo = ndtr((g0 - hi_snr) / sigma[MACRO_INDEX])
            factor = np.clip(
                b_hi[:, None] - np.maximum(b_lo[:, None], phi_z), 0.0, None
            )
            fb_integrand = w_no_macro * factor * pdf[None, :]
            joint_fb[:, k] = np.trapezoid(fb_integrand, t, axis=1)
    return attach, joint, joint_fb


def _attach_only_pass(
    g: np.ndarray, sigma: np.ndarray, serving: int, nodes: int
) -> np.ndarray:
    """Attachment probability of one station, per point."""
    n_points, n_bs = g.shape
    t = np.linspace(-_T_SPAN, _T_SPAN, nodes)
    s = t * sigma[serving]
    pdf = np.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)
    w = np.ones((n_points, nodes))
    for j in range(n_bs):
        if j == serving:
            continue
        arg = (s[None, :] - (g[:, serving] - g[:, j])[:, None]) / sigma[j]
        w *= ndtr(-arg)
    return np.trapezoid(w * pdf[None, :], t, axis=1)


def _pairwise_stats(
    g: np.ndarray, sigma: np.ndarray, home: int, thresholds: np.ndarray,
    want_fallback: bool,
):
    """Printed closed-form route: marginal bin mass times pairwise factors.

    Kept for comparison; the pairwise win factor uses the published argument
    sigma_h * mu_hj / (sigma_j * sqrt(2)) as-is.
    """
    n_points, n_bs = g.shape
    pair = np.ones(n_points)
    for j in range(n_bs):
        if j == home:
            continue
        mu_hj = g[:, j] - g[:, home]
        pair *= ndtr(sigma[home] * mu_hj / (sigma[j] * math.sqrt(2.0)))
    k_count = len(thresholds)
    sig_h = sigma[home]
    marg = np.empty((n_points, k_count))
    for k in range(k_count):
        hi_snr = thresholds[k + 1] if k + 1 < k_count else np.inf
        marg[:, k] = ndtr((g[:, home] - thresholds[k]) / sig_h) - ndtr(
            (g[:, home] - hi_snr) / sig_h
        )
    joint = marg * pair[:, None]
    attach = pair
    joint_fb = None
    if want_fallback:
        g0 = g[:, MACRO_INDEX]
        marg0 = np.empty((n_points, k_count))
        for k in range(k_count):
            hi_snr = thresholds[k + 1] if k + 1 < k_count else np.inf
            marg0[:, k] = ndtr((g0 - thresholds[k]) / sigma[MACRO_INDEX]) - ndtr(
                (g0 - hi_snr) / sigma[MACRO_INDEX]
            )
        joint_fb = marg0 * pair[:, None]
    return attach, joint, joint_fb


def layer_statistics(
    deployment: Deployment,
    channel: ChannelModel,
    mcs: McsTable,
    layer: int,
    n_points: int = 1024,
    method: str = "quadrature",
    tol: float = 1e-6,
    max_nodes: int = 4097,
) -> LayerStats:
    """Attachment and MCS statistics for users dropped on one layer.

    ``layer`` is a station index: 0 averages over the macro disc, an SC index
    over that SC's disc. The grid is refined (node doubling) until successive
    evaluations agree to ``tol`` per component.
    """
    if method not in ("quadrature", "pairwise"):
        raise ValueError("method must be 'quadrature' or 'pairwise'")
    station = deployment.stations[layer]
    points = halton_disc(n_points, (station.x_m, station.y_m), station.radius_m)
    g = _mean_snr_matrix(deployment, channel, points)
    small = station_small_mask(deployment.stations)
    sigma = np.maximum(
        np.asarray(channel.shadow_sigma_db(small), dtype=float), _SIGMA_FLOOR
    )
    thresholds = mcs.snr_min_db
    home = layer
    want_fallback = home != MACRO_INDEX

    if method == "pairwise":
        attach, joint, joint_fb = _pairwise_stats(
            g, sigma, home, thresholds, want_fallback
        )
        attach_macro = (
            attach
            if not want_fallback
            else _pairwise_stats(g, sigma, MACRO_INDEX, thresholds, False)[0]
        )
    else:
        nodes = 513
        attach, joint, joint_fb = _quadrature_pass(
            g, sigma, home, thresholds, nodes, want_fallback
        )
        while nodes < max_nodes:
            nodes2 = nodes * 2 - 1
            attach2, joint2, joint_fb2 = _quadrature_pass(
                g, sigma, home, thresholds, nodes2, want_fallback
            )
            delta = max(
                float(np.max(np.abs(attach2 - attach))),
                float(np.max(np.abs(joint2 - joint))),
            )
            attach, joint, joint_fb = attach2, joint2, joint_fb2
            nodes = nodes2
            if delta < tol:
                break
        if want_fallback:
            attach_macro = _attach_only_pass(g, sigma, MACRO_INDEX, nodes)
        else:
            attach_macro = attach

    p_home = float(attach.mean())
    p_macro = float(attach_macro.mean())
    mean_joint = joint.mean(axis=0)
    pmf_home = mean_joint / p_home if p_home > 0 else mean_joint * 0.0
    outage_home = max(0.0, 1.0 - float(pmf_home.sum()))
    pmf_fb = None
    outage_fb = 0.0
    if want_fallback and joint_fb is not None:
        mean_fb = joint_fb.mean(axis=0)
        pmf_fb = mean_fb / p_home if p_home > 0 else mean_fb * 0.0
        outage_fb = max(0.0, 1.0 - float(pmf_fb.sum()))
    if want_fallback:
        p_other = max(0.0, 1.0 - p_home - p_macro)
    else:
        p_other = max(0.0, 1.0 - p_home)
    return LayerStats(
        layer=layer,
        p_attach_home=p_home,
        p_attach_macro=p_macro,
        p_attach_other=p_other,
        pmf_home=pmf_home,
        outage_home=outage_home,
        pmf_fallback=pmf_fb,
        outage_fallback=outage_fb,
    )


def mcs_probability(
    deployment: Deployment,
    channel: ChannelModel,
    mcs: McsTable,
    layer: int,
    method: str = "quadrature",
    n_points: int = 1024,
) -> LayerStats:
    """Alias of :func:`layer_statistics` named for its primary output."""
    return layer_statistics(
        deployment, channel, mcs, layer, n_points=n_points, method=method
    )


def rate_summary(
    pmf: np.ndarray, outage: float, mcs: McsTable, demand_bps: float
) -> RateSummary:
    """Raw and demand-quantized expected rates for one conditional pmf."""
    servable = float(pmf.sum())
    raw = float((pmf * mcs.rate_kbps * 1e3).sum())
    if servable <= 0:
        return RateSummary(
            raw_bps=0.0, effective_bps=0.0, e_need_rb=float("inf"), outage=outage
        )
    needs = np.ceil(demand_bps / (mcs.rate_kbps * 1e3))
    e_need = float((pmf * needs).sum() / servable)
    return RateSummary(
        raw_bps=raw,
        effective_bps=demand_bps / e_need,
        e_need_rb=e_need,
        outage=outage,
    )


def expected_rates(
    stats: LayerStats, mcs: McsTable, demand_bps: float
) -> dict[str, RateSummary]:
    """Rate summaries for the serving link and (if any) the macro fallback."""
    out = {"home": rate_summary(stats.pmf_home, stats.outage_home, mcs, demand_bps)}
    if stats.pmf_fallback is not None:
        out["fallback"] = rate_summary(
            stats.pmf_fallback, stats.outage_fallback, mcs, demand_bps
        )
    return out
