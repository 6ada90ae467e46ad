"""Donor-group counts and macro-RB share under spatial reuse.

When M of the N small cells request resources from the macro eNB at once, SCs
whose coverage discs are pairwise disjoint can hold the same macro RB, so the
requesters split into Q reuse groups; each group receives the full spare. The
group-count distribution P(Q | N, M) follows a recursion built on the pairwise
overlap probability P_o and a coverage distribution P_RB(m | N, M): the chance
that one requester's disc overlaps m of the other M-1 requesters.

The expected share each requester obtains of a spare band follows from the
overlap graph: a requester sharing with its n overlapping co-requesters gets
RB_s / (n + 1) in the equal-weight case, which sums in expectation to the
closed form RB_s (1 - (1 - P_o)^N) / P_o.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np
from scipy import stats


def overlap_probability(radius_i: float, radius_j: float, cluster_radius: float) -> float:
    """P_o: chance two coverage discs in a cluster disc intersect.

    Exact when one center is taken as the reference point of the cluster disc
    and the other is uniform in it.
    """
    if cluster_radius <= 0:
        raise ValueError("cluster_radius must be positive")
    ratio = (radius_i + radius_j) / cluster_radius
    return min(1.0, ratio * ratio)


def p_requester(n: int, big_m: int) -> float:
    """P_{N,M}: chance a given other SC is one of the M-1 co-requesters."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 1 <= big_m <= n:
        raise ValueError("big_m must lie in [1, n]")
    return (big_m - 1) / (n - 1)


def p_rb_coverage(m: int, n: int, big_m: int, p_o: float) -> float:
    """P_RB(m | N, M): a requester's disc overlaps m of the other requesters.

    The requester overlaps k of its N-1 neighbours (binomially with P_o), and
    each overlapped neighbour is a co-requester with probability P_{N,M}.
    Out-of-range m yields 0.
    """
    if m < 0 or m > big_m - 1:
        return 0.0
    p_req = p_requester(n, big_m)
    total = 0.0
    for k in range(m, n):
        p_k = stats.binom.pmf(k, n - 1, p_o)
        total += p_k * stats.binom.pmf(m, k, p_req)
    return float(total)


def p_q_groups(n: int, big_m: int, p_o: float) -> np.ndarray:
    """P(Q = q | N, M) for q = 1..M, renormalized.

    Recursion: a single group requires one requester to cover all M-1 others;
    two groups split the coverage; more groups peel one group off and recurse
    on the remainder. Degenerate cases: M = 1 gives Q = 1 surely; P_o = 0
    gives Q = M surely.
    """
    if not 0.0 <= p_o <= 1.0:
        raise ValueError("p_o must lie in [0, 1]")
    if big_m < 1:
        raise ValueError("big_m must be at least 1")
    if big_m == 1:
        return np.array([1.0])

    raw = np.zeros(big_m)
    for q in range(1, big_m + 1):
        if q == 1:
            raw[0] = p_rb_coverage(big_m - 1, n, big_m, p_o)
        elif q == 2:
            total = 0.0
            for k in range(0, big_m - 1):
                total += p_rb_coverage(k, n, big_m, p_o) * p_rb_coverage(
                    big_m - 2 - k, n, big_m, p_o
                )
            raw[1] = total
        else:
            total = 0.0
            for k in range(0, big_m - q + 1):
                n_rest = n - 1 - k
                m_rest = big_m - 1 - k
                if n_rest < 2 or m_rest < 1 or m_rest > n_rest:
                    continue
                sub = p_q_groups(n_rest, m_rest, p_o)
                if q - 1 <= len(sub):
                    total += p_rb_coverage(k, n, big_m, p_o) * sub[q - 2]
            raw[q - 1] = total

    raw = np.clip(raw, 0.0, None)
    s = raw.sum()
    if s <= 0:
        # No mass anywhere: fall back to the independent-overlap extremes.
        out = np.zeros(big_m)
        out[big_m - 1 if p_o < 0.5 else 0] = 1.0
        return out
    return raw / s


def enb_share_equal(n: int, rb_spare: int, p_o: float) -> float:
    """Closed-form expected total RBs received by N equal-weight requesters.

    Each requester gets RB_s / (n_i + 1) where n_i ~ Bin(N-1, P_o) counts its
    overlapping co-requesters; the sum telescopes to
    RB_s (1 - (1 - P_o)^N) / P_o (limit N RB_s as P_o -> 0).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if rb_spare < 0:
        raise ValueError("rb_spare must be non-negative")
    if not 0.0 <= p_o <= 1.0:
        raise ValueError("p_o must lie in [0, 1]")
    if p_o == 0.0:
        return float(n * rb_spare)
    return float(rb_spare * (1.0 - (1.0 - p_o) ** n) / p_o)


def enb_share_equal_direct(n: int, rb_spare: int, p_o: float) -> float:
    """Same expectation by direct summation over the neighbour distribution."""
    if p_o == 0.0:
        return float(n * rb_spare)
    total = 0.0
    for k in range(n):
        total += stats.binom.pmf(k, n - 1, p_o) / (k + 1)
    return float(n * rb_spare * total)


_WEIGHTED_EXACT_LIMIT = 12
_WEIGHTED_SAMPLES = 100_000


def enb_share_weighted(
    weights: list[float],
    rb_spare: int,
    p_o: float,
    rng: np.random.Generator | None = None,
) -> float:
    """Expected total received when requester i weighs w_i in each shared split.

    A requester sharing an RB set with overlapping co-requesters S receives
    RB_s * w_i / (w_i + sum_{j in S} w_j). Exact by subset enumeration up to
    12 requesters; Monte-Carlo over overlap indicators beyond that.
    """
    n = len(weights)
    if n < 1:
        raise ValueError("weights must not be empty")
    if any(w <= 0 for w in weights):
        raise ValueError("weights must be positive")
    if not 0.0 <= p_o <= 1.0:
        raise ValueError("p_o must lie in [0, 1]")
    w = np.asarray(weights, dtype=float)
    if n <= _WEIGHTED_EXACT_LIMIT:
        total = 0.0
        for i in range(n):
            others = [j for j in range(n) if j != i]
            for size in range(len(others) + 1):
                for subset in combinations(others, size):
                    prob = (p_o ** size) * ((1.0 - p_o) ** (len(others) - size))
                    total += prob * w[i] / (w[i] + w[list(subset)].sum())
        return float(rb_spare * total)
    rng = rng if rng is not None else np.random.default_rng(0)
    total = 0.0
    for _ in range(_WEIGHTED_SAMPLES):
        adj = rng.random((n, n)) < p_o
        adj = np.triu(adj, 1)
        adj = adj | adj.T
        denom = w + adj @ w
        total += float((w / denom).sum())
    return float(rb_spare * total / _WEIGHTED_SAMPLES)


def expected_reuse_multiplier(n: int, p_o: float) -> float:
    """Expected loans per spare RB at full contention (share total / spare)."""
    return enb_share_equal(n, 1, p_o)


def binomial_pmf(k: int, n: int, p: float) -> float:
    """Convenience wrapper kept for parity with hand checks."""
    return float(math.comb(n, k) * (p ** k) * ((1 - p) ** (n - k)))
