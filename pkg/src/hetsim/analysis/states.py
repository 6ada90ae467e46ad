"""Availability-state chain: feasibility filter and expected signaling volume.

A system state records, for the N small cells, how many sit at each quantized
availability level (spare RBs in bucket units; negative levels are unmet
demand, i.e. requesters). One resolution epoch moves the state to a feasible
final state in which some requesters were each served by a single donor; the
transition kernel is uniform over the feasible set. A second stage appends
the macro eNB's spare as Q pseudo-donors (one per spatial-reuse group) and
resolves the remaining requesters the same way.

Feasibility of a final state ``s_j`` reached from ``s_n`` is decided by seven
conditions (several deliberately redundant):

1. level-weighted value is conserved;
2. the requester count strictly decreases;
3. the total requested magnitude strictly decreases;
4. requester counts never increase at any negative level;
5. transfer balance: donated equals received (same sum as condition 1);
6. every served requester was covered in full by a single donor able to pay
   (checked by scheduling served needs onto donors without overdraw);
7. completeness: no remaining requester could still be served by any donor
   left in ``s_j`` (the procedure runs to exhaustion).

Served requesters land exactly at level 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from hetsim.analysis.qgroups import p_q_groups


class NumericGuardError(RuntimeError):
    """The state enumeration exceeded its configured budget."""


DEFAULT_STATE_BUDGET = 10_000_000


@dataclass(frozen=True)
class SystemState:
    """Counts of BSs per availability level (levels ascending, shared)."""

    levels: tuple[int, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.levels) != len(self.counts):
            raise ValueError("levels and counts must align")
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be non-negative")

    @property
    def n_bs(self) -> int:
        return sum(self.counts)

    def n_requesters(self) -> int:
        return n_requesters(self.counts, self.levels)

    def value(self) -> int:
        return state_value(self.counts, self.levels)


def n_requesters(counts: Sequence[int], levels: Sequence[int]) -> int:
    return sum(c for c, v in zip(counts, levels) if v < 0)


def requested_magnitude(counts: Sequence[int], levels: Sequence[int]) -> int:
    return sum(-v * c for c, v in zip(counts, levels) if v < 0)


def state_value(counts: Sequence[int], levels: Sequence[int]) -> int:
    return sum(v * c for c, v in zip(counts, levels))


# --------------------------------------------------------------- conditions

def condition_value_conserved(s_n, s_j, levels) -> bool:
    """(1) Level-weighted value is identical before and after."""
    return state_value(s_n, levels) == state_value(s_j, levels)


def condition_requesters_decrease(s_n, s_j, levels) -> bool:
    """(2) Strictly fewer requesters afterwards."""
    return n_requesters(s_j, levels) < n_requesters(s_n, levels)


def condition_requested_magnitude_decreases(s_n, s_j, levels) -> bool:
    """(3) The outstanding requested volume strictly decreases."""
    return requested_magnitude(s_j, levels) < requested_magnitude(s_n, levels)


def condition_requesters_componentwise(s_n, s_j, levels) -> bool:
    """(4) No negative level gains members (requesters only leave)."""
    return all(
        cj <= cn for cn, cj, v in zip(s_n, s_j, levels) if v < 0
    )


def condition_transfer_balance(s_n, s_j, levels) -> bool:
    """(5) Donated equals received: the value delta sums to zero."""
    return sum((cj - cn) * v for cn, cj, v in zip(s_n, s_j, levels)) == 0


def condition_single_donor_coverage(s_n, s_j, levels) -> bool:
    """(6) The move decomposes into whole grants each paid by one donor."""
    return tuple(s_j) in _raw_candidates(tuple(s_n), tuple(levels))


def condition_completeness(s_j, levels) -> bool:
    """(7) No remaining requester has any donor left that could serve it."""
    donors = [v for c, v in zip(s_j, levels) if v > 0 and c > 0]
    max_donor = max(donors) if donors else 0
    for c, v in zip(s_j, levels):
        if v < 0 and c > 0 and -v <= max_donor:
            return False
    return True


# ------------------------------------------------------------- enumeration

@lru_cache(maxsize=200_000)
def _assignments(needs: tuple[int, ...], donors: tuple[int, ...]) -> frozenset:
    """All donor-value outcomes of paying ``needs``, one donor per need.

    ``needs`` is sorted descending, ``donors`` ascending; a donor may pay
    several needs as long as its running value never goes negative. Returns
    the set of sorted donor-value tuples after all payments.
    """
    if not needs:
        return frozenset({donors})
    q, rest = needs[0], needs[1:]
    out = set()
    seen_values = set()
    for i, v in enumerate(donors):
        if v < q or v in seen_values:
            continue
        seen_values.add(v)
        reduced = tuple(sorted(donors[:i] + (v - q,) + donors[i + 1 :]))
        out.update(_assignments(rest, reduced))
    return frozenset(out)


@lru_cache(maxsize=50_000)
def _raw_candidates(
    counts: tuple[int, ...], levels: tuple[int, ...]
) -> frozenset:
    """Final states reachable by >= 1 whole grants (conditions 1,2,4,5,6)."""
    level_index = {v: k for k, v in enumerate(levels)}
    if 0 not in level_index:
        raise ValueError("levels must include 0 (served requesters land there)")
    neg = [(k, -levels[k], counts[k]) for k in range(len(levels))
           if levels[k] < 0 and counts[k] > 0]
    donors: list[int] = []
    for k, v in enumerate(levels):
        if v > 0:
            donors.extend([v] * counts[k])
    donors_t = tuple(sorted(donors))

    out = set()
    ranges = [range(c + 1) for _, _, c in neg]
    for g in product(*ranges):
        n_served = sum(g)
        if n_served == 0:
            continue
        needs: list[int] = []
        for (_, q, _), gk in zip(neg, g):
            needs.extend([q] * gk)
        needs_t = tuple(sorted(needs, reverse=True))
        for final_donors in _assignments(needs_t, donors_t):
            s_j = list(counts)
            for (k, _, _), gk in zip(neg, g):
                s_j[k] -= gk
            s_j[level_index[0]] += n_served
            for k, v in enumerate(levels):
                if v > 0:
                    s_j[k] = 0
            for v in final_donors:
                if v == 0:
                    s_j[level_index[0]] += 1
                else:
                    if v not in level_index:
                        raise ValueError(
                            f"donor value {v} outside level range {levels}"
                        )
                    s_j[level_index[v]] += 1
            out.add(tuple(s_j))
    return frozenset(out)


def feasible_finals(
    counts: Sequence[int], levels: Sequence[int]
) -> set[tuple[int, ...]]:
    """F(S_n): final states passing all seven conditions.

    Empty when the state has no servable requester (the chain then holds
    still with probability one).
    """
    counts_t = tuple(int(c) for c in counts)
    levels_t = tuple(int(v) for v in levels)
    out = set()
    for s_j in _raw_candidates(counts_t, levels_t):
        if not condition_requesters_decrease(counts_t, s_j, levels_t):
            continue
        if not condition_requested_magnitude_decreases(counts_t, s_j, levels_t):
            continue
        if not condition_completeness(s_j, levels_t):
            continue
        # Redundant guards (conditions 1, 4, 5 hold by construction).
        if not condition_value_conserved(counts_t, s_j, levels_t):
            raise AssertionError("value conservation violated by construction")
        if not condition_requesters_componentwise(counts_t, s_j, levels_t):
            raise AssertionError("componentwise condition violated by construction")
        if not condition_transfer_balance(counts_t, s_j, levels_t):
            raise AssertionError("transfer balance violated by construction")
        out.add(s_j)
    return out


# -------------------------------------------------------------------- chain

@dataclass(frozen=True)
class SignalingExpectations:
    """Per-epoch expectations derived from the availability chain."""

    e_n_r: float            # requesting SCs entering the epoch
    e_n_s: float            # served in the SC-to-SC phase
    e_n_r_enb: float        # requesters that go on to poll the eNB
    e_n_s_enb: float        # served in the eNB phase
    e_n_s_total: float
    success_prob: float
    e_messages: float
    msgs_per_sc: float
    n_support_states: int
    bucket_rb: int


def _quantize(value: int, bucket: int) -> int:
    return int(np.floor(value / bucket))


def _state_from_levels(values: Iterable[int], levels: tuple[int, ...]) -> tuple[int, ...]:
    index = {v: k for k, v in enumerate(levels)}
    counts = [0] * len(levels)
    for v in values:
        counts[index[v]] += 1
    return tuple(counts)


def signaling_expectations(
    snapshots: Sequence[Sequence[int]],
    n_small_cells: int,
    p_o: float,
    bucket_rb: int = 8,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> SignalingExpectations:
    """Expected request, success, and message counts for one epoch.

    ``snapshots`` holds per-iteration availability vectors ``(r_1..r_N, r_0)``
    in raw RB units (macro last); the empirical distribution over quantized
    states stands in for the chain's occupancy, and the macro spare
    distribution feeds the eNB stage. Raises :class:`NumericGuardError` when
    the enumeration would exceed ``state_budget`` candidate states.
    """
    if bucket_rb < 1:
        raise ValueError("bucket_rb must be at least 1")
    if len(snapshots) == 0:
        raise ValueError("snapshots must not be empty")
    arr = np.asarray(snapshots, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != n_small_cells + 1:
        raise ValueError("each snapshot must hold N small-cell values plus the macro")

    sc_levels_raw = np.floor_divide(arr[:, :n_small_cells], bucket_rb)
    enb_levels_raw = np.floor_divide(arr[:, n_small_cells], bucket_rb)

    lo = int(min(sc_levels_raw.min(), 0))
    hi = int(max(sc_levels_raw.max(), 0, int(enb_levels_raw.max())))
    levels = tuple(range(lo, hi + 1))

    budget = [0]

    def charge(n: int) -> None:
        budget[0] += n
        if budget[0] > state_budget:
            raise NumericGuardError(
                f"state enumeration exceeded budget {state_budget}"
            )

    # Empirical occupancy over SC states.
    pi: dict[tuple[int, ...], float] = {}
    for row in sc_levels_raw:
        key = _state_from_levels((int(v) for v in row), levels)
        pi[key] = pi.get(key, 0.0) + 1.0
    n_snap = len(sc_levels_raw)
    for key in pi:
        pi[key] /= n_snap
    charge(len(pi))

    # Empirical macro spare distribution.
    p_enb: dict[int, float] = {}
    for v in enb_levels_raw:
        p_enb[int(v)] = p_enb.get(int(v), 0.0) + 1.0
    for key in p_enb:
        p_enb[key] /= n_snap

    e_n_r = sum(n_requesters(s, levels) * p for s, p in pi.items())

    # SC phase: uniform kernel over the feasible set.
    pi_after: dict[tuple[int, ...], float] = {}
    for s_n, p in pi.items():
        finals = feasible_finals(s_n, levels)
        charge(len(finals))
        if not finals:
            pi_after[s_n] = pi_after.get(s_n, 0.0) + p
            continue
        w = p / len(finals)
        for s_j in finals:
            pi_after[s_j] = pi_after.get(s_j, 0.0) + w
    e_n_r_after = sum(n_requesters(s, levels) * p for s, p in pi_after.items())
    e_n_s = e_n_r - e_n_r_after

    # eNB phase: remaining requesters poll the macro, whose spare appears as
    # Q pseudo-donors (one per reuse group), each carrying the full spare.
    e_n_r_enb = e_n_r_after
    e_n_s_enb = 0.0
    for s_t, p_t in pi_after.items():
        m_rem = n_requesters(s_t, levels)
        if m_rem == 0 or p_t <= 0.0:
            continue
        for e_level, p_e in p_enb.items():
            if p_e <= 0.0:
                continue
            if e_level <= 0:
                continue
            q_pmf = p_q_groups(n_small_cells, m_rem, p_o) if m_rem > 1 else np.array([1.0])
            for q_minus_1, p_q in enumerate(q_pmf):
                if p_q <= 0.0:
                    continue
                q_groups = q_minus_1 + 1
                ext_levels = tuple(range(min(levels[0], 0), max(levels[-1], e_level) + 1))
                ext_counts = list(_state_from_levels([], ext_levels))
                index = {v: k for k, v in enumerate(ext_levels)}
                for c, v in zip(s_t, levels):
                    ext_counts[index[v]] += c
                ext_counts[index[e_level]] += q_groups
                finals = feasible_finals(tuple(ext_counts), ext_levels)
                charge(len(finals))
                if not finals:
                    continue
                weight = p_t * p_e * float(p_q) / len(finals)
                for s_f in finals:
                    served = m_rem - n_requesters(s_f, ext_levels)
                    e_n_s_enb += weight * served

    e_n_s_total = e_n_s + e_n_s_enb
    success = e_n_s_total / e_n_r if e_n_r > 0 else float("nan")
    e_messages = (
        3.0 * (n_small_cells - 1) * e_n_r
        + 3.0 * e_n_r_enb
        + 2.0 * e_n_s_total
    )
    return SignalingExpectations(
        e_n_r=float(e_n_r),
        e_n_s=float(e_n_s),
        e_n_r_enb=float(e_n_r_enb),
        e_n_s_enb=float(e_n_s_enb),
        e_n_s_total=float(e_n_s_total),
        success_prob=float(success),
        e_messages=float(e_messages),
        msgs_per_sc=float(e_messages / n_small_cells),
        n_support_states=len(pi),
        bucket_rb=bucket_rb,
    )
