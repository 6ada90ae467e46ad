"""Analytical counterpart of the simulator.

Four engines:

* :mod:`hetsim.analysis.mcs` -- attachment and MCS probabilities under
  lognormal shadowing (adaptive quadrature, plus a pairwise reference form
  and a Monte-Carlo oracle in :mod:`hetsim.analysis.oracles`).
* :mod:`hetsim.analysis.throughput` -- closed-form throughput upper bounds
  with and without inter-BS transfers.
* :mod:`hetsim.analysis.qgroups` -- donor-group count recursion and expected
  macro-RB share under spatial reuse.
* :mod:`hetsim.analysis.states` -- availability-state chain: transfer
  feasibility filter, transition kernel, and expected signaling volume.
"""

from hetsim.analysis.mcs import (
    LayerStats,
    expected_rates,
    layer_statistics,
    mcs_probability,
)
from hetsim.analysis.qgroups import (
    enb_share_equal,
    enb_share_equal_direct,
    enb_share_weighted,
    overlap_probability,
    p_q_groups,
    p_rb_coverage,
)
from hetsim.analysis.states import (
    SystemState,
    feasible_finals,
    signaling_expectations,
)
from hetsim.analysis.throughput import (
    AnalysisConfig,
    AnalysisContext,
    ThroughputBound,
    throughput_bounds,
)

__all__ = [
    "AnalysisConfig",
    "AnalysisContext",
    "LayerStats",
    "SystemState",
    "ThroughputBound",
    "enb_share_equal",
    "enb_share_equal_direct",
    "enb_share_weighted",
    "expected_rates",
    "feasible_finals",
    "layer_statistics",
    "mcs_probability",
    "overlap_probability",
    "p_q_groups",
    "p_rb_coverage",
    "signaling_expectations",
    "throughput_bounds",
]
