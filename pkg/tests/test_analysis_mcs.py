import numpy as np
import pytest

from hetsim.analysis.mcs import (
    expected_rates,
    layer_statistics,
    rate_summary,
)
from hetsim.analysis.oracles import sample_layer_statistics
from hetsim.radio import ChannelModel
from hetsim.scenario import MACRO_INDEX, generate_deployment


@pytest.fixture(scope="module")
def deployment(scenario):
    return generate_deployment(scenario, 0, np.random.default_rng(99))


def _check_valid(stats):
    assert 0.0 <= stats.p_attach_home <= 1.0
    assert 0.0 <= stats.p_attach_macro <= 1.0
    assert 0.0 <= stats.p_attach_other <= 1.0
    assert stats.pmf_home.min() >= -1e-12
    assert stats.pmf_home.sum() <= 1.0 + 1e-9
    assert stats.outage_home >= 0.0


def test_sc_layer_matches_sampling_oracle(deployment, channel, mcs, rng):
    quad = layer_statistics(deployment, channel, mcs, 1, n_points=1024)
    emp = sample_layer_statistics(deployment, channel, mcs, 1, 200_000, rng)
    _check_valid(quad)
    assert quad.p_attach_home == pytest.approx(emp.p_attach_home, abs=1e-2)
    assert quad.p_attach_macro == pytest.approx(emp.p_attach_macro, abs=1e-2)
    assert np.max(np.abs(quad.pmf_home - emp.pmf_home)) < 1e-2
    assert np.max(np.abs(quad.pmf_fallback - emp.pmf_fallback)) < 1e-2


def test_macro_layer_matches_sampling_oracle(deployment, channel, mcs, rng):
    quad = layer_statistics(deployment, channel, mcs, MACRO_INDEX, n_points=1024)
    emp = sample_layer_statistics(deployment, channel, mcs, MACRO_INDEX, 200_000, rng)
    _check_valid(quad)
    assert quad.p_attach_home == pytest.approx(emp.p_attach_home, abs=1e-2)
    assert np.max(np.abs(quad.pmf_home - emp.pmf_home)) < 1e-2
    assert quad.pmf_fallback is None


def test_zero_shadowing_is_deterministic_attachment(deployment, mcs, rng):
    ch = ChannelModel(macro_shadow_sigma_db=0.0, sc_shadow_sigma_db=0.0)
    quad = layer_statistics(deployment, ch, mcs, 1, n_points=2048)
    emp = sample_layer_statistics(deployment, ch, mcs, 1, 200_000, rng)
    assert quad.p_attach_home == pytest.approx(emp.p_attach_home, abs=1e-2)
    # with no shadowing each position has exactly one winner
    assert quad.p_attach_home + quad.p_attach_macro + quad.p_attach_other == (
        pytest.approx(1.0, abs=1e-6)
    )


def test_pairwise_method_is_a_distribution_but_disagrees(deployment, channel, mcs):
    quad = layer_statistics(deployment, channel, mcs, 1, n_points=512)
    pair = layer_statistics(deployment, channel, mcs, 1, n_points=512,
                            method="pairwise")
    _check_valid(pair)
    # the published closed form overcounts joint wins; quadrature is the
    # production route and the oracle-validated one
    assert pair.p_attach_home != pytest.approx(quad.p_attach_home, abs=1e-4)


def test_rate_summary_quantizes_demand(mcs):
    pmf = np.zeros(len(mcs))
    pmf[-1] = 1.0                      # everyone at top rate 806.4 kbps
    summary = rate_summary(pmf, 0.0, mcs, 300_000.0)
    assert summary.e_need_rb == pytest.approx(1.0)
    assert summary.effective_bps == pytest.approx(300_000.0)
    assert summary.raw_bps == pytest.approx(806_400.0)

    pmf2 = np.zeros(len(mcs))
    pmf2[0] = 0.5                      # 42 kbps: 8 RBs for 300 kbps
    pmf2[-1] = 0.5
    summary2 = rate_summary(pmf2, 0.0, mcs, 300_000.0)
    assert summary2.e_need_rb == pytest.approx(4.5)
    assert summary2.effective_bps == pytest.approx(300_000.0 / 4.5)


def test_expected_rates_keys(deployment, channel, mcs):
    stats = layer_statistics(deployment, channel, mcs, 1, n_points=256)
    rates = expected_rates(stats, mcs, 300_000.0)
    assert set(rates) == {"home", "fallback"}
    assert rates["home"].e_need_rb >= 1.0
    assert rates["fallback"].e_need_rb >= 1.0
