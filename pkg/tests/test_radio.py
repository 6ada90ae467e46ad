import math

import numpy as np
import pytest
from scipy import stats

from hetsim.radio import (
    DEFAULT_NOISE_DBM,
    OUTAGE,
    RB_UNSERVABLE,
    ChannelModel,
    McsTable,
    default_mcs_table,
    draw_shadowing,
    link_distances,
    snr_matrix,
)
from hetsim.scenario import generate_deployment


# ----------------------------------------------------------------- channel

def test_default_noise_value():
    expected = -174.0 + 10.0 * math.log10(180e3) + 9.0
    assert DEFAULT_NOISE_DBM == pytest.approx(expected, abs=1e-9)
    assert DEFAULT_NOISE_DBM == pytest.approx(-112.447, abs=1e-3)


def test_snr_worked_example():
    # 17 dBm at 25 m under the small-cell law with -121.45 dBm noise
    ch = ChannelModel(noise_dbm=-121.45)
    snr = ch.snr_db(17.0, 25.0, small_cell=True, shadow_db=0.0)
    assert snr == pytest.approx(70.59, abs=0.01)


def test_path_loss_laws_at_one_km():
    ch = ChannelModel()
    assert ch.path_loss_db(1000.0, False) == pytest.approx(140.7)
    assert ch.path_loss_db(1000.0, True) == pytest.approx(128.1)


def test_doubling_distance_macro_slope():
    ch = ChannelModel()
    drop = ch.path_loss_db(500.0, False) - ch.path_loss_db(250.0, False)
    assert drop == pytest.approx(36.7 * math.log10(2.0), abs=1e-9)


def test_distance_clamped_at_one_metre():
    ch = ChannelModel()
    assert ch.path_loss_db(0.0, True) == ch.path_loss_db(1.0, True)
    assert ch.path_loss_db(0.5, False) == ch.path_loss_db(1.0, False)


def test_channel_dict_roundtrip():
    ch = ChannelModel(noise_dbm=-120.0)
    again = ChannelModel.from_dict(ch.to_dict())
    assert again == ch
    with pytest.raises(ValueError):
        ChannelModel.from_dict({"bogus": 1})


def test_shadow_distribution_is_gaussian(scenario, channel):
    dep = generate_deployment(scenario, 40, np.random.default_rng(0))
    draws = np.stack(
        [
            draw_shadowing(channel, dep, np.random.default_rng(k))
            for k in range(2500)
        ]
    )
    macro_samples = draws[:, :, 0].ravel()
    sc_samples = draws[:, :, 1].ravel()
    assert np.std(macro_samples) == pytest.approx(8.0, rel=0.02)
    assert np.std(sc_samples) == pytest.approx(10.0, rel=0.02)
    # KS against the target normal on a large subsample
    stat, _ = stats.kstest(macro_samples[:100_000] / 8.0, "norm")
    assert stat < 0.01


def test_snr_matrix_shape(scenario, channel):
    dep = generate_deployment(scenario, 15, np.random.default_rng(1))
    shadow = draw_shadowing(channel, dep, np.random.default_rng(2))
    snr = snr_matrix(channel, dep, shadow)
    assert snr.shape == (15, scenario.n_small_cells + 1)
    dist = link_distances(dep)
    assert dist.shape == snr.shape


# --------------------------------------------------------------------- MCS

RATES_KBPS = [
    42.0, 67.2, 84.0, 112.0, 168.0, 224.0, 252.0,
    336.0, 448.0, 504.0, 672.0, 756.0, 806.4,
]


def test_mcs_table_frozen_rates(mcs):
    assert len(mcs) == 13
    assert list(mcs.rate_kbps) == pytest.approx(RATES_KBPS)


def test_mcs_thresholds_evenly_spaced(mcs):
    th = np.asarray(mcs.snr_min_db)
    assert th[0] == pytest.approx(-6.7)
    assert th[-1] == pytest.approx(17.5)
    steps = np.diff(th)
    assert np.allclose(steps, (17.5 - (-6.7)) / 12)


def test_mcs_select_boundaries(mcs):
    th = np.asarray(mcs.snr_min_db)
    assert mcs.select(th[0]) == 0
    assert mcs.select(th[0] - 1e-9) == OUTAGE
    assert mcs.select(th[-1]) == 12
    assert mcs.select(th[-1] + 50.0) == 12
    assert mcs.select(th[5] + 1e-9) == 5
    assert mcs.select(th[5] - 1e-9) == 4


def test_mcs_select_vector_matches_scalar(mcs):
    snr = np.linspace(-15.0, 30.0, 400)
    vec = mcs.select(snr)
    scal = np.array([mcs.select(float(s)) for s in snr])
    assert np.array_equal(vec, scal)


def test_rb_demand(mcs):
    assert mcs.rb_demand(300_000.0, 12) == 1
    assert mcs.rb_demand(300_000.0, 7) == 1
    assert mcs.rb_demand(300_000.0, 6) == 2
    assert mcs.rb_demand(300_000.0, 0) == 8
    assert mcs.rb_demand(300_000.0, OUTAGE) == RB_UNSERVABLE


def test_rate_bps(mcs):
    assert mcs.rate_bps(0) == pytest.approx(42_000.0)
    assert mcs.rate_bps(12) == pytest.approx(806_400.0)
    assert mcs.rate_bps(OUTAGE) == 0.0


def test_rates_strictly_increasing(mcs):
    assert (np.diff(mcs.rate_kbps) > 0).all()


def test_mcs_json_roundtrip(mcs, tmp_path):
    path = tmp_path / "mcs.json"
    mcs.to_json(str(path))
    again = McsTable.from_json(str(path))
    assert list(again.rate_kbps) == list(mcs.rate_kbps)
    assert list(again.snr_min_db) == list(mcs.snr_min_db)


def test_mcs_table_rejects_unsorted():
    table = default_mcs_table()
    data = {
        "entries": [
            {
                "name": e.name,
                "bits_per_symbol": e.bits_per_symbol,
                "code_rate": e.code_rate,
                "rate_kbps": e.rate_kbps,
                "snr_min_db": e.snr_min_db,
            }
            for e in table.entries
        ]
    }
    data["entries"][0], data["entries"][1] = data["entries"][1], data["entries"][0]
    with pytest.raises(ValueError):
        McsTable.from_dict(data)
