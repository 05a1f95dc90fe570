import logging
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dpst import system as sy
from dpst.config import DelaySearchConfig, ScenarioConfig, SimMode
from dpst.numerics import singular_values

SMALL_SEARCH = DelaySearchConfig(ensemble_size=40)


def scenario(**kw):
    kw.setdefault("n_drops", 20)
    kw.setdefault("search", SMALL_SEARCH)
    return ScenarioConfig(**kw)


def test_hex_layout_geometry():
    sites = sy.hex_layout(50.0)
    assert sites.shape == (7, 2)
    np.testing.assert_allclose(sites[1], [50.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(sites[1:], axis=1), 50.0, atol=1e-9)
    ring = sites[1:]
    np.testing.assert_allclose(np.linalg.norm(ring - np.roll(ring, 1, axis=0), axis=1), 50.0, atol=1e-9)
    with pytest.raises(ValueError):
        sy.hex_layout(0.0)


@given(st.integers(0, 2 ** 32 - 1), st.floats(10, 500))
def test_drops_fall_in_serving_hexagon(seed, isd):
    ue = sy.drop_ue(isd, np.random.default_rng(seed))
    sites = sy.hex_layout(isd)
    d = np.linalg.norm(sites - ue, axis=1)
    assert d[0] <= d[1:].min() + 1e-9


def test_los_probability_values():
    assert sy.los_probability(1e-9) == pytest.approx(1.0)
    assert sy.los_probability(18.0) == 1.0
    e = math.exp(-100 / 36)
    assert sy.los_probability(100.0) == pytest.approx(0.18 * (1 - e) + e, rel=1e-12)  # 0.2310
    with pytest.raises(ValueError):
        sy.los_probability(0.0)


@given(st.floats(1e-3, 1e4))
def test_los_probability_in_unit_interval(d):
    assert 0.0 <= sy.los_probability(d) <= 1.0


def test_pathloss_values():
    assert sy.pathloss_db(100, True, 2.0) == pytest.approx(44 + 28 + 20 * math.log10(2), abs=1e-9)
    assert sy.pathloss_db(100, True, 2.0) == pytest.approx(78.021, abs=1e-3)
    assert sy.pathloss_db(100, False, 2.0) == pytest.approx(103.926, abs=1e-3)


def test_los_below_nlos():
    bad = [(d, f) for f in (1.0, 2.0, 3.5, 6.0) for d in np.geomspace(1, 1000, 400)
           if not sy.pathloss_db(d, True, f) < sy.pathloss_db(d, False, f)]
    assert not bad, f"{len(bad)} (distance, GHz) points with LOS loss >= NLOS loss, e.g. {bad[0]}"


def test_pathloss_clamps_short_distance(caplog):
    with caplog.at_level(logging.WARNING):
        assert sy.pathloss_db(0.2, True, 2.0) == sy.pathloss_db(1.0, True, 2.0)
    assert "clamped" in caplog.text


def test_noise_power():
    assert 10 * math.log10(sy.noise_power_w(1e7, 9.0)) + 30 == pytest.approx(-95.0)


def _closed_form_sinr(dl, sc):
    # noise only, SVD precoding with equal power: SINR_l = g P sigma_l^2 / (L N0)
    p = 10 ** ((sc.bs_power_dbm - 30) / 10)
    n0 = sy.noise_power_w(sc.bandwidth_hz, sc.noise_figure_db)
    s = singular_values(dl.h_serv)
    return dl.serving_gain * p * s ** 2 / (len(s) * n0)


@pytest.mark.parametrize("mode", list(SimMode))
@pytest.mark.parametrize("n", [2, 4])
def test_single_cell_noise_only_matches_closed_form(mode, n):
    sc = scenario(mode=mode, mimo=n, single_cell=True)
    for i in range(5):
        dl = sy.drop_link(sc, i)
        np.testing.assert_allclose(dl.state.sinr, _closed_form_sinr(dl, sc), rtol=1e-8)


def test_optimum_streams_equal_sinr_single_cell():
    sc = scenario(mode=SimMode.OPTIMUM, single_cell=True)
    for i in range(50):
        db = sy.run_drop(sc, i).serving_sinr_db
        assert abs(db[0] - db[1]) < 0.1


def test_drop_deterministic():
    sc = scenario(mode=SimMode.DPST)
    a, b = sy.run_drop(sc, 7), sy.run_drop(sc, 7)
    assert a == b


def test_modes_share_drop_geometry():
    pos = {m: sy.run_drop(scenario(mode=m), 3).ue_position for m in SimMode}
    assert len(set(pos.values())) == 1


def test_threads_do_not_change_results():
    sc = scenario(mode=SimMode.DPST, n_drops=30)
    assert sy.run_drops(sc, threads=1) == sy.run_drops(sc, threads=4)


def test_run_scenario_optimum_condition():
    res = sy.run_scenario(scenario(mode=SimMode.OPTIMUM, n_drops=50))
    assert res["condnum"].median() == pytest.approx(1.0, abs=1e-6)
    assert set(res) == {"sinr", "throughput", "condnum"}
    assert all(len(c) == 50 for c in res.values())


def test_cdf_series():
    c = sy.CdfSeries([3.0, 1.0, 2.0, 4.0], "x")
    np.testing.assert_array_equal(c.sorted_values, [1, 2, 3, 4])
    np.testing.assert_array_equal(c.cumulative_probability(), [0.25, 0.5, 0.75, 1.0])
    assert c.median() == 2.5
    assert c.percentile(0) == 1.0 and c.percentile(100) == 4.0
    with pytest.raises(ValueError):
        c.percentile(101)


def test_channel_statistics_optimum():
    st_ = sy.channel_statistics(scenario(n_drops=200, mimo=4), SimMode.OPTIMUM)
    assert st_.mean_condition == pytest.approx(1.0, abs=1e-6)
    assert st_.mean_rank == 4


def test_channel_statistics_thread_invariant():
    sc = scenario(n_drops=100)
    a = sy.channel_statistics(sc, SimMode.CORRELATED, threads=1)
    b = sy.channel_statistics(sc, SimMode.CORRELATED, threads=3)
    assert a == b


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=50))
def test_cdf_series_properties(values):
    c = sy.CdfSeries(values, "x")
    assert np.all(np.diff(c.sorted_values) >= 0)
    assert c.percentile(0) == min(values) and c.percentile(100) == max(values)


@pytest.fixture(scope="module")
def medians():
    out = {}
    for n in (2, 4):
        for isd in (20.0, 100.0):
            for mode in (SimMode.CORRELATED, SimMode.DPST, SimMode.OPTIMUM):
                sc = ScenarioConfig(mimo=n, isd_m=isd, mode=mode, n_drops=2000)
                r = sy.run_scenario(sc)
                out[n, isd, mode] = (r["sinr"].median(), r["throughput"].median())
    return out


def test_densification_lowers_correlated_sinr(medians):
    for n in (2, 4):
        assert medians[n, 20.0, SimMode.CORRELATED][0] < medians[n, 100.0, SimMode.CORRELATED][0]


def test_median_throughput_ordering(medians):
    for n in (2, 4):
        for isd in (20.0, 100.0):
            c, d, o = (medians[n, isd, m][1] for m in (SimMode.CORRELATED, SimMode.DPST, SimMode.OPTIMUM))
            assert c <= d <= o, (n, isd, c, d, o)
