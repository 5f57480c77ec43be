import math

import numpy as np
import pytest

from occ_urllc.config import dbw_to_watts
from occ_urllc.distance import DistanceSampler, truncated_mass
from occ_urllc.link import DEFAULT_MODULATION_SET
from occ_urllc.optimizer import Problem, solve_continuous
from occ_urllc.sweeps import (SWEEP_KINDS, coverage_distance, fingerprint, monte_carlo_average, run_sweep,
                              sweep_defaults)


@pytest.fixture(scope="module")
def policy(calibrated):
    return solve_continuous(Problem.from_scenario(calibrated))


def test_constant_policy_exact(calibrated):
    r0 = 1.234567e6
    res = monte_carlo_average(lambda d: np.full(d.shape, r0), DistanceSampler(calibrated.distance, 1), 30_000)
    assert res.avg_rate == r0
    assert res.std_error == 0.0


def test_mc_matches_quadrature(policy, calibrated):
    mc = monte_carlo_average(policy, DistanceSampler(calibrated.distance, 5), 100_000)
    quad = policy.avg_rate / truncated_mass(calibrated.distance)     # resampling gives the conditional mean
    assert abs(mc.avg_rate - quad) <= 3 * mc.std_error
    assert abs(mc.avg_rate - quad) / quad <= 0.01


def test_mc_reject_count_estimates_unnormalised(policy, calibrated):
    s = DistanceSampler(calibrated.distance, 5, truncation="reject-count")
    mc = monte_carlo_average(policy, s, 100_000)
    assert abs(mc.avg_rate - policy.avg_rate) <= 3 * mc.std_error
    assert mc.rejected_fraction < 0.01


def test_mc_workers_identical(policy, calibrated):
    s = DistanceSampler(calibrated.distance, 9)
    a = monte_carlo_average(policy, s, 50_000, batch_size=4096)
    b = monte_carlo_average(policy, s, 50_000, batch_size=4096, workers=4)
    assert a == b


def test_mc_doubling_consistent(policy, calibrated):
    s = DistanceSampler(calibrated.distance, 21)
    a = monte_carlo_average(policy, s, 50_000)
    b = monte_carlo_average(policy, s, 100_000)
    assert abs(a.avg_rate - b.avg_rate) <= 3 * math.hypot(a.std_error, b.std_error)


def test_unknown_kind():
    with pytest.raises(ValueError):
        sweep_defaults("ber_vs_weather")


def test_unknown_option(calibrated):
    with pytest.raises(TypeError):
        run_sweep("ber_vs_snr", calibrated, colour="red")


def test_ber_vs_snr(calibrated):
    res = run_sweep("ber_vs_snr", calibrated)
    assert res.names == [m.name for m in DEFAULT_MODULATION_SET]
    ys = []
    for s in res.series:
        assert np.all(np.diff(s.x) >= 0)
        pos = s.y > 0
        assert np.all(np.diff(s.y[pos]) < 0)
        ys.append(s.y)
    # BPSK lowest at every SNR
    assert np.all(ys[0] <= np.min(ys, axis=0))


def test_coverage_distances_decrease_with_order(calibrated):
    d = [coverage_distance(m, 1e-4, calibrated) for m in DEFAULT_MODULATION_SET]
    assert all(a > b for a, b in zip(d, d[1:]))


def test_ber_vs_aoi_cutoff(calibrated):
    res = run_sweep("ber_vs_aoi", calibrated, aois_deg=np.array([0.0, 45.0, 89.0]))
    bpsk = res.get("BPSK").y
    assert bpsk[0] < bpsk[1] < bpsk[2]


def test_se_latency_plateau(calibrated):
    res = run_sweep("se_latency_vs_distance", calibrated)
    se = res.get("se_ber1e-04")
    assert np.all(np.diff(se.y) <= 0)
    assert se.y[0] == 6.0
    lat = res.get("latency_ber1e-04")
    # 52 m sits exactly on the 64-QAM boundary, so check just inside it
    assert lat.y[se.x == 51.0][0] == pytest.approx(1e-3 * 51 / 52, rel=1e-12)


def test_power_vs_distance_shape(calibrated):
    res = run_sweep("power_vs_distance", calibrated)
    y = res.get("ber1e-04").y
    i = int(np.argmin(y))
    assert 0 < i < y.size - 1
    assert np.all(np.diff(y[: i + 1]) <= 0)
    assert np.all(np.diff(y[i:]) > 0)      # latency floor drives the far end up
    assert 60.0 < res.get("ber1e-04").x[i] < 90.0


def test_rate_vs_pmax_series(calibrated):
    res = run_sweep("rate_vs_pmax", calibrated, pmax_dbw=np.array([5.0, 10.0]), k_override=1.0)
    assert set(res.names) == {"continuous_ber1e-04", "discrete_ber1e-04", "continuous_ber1e-05",
                                "discrete_ber1e-05", "continuous_k1", "discrete_k1"}
    assert res.x_unit == "W"
    c, dsc = res.get("continuous_ber1e-04").y, res.get("discrete_ber1e-04").y
    assert np.all(dsc <= c) and c[1] > c[0]
    assert res.get("continuous_ber1e-04").x[0] == pytest.approx(dbw_to_watts(5.0))


def test_fingerprint_sensitivity(calibrated):
    opts = sweep_defaults("ber_vs_snr")
    a = fingerprint("ber_vs_snr", calibrated, opts)
    assert a == fingerprint("ber_vs_snr", calibrated, dict(opts))
    other = calibrated.replace(params=calibrated.params.replace(i2=0.5621))
    assert a != fingerprint("ber_vs_snr", other, opts)
    assert a != fingerprint("ber_vs_snr", calibrated, dict(opts, power_w=1.3))


@pytest.mark.parametrize("kind", SWEEP_KINDS)
def test_sweeps_deterministic(kind, calibrated):
    small = {"pmax_dbw": np.array([6.0, 9.0])} if kind in ("rate_vs_pmax", "latency_vs_pmax", "peak_vs_avg",
                                                          "papr_vs_avg") else {}
    a = run_sweep(kind, calibrated, **small)
    b = run_sweep(kind, calibrated, **small)
    assert a.fingerprint == b.fingerprint
    for s, t in zip(a.series, b.series):
        assert np.array_equal(s.x, t.x) and np.array_equal(s.y, t.y, equal_nan=True)
