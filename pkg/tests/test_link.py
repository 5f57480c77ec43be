import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from occ_urllc.link import (BPSK, DEFAULT_MODULATION_SET, OUTAGE_LATENCY, ModulationScheme, approx_ber,
                            ber_gap_constant, best_feasible_modulation, continuous_order, continuous_rate,
                            discrete_rate, exact_ber, feasible_scheme_index, latency, parse_scheme, q_function)

QAM16, QAM64 = ModulationScheme(16), ModulationScheme(64)


def test_q_function_values():
    assert q_function(0.0) == 0.5
    assert q_function(np.inf) == 0.0
    assert q_function(1.0) == pytest.approx(0.158655, abs=5e-7)


@pytest.mark.parametrize("x", [0.3, 2.0, 5.0, 8.0, 20.0])
def test_q_function_tail_accuracy(x):
    ref = float(mpmath.erfc(mpmath.mpf(x) / mpmath.sqrt(2)) / 2)
    assert q_function(x) == pytest.approx(ref, rel=1e-12)


@given(st.floats(-30, 30))
def test_q_symmetry(x):
    assert q_function(-x) == pytest.approx(1 - q_function(x), abs=1e-15)


def test_exact_ber_reference_points():
    assert exact_ber(BPSK, 0.0) == 0.5
    assert exact_ber(QAM16, 0.0) == 0.5
    assert exact_ber(BPSK, 9.094) == pytest.approx(1e-5, rel=1e-3)


def test_exact_ber_decreasing():
    g = np.geomspace(1e-2, 150.0, 200)   # stays above float underflow
    for mod in DEFAULT_MODULATION_SET:
        b = exact_ber(mod, g)
        assert np.all(np.diff(b) < 0)


def test_exact_ber_ordering_at_equal_snr():
    b = [exact_ber(m, 30.0) for m in DEFAULT_MODULATION_SET]
    assert b == sorted(b)


def test_approx_ber():
    assert approx_ber(0.0, 3.0, 4) == pytest.approx(0.2)
    assert approx_ber(math.sqrt(10.0), 1.0, 4) == pytest.approx(0.2 * math.exp(-5), rel=1e-14)
    assert approx_ber(math.sqrt(10.0), 1.0, 4) == pytest.approx(1.348e-3, rel=1e-3)
    m = 16
    p2s = (m - 1) * math.log(5e-4) / -1.5
    assert approx_ber(math.sqrt(p2s), 1.0, m) == pytest.approx(1e-4, rel=1e-14)
    with pytest.raises(ValueError):
        approx_ber(1.0, 1.0, 1.0)


def test_continuous_order():
    assert continuous_order(0.0, 5.0, 0.2) == 1.0
    assert continuous_order(math.sqrt(3.0), 1.0, 1.0) == pytest.approx(4.0)


@given(st.floats(1e-3, 1e2), st.floats(1e-1, 1e4), st.sampled_from([1e-3, 1e-4, 1e-5, 1e-6]))
def test_inversion_round_trip(p, s, ber):
    k = ber_gap_constant(ber)
    if k * p * p * s < 1e-2:
        return
    assert approx_ber(p, s, continuous_order(p, s, k)) == pytest.approx(ber, rel=1e-12)


def test_continuous_rate():
    l0 = 4e7
    assert continuous_rate(0.0, 10.0, 5.0, l0, 0.2) == 0.0
    assert continuous_rate(1.0, 10.0, 5.0, l0, 0.2) == pytest.approx(l0 / 10.0)
    assert continuous_rate(2.0, 20.0, 5.0, l0, 0.2) == pytest.approx(continuous_rate(2.0, 10.0, 5.0, l0, 0.2) / 2)
    with pytest.raises(ValueError):
        continuous_rate(1.0, 0.0, 1.0, l0, 0.2)


def test_discrete_rate_and_latency():
    l0 = 4e7
    assert discrete_rate(BPSK, 8.0, l0) == l0 / 8.0
    assert discrete_rate(QAM64, 8.0, l0) == pytest.approx(6 * l0 / 8.0)
    assert latency(5e6, 5000.0) == pytest.approx(1e-3)
    assert latency(1e7, 5000.0) == pytest.approx(latency(5e6, 5000.0) / 2)
    assert latency(0.0, 5000.0) == OUTAGE_LATENCY
    with pytest.raises(ValueError):
        discrete_rate(BPSK, -1.0, l0)


@given(st.floats(1.0, 1e9))
def test_latency_rate_product(r):
    assert latency(r, 5000.0) * r == pytest.approx(5000.0, rel=1e-15)


def test_modulation_scheme_basics():
    assert BPSK.spectral_efficiency == 1.0 and QAM64.spectral_efficiency == 6.0
    assert sorted(DEFAULT_MODULATION_SET, key=lambda m: m.spectral_efficiency) == list(DEFAULT_MODULATION_SET)
    for bad in (3, 6, 2):
        with pytest.raises(ValueError):
            ModulationScheme(bad)
    assert parse_scheme("16qam") == QAM16
    assert parse_scheme("bpsk") == BPSK
    assert parse_scheme(64) == QAM64


def test_best_feasible_modulation():
    assert best_feasible_modulation(0.0, DEFAULT_MODULATION_SET, 1e-4) is None
    assert best_feasible_modulation(1e6, DEFAULT_MODULATION_SET, 1e-4) == QAM64
    with pytest.raises(ValueError):
        best_feasible_modulation(1.0, (), 1e-4)


def test_feasible_index_monotone_in_snr():
    snr = np.geomspace(1.0, 1e4, 500)
    idx = feasible_scheme_index(snr, DEFAULT_MODULATION_SET, 1e-4)
    assert np.all(np.diff(idx) >= 0)
    assert idx[0] == -1 and idx[-1] == len(DEFAULT_MODULATION_SET) - 1


def test_selected_scheme_nonincreasing_in_distance(calibrated):
    from occ_urllc.channel import cnr_at
    d = np.linspace(1.0, 150.0, 300)
    snr = 1.44 * cnr_at(d, calibrated.params)
    idx = feasible_scheme_index(snr, DEFAULT_MODULATION_SET, 1e-4)
    assert np.all(np.diff(idx) <= 0)
