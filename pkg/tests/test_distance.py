import math

import numpy as np
import pytest
from scipy import integrate, stats

from occ_urllc.config import DistanceModel
from occ_urllc.distance import (DiscreteDistances, DistanceSampler, LognormalExpectation, lognormal_cdf,
                                lognormal_mean, lognormal_mode, lognormal_pdf, sample_distances, truncated_mass,
                                truncated_mean)

M = DistanceModel()


def test_mode_and_mean():
    assert lognormal_mode(M) == pytest.approx(math.exp(3.78 - 0.21**2), rel=1e-15)
    assert lognormal_mode(M) == pytest.approx(41.9257, abs=1e-4)
    assert lognormal_mean(M) == pytest.approx(44.7929, abs=1e-4)


def test_pdf_matches_scipy():
    d = np.linspace(1.0, 200.0, 50)
    ref = stats.lognorm(s=0.21, scale=math.exp(3.78)).pdf(d)
    assert lognormal_pdf(d, M) == pytest.approx(ref, rel=1e-12)
    with pytest.raises(ValueError):
        lognormal_pdf(0.0, M)


def test_pdf_normalised():
    f = lambda d: lognormal_pdf(d, M)
    body, _ = integrate.quad(f, 1e-9, 200.0, points=(30, 45, 60), limit=200, epsabs=1e-13)
    tail, _ = integrate.quad(f, 200.0, np.inf, epsabs=1e-13)
    assert body + tail == pytest.approx(1.0, abs=1e-9)


def test_truncated_mass():
    ref = 0.5 * math.erfc(-(math.log(90) - 3.78) / (0.21 * math.sqrt(2)))
    assert truncated_mass(M) == pytest.approx(ref, rel=1e-14)
    assert truncated_mass(M) == pytest.approx(0.99970, abs=1e-5)
    assert lognormal_cdf(90.0, M) == pytest.approx(truncated_mass(M))


def test_quadrature_mass_and_mean():
    e = LognormalExpectation(M)
    assert e.integrate(lambda d: np.ones_like(d)).value == pytest.approx(truncated_mass(M), abs=1e-12)
    mean = e.integrate(lambda d: d).value / truncated_mass(M)
    assert mean == pytest.approx(truncated_mean(M), rel=1e-11)


def test_discrete_quantiles():
    q = DiscreteDistances.quantiles(M, 16)
    assert q.distances.size == 16
    assert np.all(np.diff(q.distances) > 0)
    assert q.mass == pytest.approx(truncated_mass(M))
    assert q.distances.max() < M.d_max
    assert q.expect(lambda d: np.ones_like(d)) == pytest.approx(q.mass)


def test_sampler_reproducible():
    s = DistanceSampler(M, seed=7)
    a = s.sample(20_000)
    b = DistanceSampler(M, seed=7).sample(20_000)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, DistanceSampler(M, seed=8).sample(20_000))


def test_sampler_batches_independent_of_order():
    s = DistanceSampler(M, seed=3)
    forward = [s.batch(i, 100) for i in range(4)]
    backward = [s.batch(i, 100) for i in reversed(range(4))][::-1]
    for a, b in zip(forward, backward):
        assert np.array_equal(a, b)


def test_samples_truncated_and_mean():
    x = sample_distances(100_000, DistanceSampler(M, seed=11))
    assert x.size == 100_000
    assert np.all((x > 0) & (x <= 90.0))
    assert abs(x.mean() - truncated_mean(M)) <= 3 * x.std() / math.sqrt(x.size)
    assert x.mean() == pytest.approx(44.7, abs=0.5)


def test_reject_count_marks_tail():
    x = DistanceSampler(M, seed=11, truncation="reject-count").sample(200_000)
    frac = np.isnan(x).mean()
    tail = 1 - truncated_mass(M)
    assert abs(frac - tail) < 4 * math.sqrt(tail / x.size)


def test_sampler_validation():
    with pytest.raises(ValueError):
        DistanceSampler(M, truncation="clip")
    with pytest.raises(ValueError):
        DistanceSampler(M).sample(0)
