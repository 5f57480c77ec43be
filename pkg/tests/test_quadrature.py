import math

import numpy as np
import pytest

from occ_urllc.quadrature import QuadratureError, gk_integrate


@pytest.mark.parametrize("deg", range(0, 23))
def test_kronrod_exact_for_polynomials(deg):
    r = gk_integrate(lambda x: x**deg, 0.0, 1.0, initial_panels=1, max_rounds=1, raise_on_fail=False)
    assert r.value == pytest.approx(1.0 / (deg + 1), rel=1e-13)


def test_smooth_integrand():
    r = gk_integrate(np.exp, 0.0, 3.0)
    assert r.value == pytest.approx(math.exp(3.0) - 1.0, rel=1e-13)
    assert r.error <= 1e-9


def test_kink_with_breakpoint():
    f = lambda x: np.abs(x - 1.0 / 3.0)
    exact = (1 / 3) ** 2 / 2 + (2 / 3) ** 2 / 2
    r = gk_integrate(f, 0.0, 1.0, breakpoints=(1.0 / 3.0,), initial_panels=1, max_rounds=1)
    assert r.value == pytest.approx(exact, rel=1e-14)


def test_kink_without_breakpoint_adapts():
    f = lambda x: np.abs(x - 1.0 / 3.0)
    exact = (1 / 3) ** 2 / 2 + (2 / 3) ** 2 / 2
    assert gk_integrate(f, 0.0, 1.0).value == pytest.approx(exact, abs=1e-9)


def test_failure_reports_estimate():
    with pytest.raises(QuadratureError) as exc:
        gk_integrate(lambda x: np.sin(1.0 / x), 1e-12, 1.0, abs_tol=1e-15, rel_tol=0.0, max_rounds=2)
    assert exc.value.error > exc.value.tol


def test_reversed_or_empty_interval():
    assert gk_integrate(np.exp, 1.0, 1.0).value == 0.0
