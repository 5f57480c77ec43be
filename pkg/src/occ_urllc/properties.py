"""Randomised property suites for the optimiser, shared by tests and ``validate``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import optimizer
from .config import Scenario, dbw_to_watts
from .link import approx_ber, continuous_order
from .optimizer import Problem, concavity_floor, negative_root, solve_continuous

_EPS = np.finfo(float).eps


@dataclass
class PropertyReport:
    name: str
    passed: bool
    checked: int
    witness: dict | None = None
    detail: str = ""
    stats: dict = field(default_factory=dict)


def _rng(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def _log_uniform(rng, lo, hi, n):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), n))


def _rate(p, d, s, l0, k):
    return l0 / d * np.log1p(k * s * p * p) / math.log(2.0)


def second_difference(p, d, s, l0, k, rel_step=1e-4):
    """Central second difference of the continuous rate in power, with a round-off bound."""
    h = rel_step * p
    c0 = _rate(p, d, s, l0, k)
    d2 = (_rate(p + h, d, s, l0, k) - 2.0 * c0 + _rate(p - h, d, s, l0, k)) / (h * h)
    return d2, 8.0 * _EPS * np.abs(c0) / (h * h)


def _sample_links(rng, n, l0):
    d = rng.uniform(1.0, 90.0, n)
    s = _log_uniform(rng, 1e-2, 1e6, n)
    k = -1.5 / np.log(5.0 * _log_uniform(rng, 1e-9, 1e-2, n))
    return d, s, k, np.full(n, l0)


def lemma1_concavity(seed=1, n=10_000, l0=4.3e7) -> PropertyReport:
    """Rate is concave in power above sqrt(1/(K S)) and convex 0.1% or more below it."""
    rng = _rng(seed)
    d, s, k, l0v = _sample_links(rng, n, l0)
    floor = concavity_floor(s, k)
    above = floor * (1.0 + _log_uniform(rng, 1e-6, 1e3, n))
    above[: n // 100] = floor[: n // 100]          # include the boundary itself
    below = floor * (1.0 - rng.uniform(1e-3, 0.999, n))

    d2a, tol_a = second_difference(above, d, s, l0v, k)
    bad = np.flatnonzero(d2a > tol_a)
    if bad.size:
        i = bad[0]
        return PropertyReport("lemma1_concavity", False, n, dict(D=d[i], S=s[i], K=k[i], P=above[i], d2=d2a[i]),
                              "positive curvature at or above the concavity floor")
    d2b, tol_b = second_difference(below, d, s, l0v, k)
    bad = np.flatnonzero(~(d2b > tol_b))
    if bad.size:
        i = bad[0]
        return PropertyReport("lemma1_concavity", False, n, dict(D=d[i], S=s[i], K=k[i], P=below[i], d2=d2b[i]),
                              "non-positive curvature below the concavity floor")
    return PropertyReport("lemma1_concavity", True, 2 * n)


def lemma2_negative_root(seed=2, n=1000, l0=4.3e7, dual_fn=None) -> PropertyReport:
    """The minus-sign root of the stationarity condition always violates the floor.

    Also checks that the root actually used (``dual_fn``) clears the floor,
    so a sign error in the dual power formula is caught.
    """
    dual_fn = optimizer.dual_power_array if dual_fn is None else dual_fn
    rng = _rng(seed)
    d, s, k, l0v = _sample_links(rng, n, l0)
    lam_crit = l0v * np.sqrt(k * s) / d
    lam = lam_crit * _log_uniform(rng, 1e-6, 1.0 - 1e-9, n)
    floor = concavity_floor(s, k)
    neg = negative_root(lam, d, s, l0v, k)
    pos = dual_fn(lam, d, s, l0v, k)
    selected = np.maximum(pos, floor)
    checks = [
        (neg < floor, "negative root not strictly below the concavity floor", neg),
        (pos >= floor * (1 - 1e-12), "selected dual root below the concavity floor", pos),
        (selected > neg, "negative root selected by the allocation", selected),
    ]
    for ok, msg, val in checks:
        bad = np.flatnonzero(~ok)
        if bad.size:
            i = bad[0]
            return PropertyReport("lemma2_negative_root", False, n,
                                  dict(lam=lam[i], D=d[i], S=s[i], K=k[i], P=float(val[i]), floor=floor[i]), msg)
    return PropertyReport("lemma2_negative_root", True, n)


def inversion_identity(seed=3, n=10_000, rtol=1e-12) -> PropertyReport:
    """approx_ber(P, S, continuous_order(P, S, K)) == BER target.

    Inputs keep K P^2 S >= 1e-2 so that ``M - 1`` is not lost to cancellation
    in ``1 + K P^2 S``.
    """
    rng = _rng(seed)
    ber = _log_uniform(rng, 1e-9, 1e-2, n)
    k = -1.5 / np.log(5.0 * ber)
    s = _log_uniform(rng, 1e-2, 1e6, n)
    x = _log_uniform(rng, 1e-2, 1e6, n)
    p = np.sqrt(x / (k * s))
    got = approx_ber(p, s, continuous_order(p, s, k))
    err = np.abs(got - ber) / ber
    i = int(np.argmax(err))
    if err[i] > rtol:
        return PropertyReport("inversion_identity", False, n, dict(P=p[i], S=s[i], K=k[i], ber=ber[i], got=got[i]),
                              f"relative error {err[i]:.3g} > {rtol:g}")
    return PropertyReport("inversion_identity", True, n, stats={"max_rel_err": float(err[i])})


def budget_tightness(sc: Scenario, pmax_dbw=np.arange(5.0, 16.0, 1.0), ber_targets=(1e-4, 1e-5),
                     rtol=1e-3) -> PropertyReport:
    """After bisection the expected allocated power equals the budget."""
    worst = 0.0
    count = 0
    for ber in ber_targets:
        for pdb in pmax_dbw:
            spec = sc.spec.replace(ber_tgt=float(ber), p_max=dbw_to_watts(float(pdb)))
            sol = solve_continuous(Problem.from_scenario(sc.replace(spec=spec)))
            gap = abs(sol.avg_power - sol.problem.p_max) / sol.problem.p_max
            worst = max(worst, gap)
            count += 1
            if gap > rtol:
                return PropertyReport("budget_tightness", False, count,
                                      dict(ber_tgt=ber, pmax_dbw=float(pdb), lam=sol.lam, avg_power=sol.avg_power),
                                      f"relative budget gap {gap:.3g} > {rtol:g}")
    return PropertyReport("budget_tightness", True, count, stats={"max_rel_gap": worst})


def _guarded(name, fn, *args, **kw) -> PropertyReport:
    try:
        return fn(*args, **kw)
    except Exception as exc:          # a crashing suite is a failing suite
        return PropertyReport(name, False, 0, None, f"{type(exc).__name__}: {exc}")


def run_all(sc: Scenario, seed=0, dual_fn=None):
    return [
        _guarded("lemma1_concavity", lemma1_concavity, seed + 1, l0=sc.params.l0),
        _guarded("lemma2_negative_root", lemma2_negative_root, seed + 2, l0=sc.params.l0, dual_fn=dual_fn),
        _guarded("inversion_identity", inversion_identity, seed + 3),
        _guarded("budget_tightness", budget_tightness, sc),
    ]
