"""Average-rate maximisation under average power, BER and latency constraints.

The continuous-rate problem is solved by Lagrangian relaxation of the average
power constraint: for a multiplier ``lam`` each distance gets the stationary
power of ``(l0/D) log2(1 + K P^2 S) - lam P``, raised to the latency and
concavity floors. ``lam`` is found by bisection on the budget gap. The
discrete-rate policy floors the resulting continuous rate onto the modulation
set.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .channel import cnr_at
from .config import Scenario
from .distance import DiscreteDistances, LognormalExpectation
from .link import continuous_rate, exact_ber, latency as packet_latency

ACTIVE_TERMS = ("dual", "latency", "concavity")

# Relative slack in the rate bracket test, so that a power sitting exactly on
# a floor is not pushed below a threshold by rounding.
_BRACKET_RTOL = 1e-9


class InfeasibleBudgetError(ValueError):
    """The power floors alone need more average power than the budget allows."""

    def __init__(self, p_max, floor_power):
        self.p_max = p_max
        self.floor_power = floor_power
        super().__init__(
            f"average power budget {p_max:.6g} W is below the floor-only average power {floor_power:.6g} W"
        )


# --- per-distance power terms -------------------------------------------------

def concavity_floor(cnr, k):
    """Smallest power at which the rate is concave in power, sqrt(1 / (K S)).

    Zero CNR gives ``inf`` (no power makes the link usable).
    """
    ks = k * np.asarray(cnr, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(ks > 0, np.sqrt(1.0 / np.where(ks > 0, ks, 1.0)), np.inf)
    return out[()] if out.ndim == 0 else out


def latency_floor(distance, cnr, l0, k, packet_size, tau_max):
    """Smallest power whose continuous rate delivers ``packet_size`` within ``tau_max``.

    Overflowing exponents (very long links) give ``inf``.
    """
    d = np.asarray(distance, dtype=float)
    if np.any(~(d > 0)):
        raise ValueError("distance must be > 0")
    ks = k * np.asarray(cnr, dtype=float)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        need = np.expm1(d * packet_size / (l0 * tau_max) * math.log(2.0))
        out = np.where(ks > 0, np.sqrt(need / np.where(ks > 0, ks, 1.0)), np.inf)
    out = np.where(np.isnan(out), np.inf, out)
    return out[()] if out.ndim == 0 else out


def _dual_terms(lam, distance, cnr, l0, k):
    a = l0 / (lam * np.asarray(distance, dtype=float))
    ks = k * np.asarray(cnr, dtype=float)
    with np.errstate(divide="ignore"):
        b2 = np.where(ks > 0, 1.0 / np.where(ks > 0, ks, 1.0), np.inf)
    return a, b2, a * a - b2


def dual_power_array(lam, distance, cnr, l0, k):
    """Vectorised :func:`dual_power`; NaN where the discriminant is negative."""
    if np.any(np.asarray(lam) <= 0):
        raise ValueError("lambda must be > 0")
    a, _, disc = _dual_terms(lam, distance, cnr, l0, k)
    with np.errstate(invalid="ignore"):
        return np.where(disc >= 0, a + np.sqrt(disc), np.nan)


def dual_power(lam, distance, cnr, l0, k):
    """Stationary power l0/(lam D) + sqrt(l0^2/(lam D)^2 - 1/(K S)).

    Returns ``None`` for scalar inputs whose discriminant is negative; array
    inputs get NaN at those entries.
    """
    out = dual_power_array(lam, distance, cnr, l0, k)
    if np.ndim(out) == 0:
        return None if np.isnan(out) else float(out)
    return out


def negative_root(lam, distance, cnr, l0, k):
    """The discarded root l0/(lam D) - sqrt(...), in cancellation-free form."""
    a, b2, disc = _dual_terms(lam, distance, cnr, l0, k)
    with np.errstate(invalid="ignore"):
        return np.where(disc >= 0, b2 / (a + np.sqrt(np.maximum(disc, 0.0))), np.nan)


def negative_root_invalid(lam, distance, cnr, l0, k):
    """True iff the negative root lies strictly below the concavity floor."""
    _, _, disc = _dual_terms(lam, distance, cnr, l0, k)
    if np.any(disc < 0):
        raise ValueError("discriminant must be non-negative")
    return negative_root(lam, distance, cnr, l0, k) < concavity_floor(cnr, k)


def lagrangian_slope(power, lam, distance, cnr, l0, k):
    """d/dP of (l0/D) ln(1 + K P^2 S) - lam P.

    The closed-form dual power is the stationary point of this integrand, so
    ``lam`` prices rate in nats; in bits the multiplier is ``lam / ln 2``.
    The allocation is the same either way because ``lam`` is found by bisection.
    """
    ks = k * np.asarray(cnr, dtype=float)
    p = np.asarray(power, dtype=float)
    return l0 / np.asarray(distance, dtype=float) * 2.0 * ks * p / (1.0 + ks * p * p) - lam


# --- problem bundle -----------------------------------------------------------

@dataclass(frozen=True)
class Problem:
    """Everything the solvers need, decoupled from the configuration objects."""

    l0: float
    k: float
    packet_size: float
    tau_max: float
    p_max: float
    ber_tgt: float
    schemes: tuple
    cnr_fn: Callable
    expectation: object
    peak_grid: np.ndarray = field(repr=False)

    @classmethod
    def from_scenario(cls, sc: Scenario, k_override=None, expectation=None) -> "Problem":
        params = sc.params
        exp = LognormalExpectation(sc.distance) if expectation is None else expectation
        if isinstance(exp, DiscreteDistances):
            grid = np.sort(exp.distances)
        else:
            grid = np.arange(1.0, math.floor(sc.distance.d_max) + 1.0)
        schemes = tuple(sorted(sc.spec.modulation_set, key=lambda mo: mo.spectral_efficiency))
        return cls(
            l0=params.l0,
            k=sc.spec.k if k_override is None else float(k_override),
            packet_size=params.packet_size,
            tau_max=sc.spec.tau_max,
            p_max=sc.spec.p_max,
            ber_tgt=sc.spec.ber_tgt,
            schemes=schemes,
            cnr_fn=lambda d: cnr_at(d, params),
            expectation=exp,
            peak_grid=grid,
        )

    def with_budget(self, p_max: float) -> "Problem":
        return dataclasses.replace(self, p_max=float(p_max))

    def latency_floor(self, distance, cnr=None):
        s = self.cnr_fn(distance) if cnr is None else cnr
        return latency_floor(distance, s, self.l0, self.k, self.packet_size, self.tau_max)

    def concavity_floor(self, distance, cnr=None):
        s = self.cnr_fn(distance) if cnr is None else cnr
        return concavity_floor(s, self.k)

    def breakpoints(self, lam=None):
        """Distances where the optimal power profile has a kink."""
        lo, hi = self.expectation.support
        pts = []
        d_eq = self.l0 * self.tau_max / self.packet_size   # latency floor == concavity floor
        if lo < d_eq < hi:
            pts.append(d_eq)
        if lam is not None:
            def disc(d):
                return 1.0 - lam * d / (self.l0 * math.sqrt(self.k * float(self.cnr_fn(d))))
            try:
                if disc(lo) > 0 > disc(hi):
                    pts.append(brentq(disc, lo, hi, xtol=1e-12))
            except (ValueError, ZeroDivisionError):
                pass
        return pts


def optimal_power(lam, distance, problem: Problem, cnr=None):
    """Power allocation max(dual, latency floor, concavity floor) and the attaining term.

    The dual term drops out where its discriminant is negative. The tag is a
    string array naming the term that attains the maximum (ties resolve to
    the earlier of dual, latency, concavity).
    """
    d = np.asarray(distance, dtype=float)
    s = problem.cnr_fn(d) if cnr is None else np.asarray(cnr, dtype=float)
    dual = dual_power_array(lam, d, s, problem.l0, problem.k)
    lat = latency_floor(d, s, problem.l0, problem.k, problem.packet_size, problem.tau_max)
    conc = concavity_floor(s, problem.k)
    terms = np.stack(np.broadcast_arrays(np.where(np.isnan(dual), -np.inf, dual), lat, conc))
    which = np.argmax(terms, axis=0)
    power = np.take_along_axis(terms, which[None], axis=0)[0]
    tags = np.asarray(ACTIVE_TERMS)[which]
    if power.ndim == 0:
        return float(power), str(tags)
    return power, tags


def _power_only(lam, problem):
    def fn(d):
        return optimal_power(lam, d, problem)[0]
    return fn


def budget_gap(lam, problem: Problem) -> float:
    """I(lam) = E[P_opt(lam, D)] - P_max, non-increasing in ``lam``."""
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    with np.errstate(invalid="ignore", over="ignore"):
        res = problem.expectation.integrate(_power_only(lam, problem), problem.breakpoints(lam))
    if not math.isfinite(res.value):
        return math.inf
    return res.value - problem.p_max


def floor_power(problem: Problem) -> float:
    """Average power of the floors alone (the lam -> infinity limit of the allocation)."""
    def fn(d):
        s = problem.cnr_fn(d)
        return np.maximum(problem.latency_floor(d, s), problem.concavity_floor(d, s))
    return problem.expectation.expect(fn, problem.breakpoints())


# --- bisection ----------------------------------------------------------------

@dataclass
class DualState:
    """Bisection settings for the power-budget multiplier.

    ``mu`` is the multiplier of the latency constraint, held at zero by the
    relaxation; the latency constraint only enters through the power floor.
    """

    lam_lb: float = 1e-6
    lam_ub: float = 1e6
    tol: float | None = None
    max_iters: int = 200
    max_expansions: int = 60
    mu: float = 0.0

    def __post_init__(self):
        if not 0 < self.lam_lb < self.lam_ub:
            raise ValueError("need 0 < lam_lb < lam_ub")
        if self.tol is not None and self.tol <= 0:
            raise ValueError("tolerance must be > 0")
        if self.mu != 0.0:
            raise ValueError("mu is fixed at 0 by the relaxation")


@dataclass(frozen=True)
class BisectionResult:
    lam: float
    gap: float
    iterations: int
    converged: bool
    lam_lb: float
    lam_ub: float


def bisect_lambda(gap_fn, state: DualState | None = None, tol=None, infeasible_floor=None) -> BisectionResult:
    """Find ``lam`` with ``|gap_fn(lam)| <= tol`` for a non-increasing ``gap_fn``.

    The bracket is expanded geometrically (factor 10) until the gap changes
    sign. If the upper end never turns negative the budget is unreachable and
    :class:`InfeasibleBudgetError` is raised.
    """
    state = DualState() if state is None else state
    eps = state.tol if tol is None else tol
    if eps is None:
        raise ValueError("a tolerance is required")
    lb, ub = state.lam_lb, state.lam_ub
    g_lb = gap_fn(lb)
    for _ in range(state.max_expansions):
        if g_lb > 0:
            break
        ub, lb = lb, lb / 10.0
        g_lb = gap_fn(lb)
    else:
        if g_lb <= 0:
            raise RuntimeError("could not find a multiplier with a positive budget gap")
    g_ub = gap_fn(ub)
    for _ in range(state.max_expansions):
        if g_ub <= 0:
            break
        lb, g_lb = ub, g_ub
        ub *= 10.0
        g_ub = gap_fn(ub)
    else:
        if g_ub > 0:
            floor = infeasible_floor() if infeasible_floor is not None else float("nan")
            raise InfeasibleBudgetError(float("nan"), floor)

    lam, g = ub, g_ub
    it = 0
    while abs(g) > eps and it < state.max_iters:
        lam = 0.5 * (lb + ub)
        if lam in (lb, ub):
            break
        g = gap_fn(lam)
        if g_lb * g < 0:
            ub = lam
        else:
            lb, g_lb = lam, g
        it += 1
    return BisectionResult(lam, g, it, abs(g) <= eps, lb, ub)


# --- solutions ----------------------------------------------------------------

@dataclass(frozen=True)
class PowerProfile:
    distance: np.ndarray
    power: np.ndarray
    active: np.ndarray


@dataclass
class PolicySolution:
    """Converged power/rate policy with its averages and constraint audit.

    ``avg_rate`` and ``avg_power`` integrate over (0, d_max] against the
    (unnormalised) distance density. ``avg_latency`` is the mean latency over
    the served (non-outage) probability mass.
    """

    mode: str
    lam: float
    avg_rate: float
    avg_latency: float
    avg_power: float
    peak_power: float
    papr: float
    outage_fraction: float
    profile: PowerProfile
    audit: dict
    bisection: BisectionResult
    problem: Problem = field(repr=False)

    def power_at(self, distance):
        return optimal_power(self.lam, distance, self.problem)[0]

    def rate_at(self, distance):
        if self.mode == "continuous":
            return _continuous_rate_at(self.lam, distance, self.problem)
        return _discrete_at(self.lam, distance, self.problem)[0]

    def latency_at(self, distance):
        return packet_latency(self.rate_at(distance), self.problem.packet_size)

    def scheme_at(self, distance):
        """Modulation index per distance (-1 for outage); discrete mode only."""
        return _discrete_at(self.lam, distance, self.problem)[1]

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "lambda": self.lam,
            "avg_rate_bps": self.avg_rate,
            "avg_latency_s": self.avg_latency,
            "avg_power_w": self.avg_power,
            "p_max_w": self.problem.p_max,
            "peak_power_w": self.peak_power,
            "papr": self.papr,
            "outage_fraction": self.outage_fraction,
            "bisection": {
                "iterations": self.bisection.iterations,
                "converged": self.bisection.converged,
                "gap_w": self.bisection.gap,
            },
            "audit": self.audit,
        }


def _continuous_rate_at(lam, distance, problem):
    d = np.asarray(distance, dtype=float)
    s = problem.cnr_fn(d)
    p = optimal_power(lam, d, problem, s)[0]
    return continuous_rate(p, d, s, problem.l0, problem.k)


def discrete_scheme_index(power, distance, cnr, problem: Problem):
    """Modulation index chosen by flooring the continuous rate, plus a BER guard.

    Returns ``(index, bracket_index)``: ``bracket_index`` is the largest
    scheme whose discrete rate does not exceed the continuous rate;
    ``index`` steps down from it until the exact BER meets the target.
    Both are -1 for outage.
    """
    p = np.asarray(power, dtype=float)
    s = np.asarray(cnr, dtype=float)
    se_cont = np.log2(1.0 + problem.k * p * p * s) * (1.0 + _BRACKET_RTOL)
    snr = p * p * s
    shape = np.broadcast(p, s, np.asarray(distance)).shape
    bracket = np.full(shape, -1)
    chosen = np.full(shape, -1)
    for i, mod in enumerate(problem.schemes):
        fits = mod.spectral_efficiency <= se_cont
        bracket = np.where(fits, i, bracket)
        chosen = np.where(fits & (exact_ber(mod, snr) <= problem.ber_tgt), i, chosen)
    return chosen, bracket


def _discrete_at(lam, distance, problem):
    d = np.asarray(distance, dtype=float)
    s = problem.cnr_fn(d)
    p = optimal_power(lam, d, problem, s)[0]
    idx, bracket = discrete_scheme_index(p, d, s, problem)
    se = np.array([mo.spectral_efficiency for mo in problem.schemes] + [0.0])
    rate = problem.l0 / d * se[idx]
    return rate, idx, bracket


def _solve_lambda(problem: Problem, state: DualState | None):
    state = DualState() if state is None else state
    tol = state.tol if state.tol is not None else 1e-6 * problem.p_max

    def infeasible():
        return floor_power(problem)

    fp = floor_power(problem)
    if not fp < problem.p_max:
        raise InfeasibleBudgetError(problem.p_max, fp)
    try:
        return bisect_lambda(lambda lam: budget_gap(lam, problem), state, tol=tol, infeasible_floor=infeasible)
    except InfeasibleBudgetError as exc:
        raise InfeasibleBudgetError(problem.p_max, exc.floor_power) from None


def _profile(lam, problem):
    grid = problem.peak_grid
    p, tags = optimal_power(lam, grid, problem)
    return PowerProfile(grid, np.asarray(p), np.asarray(tags))


def _served_mean_latency(problem, rate_fn, breakpoints=()):
    def served(d):
        return (rate_fn(d) > 0).astype(float)

    def lat(d):
        r = rate_fn(d)
        return np.where(r > 0, problem.packet_size / np.where(r > 0, r, 1.0), 0.0)

    served_mass = problem.expectation.expect(served, breakpoints, abs_tol=1e-12, rel_tol=1e-10)
    if served_mass <= 0:
        return math.inf, 0.0
    return problem.expectation.expect(lat, breakpoints, abs_tol=1e-15, rel_tol=1e-10) / served_mass, served_mass


def solve_continuous(problem: Problem, state: DualState | None = None) -> PolicySolution:
    """Optimal continuous-rate policy (bisection on lam, then averages)."""
    bis = _solve_lambda(problem, state)
    lam = bis.lam
    bps = problem.breakpoints(lam)
    exp = problem.expectation

    avg_power = exp.expect(_power_only(lam, problem), bps)
    avg_rate = exp.expect(lambda d: _continuous_rate_at(lam, d, problem), bps, abs_tol=1e-6, rel_tol=1e-11)
    avg_latency, _ = _served_mean_latency(problem, lambda d: _continuous_rate_at(lam, d, problem), bps)

    prof = _profile(lam, problem)
    peak = float(prof.power.max())
    grid_lat = packet_latency(_continuous_rate_at(lam, prof.distance, problem), problem.packet_size)
    audit = {
        "budget_rel_gap": abs(avg_power - problem.p_max) / problem.p_max,
        "latency_violations": int(np.sum(grid_lat > problem.tau_max * (1 + 1e-9))),
        "max_grid_latency_s": float(np.max(grid_lat)),
        "grid_points": int(prof.distance.size),
    }
    return PolicySolution("continuous", lam, avg_rate, avg_latency, avg_power, peak, peak / avg_power,
                          0.0, prof, audit, bis, problem)


def solve_discrete(problem: Problem, state: DualState | None = None,
                   continuous: PolicySolution | None = None) -> PolicySolution:
    """Discrete-rate policy: reuse the continuous multiplier and power, floor the rate.

    The latency constraint is not re-imposed after flooring; violations are
    counted in the audit instead.
    """
    if continuous is None:
        continuous = solve_continuous(problem, state)
    lam = continuous.lam
    bps = problem.breakpoints(lam)
    exp = problem.expectation

    def rate(d):
        return _discrete_at(lam, d, problem)[0]

    avg_rate = exp.expect(rate, bps, abs_tol=1e-6, rel_tol=1e-11)
    outage = exp.expect(lambda d: (rate(d) <= 0).astype(float), bps, abs_tol=1e-12, rel_tol=1e-10)
    avg_latency, served = _served_mean_latency(problem, rate, bps)
    late_mass = exp.expect(
        lambda d: ((rate(d) > 0) & (problem.packet_size / np.maximum(rate(d), 1e-300) > problem.tau_max)).astype(float),
        bps, abs_tol=1e-12, rel_tol=1e-10,
    )

    grid = continuous.profile.distance
    g_rate, g_idx, g_bracket = _discrete_at(lam, grid, problem)
    g_lat = packet_latency(g_rate, problem.packet_size)
    audit = {
        "budget_rel_gap": continuous.audit["budget_rel_gap"],
        "latency_violations": int(np.sum((g_rate > 0) & (g_lat > problem.tau_max))),
        "latency_violation_mass": late_mass,
        "ber_demotions": int(np.sum(g_idx != g_bracket)),
        "grid_outages": int(np.sum(g_idx < 0)),
        "grid_points": int(grid.size),
    }
    return PolicySolution("discrete", lam, avg_rate, avg_latency, continuous.avg_power,
                          continuous.peak_power, continuous.papr, outage / exp.mass,
                          continuous.profile, audit, continuous.bisection, problem)


# --- brute-force oracle -------------------------------------------------------

@dataclass(frozen=True)
class BruteForceResult:
    avg_rate: float
    avg_power: float
    scheme_index: np.ndarray
    power: np.ndarray
    rate: np.ndarray
    nu: float


def _hull_options(options):
    """Upper concave hull of (power, rate) options, sorted by power."""
    pts = sorted(set(options))
    best = []
    for p, r in pts:
        if best and r <= best[-1][1]:
            continue
        while len(best) >= 2:
            (p1, r1), (p2, r2) = best[-2], best[-1]
            if (r2 - r1) * (p - p1) <= (r - r1) * (p2 - p1):
                best.pop()
            else:
                break
        best.append((p, r))
    return best


def brute_force_discrete(problem: Problem, distances: DiscreteDistances, power_grid,
                         max_powers=64, max_distances=256) -> BruteForceResult:
    """Exhaustive (modulation, power level) search per distance.

    Every option must meet the exact BER target and the latency cap; switching
    off (zero power, zero rate) is always allowed. The average-power budget is
    handled by sweeping a dual weight over every slope of the per-distance
    rate/power hulls, followed by a greedy pass that spends leftover budget on
    the best remaining upgrades.
    """
    levels = np.unique(np.asarray(power_grid, dtype=float))
    d = distances.distances
    w = distances.weights
    if levels.size > max_powers or d.size > max_distances:
        raise ValueError(f"grid too large: at most {max_powers} power levels and {max_distances} distances")
    if np.any(levels < 0):
        raise ValueError("power levels must be non-negative")

    s = problem.cnr_fn(d)
    n = d.size
    options = []          # per distance: list of (power, rate, scheme index)
    for j in range(n):
        opts = {(0.0, 0.0): -1}
        for i, mod in enumerate(problem.schemes):
            r = problem.l0 / d[j] * mod.spectral_efficiency
            if problem.packet_size / r > problem.tau_max:
                continue
            ok = exact_ber(mod, levels**2 * s[j]) <= problem.ber_tgt
            if ok.any():
                p = float(levels[ok.argmax()])   # cheapest feasible level
                if (p, r) not in opts or opts[(p, r)] < i:
                    opts[(p, r)] = i
        options.append(opts)

    def pick(nu):
        choice = []
        for opts in options:
            # ties go to the cheaper option
            best = max(opts, key=lambda pr: (pr[1] - nu * pr[0], -pr[0]))
            choice.append(best)
        return choice

    nus = {0.0, math.inf}
    for opts in options:
        hull = _hull_options(list(opts))
        for (p1, r1), (p2, r2) in zip(hull, hull[1:]):
            slope = (r2 - r1) / (p2 - p1)
            nus.update({slope * (1 - 1e-12), slope * (1 + 1e-12)})

    best_rate, best = -1.0, None
    for nu in sorted(nus):
        choice = pick(nu) if math.isfinite(nu) else [(0.0, 0.0)] * n
        pw = np.array([c[0] for c in choice])
        rt = np.array([c[1] for c in choice])
        if pw @ w <= problem.p_max * (1 + 1e-12):
            # greedy upgrades with the leftover budget
            budget = problem.p_max - pw @ w
            while True:
                gain, move = 0.0, None
                for j, opts in enumerate(options):
                    for (p, r) in opts:
                        dp, dr = (p - pw[j]) * w[j], (r - rt[j]) * w[j]
                        if dr > 0 and dp <= budget and dr > gain:
                            gain, move = dr, (j, p, r, dp)
                if move is None:
                    break
                j, p, r, dp = move
                pw[j], rt[j] = p, r
                budget -= dp
            if rt @ w > best_rate:
                best_rate, best = float(rt @ w), (pw.copy(), rt.copy(), nu)
    pw, rt, nu = best
    idx = np.array([options[j][(pw[j], rt[j])] for j in range(n)])
    return BruteForceResult(best_rate, float(pw @ w), idx, pw, rt, nu)
