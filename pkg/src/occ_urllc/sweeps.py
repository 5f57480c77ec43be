"""Monte-Carlo averages and the figure-data sweep engine."""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .channel import LinkGeometry, channel_gain, cnr_at
from .config import Scenario, dbw_to_watts
from .distance import MC_BATCH, DistanceSampler
from .link import OUTAGE_LATENCY, exact_ber, feasible_scheme_index
from .optimizer import PolicySolution, Problem, solve_continuous, solve_discrete

SWEEP_KINDS = (
    "ber_vs_snr", "ber_vs_distance", "ber_vs_aoi", "se_latency_vs_distance",
    "rate_vs_pmax", "latency_vs_pmax", "power_vs_distance", "peak_vs_avg", "papr_vs_avg",
)


# --- Monte Carlo --------------------------------------------------------------

@dataclass(frozen=True)
class MonteCarloResult:
    avg_rate: float
    std_error: float
    avg_latency: float
    outage_fraction: float
    rejected_fraction: float
    n: int
    seed: int


def monte_carlo_average(policy, sampler: DistanceSampler, n: int, packet_size=None,
                        batch_size: int = MC_BATCH, workers: int = 1) -> MonteCarloResult:
    """Sample-mean rate, latency and outage of ``policy`` over ``n`` distance draws.

    ``policy`` is a :class:`PolicySolution` or any vectorised ``rate(D)``
    callable. In ``reject-count`` mode, draws beyond ``d_max`` count with
    zero rate, so ``avg_rate`` estimates the unnormalised integral over
    (0, d_max]. Batches are reduced in index order, so ``workers`` does not
    change the result.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(policy, PolicySolution):
        rate_fn = policy.rate_at
        packet_size = policy.problem.packet_size if packet_size is None else packet_size
    else:
        rate_fn = policy
    # shifting by a representative value keeps the sums well conditioned and
    # makes a constant policy average to exactly that constant
    shift = float(np.asarray(rate_fn(np.array([math.exp(sampler.model.alpha)])))[0])

    nb = -(-n // batch_size)

    def run(i):
        size = min(batch_size, n - i * batch_size)
        d = sampler.batch(i, batch_size)[:size]
        ok = ~np.isnan(d)
        r = np.zeros(size)
        if ok.any():
            r[ok] = rate_fn(d[ok])
        served = ok & (r > 0)
        lat = np.zeros(size)
        if packet_size is not None:
            lat[served] = packet_size / r[served]
        dev = r - shift
        return (dev.sum(), (dev * dev).sum(), int(served.sum()), lat.sum(), int((~ok).sum()))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(nb)))
    else:
        parts = [run(i) for i in range(nb)]

    s1 = math.fsum(p[0] for p in parts)
    s2 = math.fsum(p[1] for p in parts)
    n_served = sum(p[2] for p in parts)
    lat_sum = math.fsum(p[3] for p in parts)
    n_rej = sum(p[4] for p in parts)
    mean_dev = s1 / n
    var = max(s2 / n - mean_dev * mean_dev, 0.0) * n / max(n - 1, 1)
    if packet_size is None:
        avg_latency = math.nan
    else:
        avg_latency = lat_sum / n_served if n_served else OUTAGE_LATENCY
    outage = (n - n_rej - n_served) / n
    return MonteCarloResult(shift + mean_dev, math.sqrt(var / n), avg_latency, outage, n_rej / n, n,
                            int(sampler.seed))


# --- sweep results ------------------------------------------------------------

@dataclass(frozen=True)
class Series:
    name: str
    x: np.ndarray
    y: np.ndarray
    y_name: str
    y_unit: str
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SweepResult:
    kind: str
    x_name: str
    x_unit: str
    series: tuple
    fingerprint: str
    seed: int
    options: dict

    def get(self, name) -> Series:
        for s in self.series:
            if s.name == name:
                return s
        raise KeyError(name)

    @property
    def names(self):
        return [s.name for s in self.series]


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [float(x) for x in v]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def fingerprint(kind: str, sc: Scenario, options: dict) -> str:
    blob = json.dumps({"kind": kind, "scenario": sc.to_dict(),
                       "options": {k: _jsonable(v) for k, v in options.items()}},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _sorted_series(name, x, y, y_name, y_unit, **meta):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.argsort(x, kind="stable")
    return Series(name, x[order], y[order], y_name, y_unit, meta)


def _ber_label(ber):
    return f"ber{ber:.0e}"


# --- fixed-power link analysis ------------------------------------------------

def coverage_distance(scheme, ber_tgt, sc: Scenario, power=1.2, aoi_deg=None, d_hi=1e4):
    """Largest distance at which ``scheme`` meets ``ber_tgt`` at fixed ``power``.

    Returns 0.0 when the target is missed everywhere (e.g. outside the field of view).
    """
    p = sc.params

    def margin(d):
        return math.log(max(float(exact_ber(scheme, power**2 * float(cnr_at(d, p, aoi_deg)))), 1e-300)) - math.log(ber_tgt)

    lo = 1e-3
    if float(channel_gain(LinkGeometry.from_params(lo, p, aoi_deg), p)) == 0.0 or margin(lo) > 0:
        return 0.0
    if margin(d_hi) <= 0:
        return d_hi
    return brentq(margin, lo, d_hi, xtol=1e-10)


def _scheme_table(sc: Scenario):
    return sorted(sc.spec.modulation_set, key=lambda mo: mo.spectral_efficiency)


def _sweep_ber(kind, sc, opts):
    p = sc.params
    power = opts["power_w"]
    schemes = _scheme_table(sc)
    out = []
    if kind == "ber_vs_aoi":
        aoi = np.asarray(opts["aois_deg"], dtype=float)
        snr = power**2 * cnr_at(opts["distance_m"], p, aoi)
        x, x_name, x_unit = aoi, "aoi", "deg"
    else:
        d = np.asarray(opts["distances_m"], dtype=float)
        snr = power**2 * cnr_at(d, p, opts["aoi_deg"])
        if kind == "ber_vs_snr":
            with np.errstate(divide="ignore"):
                x, x_name, x_unit = 10 * np.log10(snr), "snr", "dB"
        else:
            x, x_name, x_unit = d, "distance", "m"
    for mo in schemes:
        out.append(_sorted_series(mo.name, x, exact_ber(mo, snr), "ber", "1", scheme=mo.name))
    return x_name, x_unit, out


def _sweep_se_latency(sc, opts):
    p = sc.params
    d = np.asarray(opts["distances_m"], dtype=float)
    snr = opts["power_w"] ** 2 * cnr_at(d, p, opts["aoi_deg"])
    schemes = _scheme_table(sc)
    se_tab = np.array([mo.spectral_efficiency for mo in schemes] + [0.0])
    out = []
    for ber in opts["ber_targets"]:
        idx = feasible_scheme_index(snr, schemes, ber)
        se = se_tab[idx]
        with np.errstate(divide="ignore"):
            lat = np.where(se > 0, p.packet_size / (p.l0 / d * np.where(se > 0, se, 1.0)), OUTAGE_LATENCY)
        out.append(_sorted_series(f"se_{_ber_label(ber)}", d, se, "spectral_efficiency", "bit/s/Hz", ber_tgt=ber))
        out.append(_sorted_series(f"latency_{_ber_label(ber)}", d, lat, "latency", "s", ber_tgt=ber))
    return "distance", "m", out


def _problem(sc, ber, p_max, k_override=None):
    spec = sc.spec.replace(ber_tgt=ber, p_max=p_max)
    return Problem.from_scenario(sc.replace(spec=spec), k_override=k_override)


def _sweep_optimized(kind, sc, opts):
    pmax_w = dbw_to_watts(np.asarray(opts["pmax_dbw"], dtype=float))
    cases = [(f"{_ber_label(b)}", b, None) for b in opts["ber_targets"]]
    if opts.get("k_override") is not None:
        cases.append((f"k{opts['k_override']:g}", opts["ber_targets"][0], opts["k_override"]))
    modes = opts.get("modes", ("continuous",))
    out = []
    for label, ber, kov in cases:
        cols = {m: [] for m in ("continuous", "discrete")}
        for pm in pmax_w:
            prob = _problem(sc, ber, float(pm), kov)
            cont = solve_continuous(prob)
            cols["continuous"].append(cont)
            if "discrete" in modes and kind in ("rate_vs_pmax", "latency_vs_pmax"):
                cols["discrete"].append(solve_discrete(prob, continuous=cont))
        if kind in ("peak_vs_avg", "papr_vs_avg"):
            sols = cols["continuous"]
            if kind == "peak_vs_avg":
                y, yn, yu = [s.peak_power for s in sols], "peak_power", "W"
            else:
                y, yn, yu = [s.papr for s in sols], "papr", "1"
            out.append(_sorted_series(label, pmax_w, y, yn, yu, ber_tgt=ber))
            continue
        for mode in ("continuous", "discrete"):
            if mode not in modes:
                continue
            sols = cols[mode]
            if kind == "rate_vs_pmax":
                y, yn, yu = [s.avg_rate for s in sols], "avg_rate", "bit/s"
            else:
                y, yn, yu = [s.avg_latency for s in sols], "avg_latency", "s"
            out.append(_sorted_series(f"{mode}_{label}", pmax_w, y, yn, yu, ber_tgt=ber, mode=mode))
    return "p_max", "W", out


def _sweep_power_profile(sc, opts):
    out = []
    pm = dbw_to_watts(float(opts["pmax_dbw"]))
    for ber in opts["ber_targets"]:
        sol = solve_continuous(_problem(sc, ber, pm))
        d = np.asarray(opts["distances_m"], dtype=float)
        out.append(_sorted_series(_ber_label(ber), d, sol.power_at(d), "power", "W", ber_tgt=ber, lam=sol.lam))
    return "distance", "m", out


_DEFAULTS = {
    "ber_vs_snr": dict(power_w=1.2, aoi_deg=60.0, distances_m=np.arange(1.0, 151.0)),
    "ber_vs_distance": dict(power_w=1.2, aoi_deg=60.0, distances_m=np.arange(1.0, 151.0)),
    "ber_vs_aoi": dict(power_w=1.2, distance_m=50.0, aois_deg=np.arange(0.0, 91.0)),
    "se_latency_vs_distance": dict(power_w=1.2, aoi_deg=60.0, distances_m=np.arange(1.0, 91.0),
                                   ber_targets=(1e-4, 1e-5)),
    "rate_vs_pmax": dict(pmax_dbw=np.arange(5.0, 15.5, 1.0), ber_targets=(1e-4, 1e-5),
                         modes=("continuous", "discrete"), k_override=None),
    "latency_vs_pmax": dict(pmax_dbw=np.arange(5.0, 15.5, 1.0), ber_targets=(1e-4, 1e-5),
                            modes=("continuous", "discrete"), k_override=None),
    "power_vs_distance": dict(pmax_dbw=5.0, ber_targets=(1e-4, 1e-5), distances_m=np.arange(1.0, 91.0)),
    "peak_vs_avg": dict(pmax_dbw=np.arange(5.0, 15.5, 1.0), ber_targets=(1e-4, 1e-5)),
    "papr_vs_avg": dict(pmax_dbw=np.arange(5.0, 15.5, 1.0), ber_targets=(1e-4, 1e-5)),
}


def sweep_defaults(kind: str) -> dict:
    if kind not in _DEFAULTS:
        raise ValueError(f"unknown sweep kind {kind!r}; expected one of {', '.join(SWEEP_KINDS)}")
    return dict(_DEFAULTS[kind])


def run_sweep(kind: str, sc: Scenario, **options) -> SweepResult:
    """Compute the data series of one figure-style sweep.

    Unknown option names raise ``TypeError``; see :func:`sweep_defaults`
    for the options of each kind.
    """
    opts = sweep_defaults(kind)
    extra = set(options) - set(opts)
    if extra:
        raise TypeError(f"unknown options for {kind}: {', '.join(sorted(extra))}")
    opts.update({k: v for k, v in options.items() if v is not None})
    if "aoi_deg" in opts and opts["aoi_deg"] is None:
        opts["aoi_deg"] = sc.params.aoi_deg

    if kind in ("ber_vs_snr", "ber_vs_distance", "ber_vs_aoi"):
        x_name, x_unit, series = _sweep_ber(kind, sc, opts)
    elif kind == "se_latency_vs_distance":
        x_name, x_unit, series = _sweep_se_latency(sc, opts)
    elif kind == "power_vs_distance":
        x_name, x_unit, series = _sweep_power_profile(sc, opts)
    else:
        x_name, x_unit, series = _sweep_optimized(kind, sc, opts)
    return SweepResult(kind, x_name, x_unit, tuple(series), fingerprint(kind, sc, opts), sc.seed,
                       {k: _jsonable(v) for k, v in opts.items()})
