"""Command-line front end: ``sweep``, ``optimize``, ``validate``, ``show-config``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__, properties
from .calibration import calibrate
from .config import ConfigError, Scenario, dbw_to_watts, load_config, watts_to_dbw
from .optimizer import InfeasibleBudgetError, Problem, solve_continuous, solve_discrete
from .quadrature import QuadratureError
from .sweeps import SWEEP_KINDS, monte_carlo_average, run_sweep
from .distance import DistanceSampler

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4


def parse_range(text: str) -> np.ndarray:
    """``start:stop:step`` with both endpoints included, or a single number."""
    parts = text.split(":")
    if len(parts) == 1:
        return np.array([float(parts[0])])
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
    start, stop, step = (float(x) for x in parts)
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError(f"empty or descending range {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def format_float(x) -> str:
    """Shortest round-trip decimal, locale independent."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def series_csv(x_name, x_unit, s) -> str:
    lines = [f"# {x_name},{x_unit},{s.y_name},{s.y_unit}", "x,y"]
    lines += [f"{format_float(a)},{format_float(b)}" for a, b in zip(s.x, s.y)]
    return "\n".join(lines) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _dumps(obj) -> str:
    # inf/nan are not JSON; encode them as strings
    def clean(v):
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        if isinstance(v, (float, np.floating)) and not math.isfinite(v):
            return format_float(v)
        if isinstance(v, np.generic):
            return clean(v.item())
        return v
    return json.dumps(clean(obj), indent=2, sort_keys=True, default=_json_default)


# --- scenario assembly --------------------------------------------------------

def _seed(args, sc: Scenario) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("OCC_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError("OCC_SEED", "an integer", env) from None
    return sc.seed


def _scenario(args) -> Scenario:
    sc = load_config(args.config, strict=not args.lenient) if args.config else Scenario()
    spec_kw = {}
    if getattr(args, "tau_max_ms", None) is not None:
        spec_kw["tau_max"] = args.tau_max_ms * 1e-3
    if spec_kw:
        sc = sc.replace(spec=sc.spec.replace(**spec_kw))
    if args.calibration == "reference":
        sc = calibrate(sc)
    return sc.replace(seed=_seed(args, sc))


def _manifest(argv, sc, outputs, started, extra=None) -> dict:
    m = {
        "command_line": list(argv),
        "tool": "occ-urllc",
        "version": __version__,
        "seed": sc.seed,
        "config": sc.to_dict(),
        "p_max_dbw": watts_to_dbw(sc.spec.p_max),
        "outputs": sorted(outputs),
        "duration_s": round(time.perf_counter() - started, 6),
    }
    if extra:
        m.update(extra)
    return m


# --- commands -----------------------------------------------------------------

def cmd_sweep(args, argv) -> int:
    started = time.perf_counter()
    sc = _scenario(args)
    opts = {}
    if args.ber_tgt:
        key = "ber_targets"
        opts[key] = tuple(args.ber_tgt)
    if args.pmax_dbw is not None:
        opts["pmax_dbw"] = args.pmax_dbw if args.kind != "power_vs_distance" else float(args.pmax_dbw[0])
    if args.mode:
        opts["modes"] = ("continuous", "discrete") if args.mode == "both" else (args.mode,)
    if args.power_w is not None:
        opts["power_w"] = args.power_w
    if args.aoi_deg is not None:
        opts["aoi_deg"] = args.aoi_deg
    if args.k_override is not None:
        opts["k_override"] = args.k_override
    if args.kind in ("ber_vs_distance", "ber_vs_snr", "ber_vs_aoi") and args.ber_tgt:
        opts.pop("ber_targets")   # BER curves do not depend on the target

    res = run_sweep(args.kind, sc, **opts)
    out = Path(args.out)
    files = []
    for s in res.series:
        name = f"{res.kind}__{s.name}.csv"
        _atomic_write(out / name, series_csv(res.x_name, res.x_unit, s))
        files.append(name)
    manifest = _manifest(argv, sc, files, started,
                         {"sweep": res.kind, "fingerprint": res.fingerprint, "options": res.options})
    _atomic_write(out / f"{res.kind}__manifest.json", _dumps(manifest) + "\n")
    print(_dumps({"kind": res.kind, "files": files, "fingerprint": res.fingerprint}))
    return EXIT_OK


def cmd_optimize(args, argv) -> int:
    started = time.perf_counter()
    sc = _scenario(args)
    spec_kw = {}
    if args.target_ber is not None:
        spec_kw["ber_tgt"] = args.target_ber
    if args.pmax_dbw is not None:
        spec_kw["p_max"] = dbw_to_watts(args.pmax_dbw)
    if spec_kw:
        sc = sc.replace(spec=sc.spec.replace(**spec_kw))
    prob = Problem.from_scenario(sc, k_override=args.k_override)
    cont = solve_continuous(prob)
    sols = {"continuous": cont}
    if args.mode in ("discrete", "both"):
        sols["discrete"] = solve_discrete(prob, continuous=cont)
    if args.mode == "discrete":
        del sols["continuous"]

    result = {
        "target_ber": sc.spec.ber_tgt,
        "p_max_w": sc.spec.p_max,
        "p_max_dbw": watts_to_dbw(sc.spec.p_max),
        "tau_max_s": sc.spec.tau_max,
        "k": prob.k,
        "seed": sc.seed,
    }
    for mode, sol in sols.items():
        summary = sol.summary()
        if args.mc:
            mc = monte_carlo_average(sol, DistanceSampler(sc.distance, sc.seed), args.mc)
            summary["monte_carlo"] = {
                "n": mc.n, "avg_rate_bps": mc.avg_rate, "std_error_bps": mc.std_error,
                "avg_latency_s": mc.avg_latency, "outage_fraction": mc.outage_fraction,
            }
        result[mode] = summary
    text = _dumps(result) + "\n"
    if args.out:
        out = Path(args.out)
        _atomic_write(out / "optimize.json", text)
        _atomic_write(out / "optimize__manifest.json",
                      _dumps(_manifest(argv, sc, ["optimize.json"], started)) + "\n")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args, argv) -> int:
    sc = _scenario(args)
    reports = properties.run_all(sc, seed=sc.seed)
    width = max(len(r.name) for r in reports)
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  n={r.checked}")
        if not r.passed:
            if r.witness:
                witness = {k: float(v) for k, v in r.witness.items()}
                print(f"    {r.detail}; counterexample {json.dumps(witness)}")
            else:
                print(f"    {r.detail}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VALIDATION


def cmd_show_config(args, argv) -> int:
    sc = _scenario(args)
    out = sc.to_dict()
    if args.derived:
        out["derived"] = sc.params.derived_constants()
        out["derived"]["K"] = sc.spec.k
    print(_dumps(out))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="occ-urllc", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON configuration file (all keys optional)")
        p.add_argument("--lenient", action="store_true", help="warn about unknown config keys instead of failing")
        p.add_argument("--calibration", choices=("reference", "none"), default="reference",
                       help="fit gain scale and LED strip length to the reference operating points (default)")
        p.add_argument("--seed", type=int, help="random seed (overrides OCC_SEED and the config)")
        p.add_argument("--tau-max-ms", type=float, help="latency cap in milliseconds")

    p = sub.add_parser("sweep", help="write figure data series as CSV")
    p.add_argument("kind", choices=SWEEP_KINDS)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--ber-tgt", type=float, action="append", help="target BER (repeatable)")
    p.add_argument("--pmax-dbw", type=parse_range, help="average power budget(s), start:stop:step in dBW")
    p.add_argument("--mode", choices=("continuous", "discrete", "both"))
    p.add_argument("--power-w", type=float, help="fixed transmit power for link sweeps")
    p.add_argument("--aoi-deg", type=float, help="angle of incidence for link sweeps")
    p.add_argument("--k-override", type=float, help="extra series with this BER-gap constant K")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("optimize", help="solve for the optimal policy and print a JSON summary")
    p.add_argument("--mode", choices=("continuous", "discrete", "both"), default="both")
    p.add_argument("--target-ber", type=float)
    p.add_argument("--pmax-dbw", type=float)
    p.add_argument("--k-override", type=float)
    p.add_argument("--mc", type=int, default=0, help="also run a Monte-Carlo check with this many samples")
    p.add_argument("--out", help="also write optimize.json and a manifest here")
    common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("validate", help="run the optimiser property suites")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("show-config", help="print the effective configuration")
    p.add_argument("--derived", action="store_true", help="include derived constants")
    common(p)
    p.set_defaults(func=cmd_show_config)
    return ap


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, ["occ-urllc", *argv])
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        if isinstance(exc, InfeasibleBudgetError):
            sys.stderr.write(_dumps({"error": "infeasible_budget", "message": str(exc),
                                     "p_max_w": exc.p_max, "floor_power_w": exc.floor_power}) + "\n")
            return EXIT_INFEASIBLE
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except (QuadratureError, FloatingPointError, ArithmeticError) as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
