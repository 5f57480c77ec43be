"""Model constants, scenario settings and JSON configuration loading.

All quantities are SI internally. Derived constants (Lambertian order, lens
gain, noise variances, camera constant ``l0``) are properties, so they always
reflect the current field values.
"""

from __future__ import annotations

import dataclasses
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .link import DEFAULT_MODULATION_SET, ModulationScheme, parse_scheme


class ConfigError(ValueError):
    """Raised when a configuration value is malformed or violates an invariant."""

    def __init__(self, field_name: str, constraint: str, value: Any):
        self.field_name = field_name
        self.constraint = constraint
        self.value = value
        super().__init__(f"{field_name}: expected {constraint}, got {value!r}")


def dbw_to_watts(dbw):
    return 10.0 ** (dbw / 10.0)


def watts_to_dbw(watts):
    return 10.0 * math.log10(watts)


def _check_positive(obj, names):
    for name in names:
        v = getattr(obj, name)
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise ConfigError(name, "a finite value > 0", v)


def _check_angle(obj, name, lo=0.0, hi=90.0, closed_lo=True):
    v = getattr(obj, name)
    ok = isinstance(v, (int, float)) and math.isfinite(v)
    ok = ok and (v >= lo if closed_lo else v > lo) and v <= hi
    if not ok:
        bracket = "[" if closed_lo else "("
        raise ConfigError(name, f"an angle in {bracket}{lo}, {hi}] degrees", v)


@dataclass(frozen=True)
class SystemParams:
    """Physical and system constants of the OCC link (reference defaults)."""

    phi_irradiance_deg: float = 70.0
    half_angle_deg: float = 60.0
    fov_deg: float = 90.0
    aoi_deg: float = 60.0
    focal_length: float = 15e-3
    pixel_size: float = 7.5e-6
    pupil_area: float = 1e-3
    filter_transmittance: float = 1.0
    refractive_index: float = 1.5
    responsivity: float = 1.0
    n_leds_per_row: int = 30
    frame_rate: float = 1000.0
    noise_bandwidth: float = 2e6
    background_current: float = 5100e-6
    i2: float = 0.562
    i3: float = 0.0868
    abs_temperature: float = 298.0
    boltzmann: float = 1.38e-23
    open_loop_gain: float = 10.0
    capacitance_per_area: float = 112e-12 / 1e-4
    fet_noise_factor: float = 1.5
    fet_transconductance: float = 30e-3
    electron_charge: float = 1.6e-19
    image_resolution: int = 512
    w_interpretation: str = "rows"
    packet_size: float = 5000.0
    led_strip_length: float = 0.15
    led_baseline: float = 1.0
    # Multiplies the DC gain; 1.0 means the literal model. Set by calibration.
    gain_scale: float = 1.0

    def __post_init__(self):
        _check_positive(self, [
            "focal_length", "pixel_size", "pupil_area", "filter_transmittance",
            "refractive_index", "responsivity", "n_leds_per_row", "frame_rate",
            "noise_bandwidth", "background_current", "i2", "i3",
            "abs_temperature", "boltzmann", "open_loop_gain",
            "capacitance_per_area", "fet_noise_factor", "fet_transconductance",
            "electron_charge", "image_resolution", "packet_size",
            "led_strip_length", "led_baseline", "gain_scale",
        ])
        _check_angle(self, "phi_irradiance_deg")
        _check_angle(self, "aoi_deg")
        # cos(half angle) must lie in (0, 1) for a finite positive order
        _check_angle(self, "half_angle_deg", lo=0.0, hi=90.0, closed_lo=False)
        if self.half_angle_deg >= 90.0:
            raise ConfigError("half_angle_deg", "an angle in (0, 90) degrees", self.half_angle_deg)
        _check_angle(self, "fov_deg", lo=0.0, hi=90.0, closed_lo=False)
        if self.w_interpretation not in ("rows", "total_pixels"):
            raise ConfigError("w_interpretation", "one of 'rows', 'total_pixels'", self.w_interpretation)

    @property
    def lambertian_order(self) -> float:
        return -math.log(2.0) / math.log(math.cos(math.radians(self.half_angle_deg)))

    @property
    def lens_gain(self) -> float:
        return self.refractive_index**2 / math.sin(math.radians(self.fov_deg)) ** 2

    @property
    def shot_noise_var(self) -> float:
        """Background-dominated shot noise variance 2 q B I_bg I_2 (A^2)."""
        return 2.0 * self.electron_charge * self.noise_bandwidth * self.background_current * self.i2

    @property
    def thermal_noise_var(self) -> float:
        """Preamplifier thermal noise variance (A^2): feedback-resistor and FET channel terms."""
        kT = self.boltzmann * self.abs_temperature
        B = self.noise_bandwidth
        cfa = self.capacitance_per_area * self.pupil_area
        feedback = 8.0 * math.pi * kT / self.open_loop_gain * self.i2 * B**2 * cfa
        fet = 16.0 * math.pi**2 * kT * self.fet_noise_factor / self.fet_transconductance * self.i3 * B**3 * cfa**2
        return feedback + fet

    @property
    def noise_var(self) -> float:
        """Simplified total noise variance, independent of transmit power."""
        return self.shot_noise_var + self.thermal_noise_var

    @property
    def w(self) -> float:
        if self.w_interpretation == "rows":
            return float(self.image_resolution)
        return float(self.image_resolution) ** 2

    @property
    def l0(self) -> float:
        """Camera rate constant: rate = (l0 / D) * spectral efficiency."""
        return (self.frame_rate * self.n_leds_per_row * self.w * self.led_strip_length
                / (6.0 * math.tan(math.radians(self.fov_deg) / 2.0)))

    def derived_constants(self) -> dict:
        return derived_constants(self)

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)


def derived_constants(p: SystemParams) -> dict:
    return {
        "m": p.lambertian_order,
        "g": p.lens_gain,
        "sigma_shot": p.shot_noise_var,
        "sigma_ther": p.thermal_noise_var,
        "sigma_s": p.noise_var,
        "l0": p.l0,
    }


@dataclass(frozen=True)
class UrllcSpec:
    """Reliability, latency and power requirements plus the modulation set."""

    ber_tgt: float = 1e-4
    tau_max: float = 10e-3
    p_max: float = dbw_to_watts(5.0)
    modulation_set: tuple[ModulationScheme, ...] = DEFAULT_MODULATION_SET

    def __post_init__(self):
        if not (isinstance(self.ber_tgt, (int, float)) and 0.0 < self.ber_tgt < 0.2):
            raise ConfigError("ber_tgt", "a probability in (0, 0.2)", self.ber_tgt)
        _check_positive(self, ["tau_max", "p_max"])
        mods = tuple(self.modulation_set)
        if not mods:
            raise ConfigError("modulation_set", "a non-empty list of schemes", mods)
        orders = [mo.order for mo in mods]
        if any(b <= a for a, b in zip(orders, orders[1:])):
            raise ConfigError("modulation_set", "strictly increasing constellation sizes", orders)
        object.__setattr__(self, "modulation_set", mods)

    @property
    def k(self) -> float:
        """BER-gap constant K = -1.5 / ln(5 BER_tgt)."""
        return -1.5 / math.log(5.0 * self.ber_tgt)

    def replace(self, **changes) -> "UrllcSpec":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class DistanceModel:
    """Log-normal inter-vehicle distance, truncated to (0, d_max]."""

    alpha: float = 3.78
    sigma: float = 0.21
    d_max: float = 90.0
    d_stop: float = 10.0

    def __post_init__(self):
        if not (isinstance(self.alpha, (int, float)) and math.isfinite(self.alpha)):
            raise ConfigError("alpha", "a finite log-mean", self.alpha)
        _check_positive(self, ["sigma", "d_max", "d_stop"])
        if not self.d_stop < self.d_max:
            raise ConfigError("d_stop", f"0 < d_stop < d_max={self.d_max}", self.d_stop)

    def replace(self, **changes) -> "DistanceModel":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Scenario:
    params: SystemParams = field(default_factory=SystemParams)
    spec: UrllcSpec = field(default_factory=UrllcSpec)
    distance: DistanceModel = field(default_factory=DistanceModel)
    seed: int = 20240601

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {}
        out.update(dataclasses.asdict(self.params))
        out.update({
            "ber_tgt": self.spec.ber_tgt,
            "tau_max": self.spec.tau_max,
            "p_max": self.spec.p_max,
            "modulation_set": [mo.name for mo in self.spec.modulation_set],
        })
        out.update({
            "alpha": self.distance.alpha,
            "sigma": self.distance.sigma,
            "d_max": self.distance.d_max,
            "d_stop": self.distance.d_stop,
        })
        out["seed"] = self.seed
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


_PARAM_FIELDS = {f.name: f for f in dataclasses.fields(SystemParams)}
_SPEC_FIELDS = {"ber_tgt", "tau_max", "p_max", "modulation_set"}
_DIST_FIELDS = {"alpha", "sigma", "d_max", "d_stop"}
KNOWN_KEYS = set(_PARAM_FIELDS) | _SPEC_FIELDS | _DIST_FIELDS | {"seed"}


def _coerce(name, value, target_type):
    if target_type in ("float", float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(name, "a number", value)
        return float(value)
    if target_type in ("int", int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            raise ConfigError(name, "an integer", value)
        return int(value)
    if target_type in ("str", str):
        if not isinstance(value, str):
            raise ConfigError(name, "a string", value)
        return value
    return value


def scenario_from_dict(data: dict, strict: bool = True) -> Scenario:
    """Build a validated :class:`Scenario` from a flat mapping.

    Missing keys take their reference defaults. Unknown keys raise
    :class:`ConfigError` when ``strict`` is true and emit a warning otherwise.
    """
    if not isinstance(data, dict):
        raise ConfigError("<root>", "a JSON object", type(data).__name__)
    unknown = sorted(set(data) - KNOWN_KEYS)
    if unknown:
        if strict:
            raise ConfigError(unknown[0], "a known configuration key", data[unknown[0]])
        warnings.warn(f"ignoring unknown configuration keys: {', '.join(unknown)}", stacklevel=2)

    pkw = {k: _coerce(k, v, _PARAM_FIELDS[k].type) for k, v in data.items() if k in _PARAM_FIELDS}
    skw: dict[str, Any] = {}
    for k in ("ber_tgt", "tau_max", "p_max"):
        if k in data:
            skw[k] = _coerce(k, data[k], float)
    if "modulation_set" in data:
        raw = data["modulation_set"]
        if not isinstance(raw, list):
            raise ConfigError("modulation_set", "a list of scheme names", raw)
        try:
            skw["modulation_set"] = tuple(parse_scheme(s) for s in raw)
        except ValueError as exc:
            raise ConfigError("modulation_set", "names like 'BPSK' or '16-QAM'", raw) from exc
    dkw = {k: _coerce(k, data[k], float) for k in _DIST_FIELDS if k in data}
    seed = _coerce("seed", data["seed"], int) if "seed" in data else Scenario.seed
    if not 0 <= seed < 2**64:
        raise ConfigError("seed", "an unsigned 64-bit integer", seed)
    return Scenario(SystemParams(**pkw), UrllcSpec(**skw), DistanceModel(**dkw), seed)


def load_config(path, strict: bool = True) -> Scenario:
    """Load a JSON configuration file. Every field is optional."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", "well-formed JSON", f"{path}: {exc}") from exc
    return scenario_from_dict(data, strict=strict)


def save_config(scenario: Scenario, path) -> None:
    Path(path).write_text(scenario.to_json() + "\n", encoding="utf-8")
