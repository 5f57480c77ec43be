"""Reference-point calibration of the geometry constants.

The literal link budget gives far too little SNR for high-order QAM at tens of
metres, and the rate constant depends on the LED strip length, which is not
specified. ``calibrate`` fixes both from two reference operating points:

* ``gain_scale`` so that the reference scheme meets ``ber_tgt`` exactly at
  ``distance`` with transmit power ``power`` and incidence ``aoi_deg``;
* ``led_strip_length`` so that the reference scheme delivers one packet in
  ``latency`` at ``distance``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .channel import cnr_at
from .config import Scenario, SystemParams
from .link import ModulationScheme, exact_ber


@dataclass(frozen=True)
class CalibrationTarget:
    scheme: ModulationScheme = ModulationScheme(64)
    distance: float = 52.0
    power: float = 1.2
    aoi_deg: float = 60.0
    ber_tgt: float = 1e-4
    latency: float = 1e-3


def required_snr(scheme: ModulationScheme, ber_tgt: float) -> float:
    """SNR at which ``scheme``'s exact BER equals ``ber_tgt``."""
    hi = 1.0
    while exact_ber(scheme, hi) > ber_tgt:
        hi *= 2.0
    return brentq(lambda g: float(exact_ber(scheme, g)) - ber_tgt, 0.0, hi, xtol=1e-14, rtol=1e-15)


def calibrate_params(p: SystemParams, target: CalibrationTarget = CalibrationTarget()) -> SystemParams:
    snr_needed = required_snr(target.scheme, target.ber_tgt)
    base = p.replace(gain_scale=1.0)
    snr_literal = target.power**2 * float(cnr_at(target.distance, base, target.aoi_deg))
    # SNR scales with the square of the gain
    scale = math.sqrt(snr_needed / snr_literal)

    rate_needed = p.packet_size / target.latency
    l0_needed = rate_needed * target.distance / target.scheme.spectral_efficiency
    strip = l0_needed / p.l0 * p.led_strip_length
    return p.replace(gain_scale=scale, led_strip_length=strip)


def calibrate(sc: Scenario, target: CalibrationTarget = CalibrationTarget()) -> Scenario:
    return sc.replace(params=calibrate_params(sc.params, target))
