"""Line-of-sight Lambertian channel, received power, noise and SNR."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .config import SystemParams


@dataclass(frozen=True)
class LinkGeometry:
    """One link state. Fields may be scalars or broadcastable arrays."""

    distance: object
    aoi_deg: object = 60.0
    irradiance_deg: object = 70.0

    def __post_init__(self):
        d = np.asarray(self.distance, dtype=float)
        if np.any(~(d > 0)):
            raise ValueError("distance must be > 0")
        aoi = np.asarray(self.aoi_deg, dtype=float)
        if np.any((aoi < 0) | (aoi > 180)):
            raise ValueError("angle of incidence must lie in [0, 180] degrees")
        phi = np.asarray(self.irradiance_deg, dtype=float)
        if np.any((phi < 0) | (phi > 90)):
            raise ValueError("angle of irradiance must lie in [0, 90] degrees")

    @classmethod
    def from_params(cls, distance, p: SystemParams, aoi_deg=None) -> "LinkGeometry":
        return cls(distance, p.aoi_deg if aoi_deg is None else aoi_deg, p.phi_irradiance_deg)


class NoiseVariances(NamedTuple):
    shot_full: object
    thermal: float
    simplified: float


def effective_area(aoi_deg, p: SystemParams):
    """Signal collection area A T_s g cos(theta); zero outside the field of view."""
    aoi = np.asarray(aoi_deg, dtype=float)
    area = p.pupil_area * p.filter_transmittance * p.lens_gain * np.cos(np.radians(aoi))
    out = np.where(aoi <= p.fov_deg, area, 0.0)
    return out[()] if out.ndim == 0 else out


def channel_gain(geom: LinkGeometry, p: SystemParams):
    """DC gain of the LoS link, scaled by ``p.gain_scale``."""
    d = np.asarray(geom.distance, dtype=float)
    m = p.lambertian_order
    radiant = (m + 1.0) / (2.0 * math.pi * d**2) * np.cos(np.radians(geom.irradiance_deg)) ** m
    return p.gain_scale * radiant * effective_area(geom.aoi_deg, p)


def received_power(geom: LinkGeometry, power, p: SystemParams):
    return np.asarray(power, dtype=float) * channel_gain(geom, p)


def distance_from_pixels(eta, p: SystemParams):
    """Inter-vehicle distance (f / a) (delta / eta) from the LED separation on the image."""
    eta = np.asarray(eta, dtype=float)
    if np.any(~(eta > 0)):
        raise ValueError("pixel separation must be > 0")
    return p.focal_length / p.pixel_size * p.led_baseline / eta


def noise_variances(geom: LinkGeometry, power, p: SystemParams) -> NoiseVariances:
    """Full shot noise (signal plus background), thermal noise and the simplified total."""
    power = np.asarray(power, dtype=float)
    if np.any(power < 0):
        raise ValueError("power must be non-negative")
    signal_shot = 2.0 * p.electron_charge * p.responsivity * p.noise_bandwidth * received_power(geom, power, p)
    return NoiseVariances(signal_shot + p.shot_noise_var, p.thermal_noise_var, p.noise_var)


def cnr(geom: LinkGeometry, p: SystemParams):
    """Channel-to-noise ratio S = zeta^2 H^2 / sigma_s (W^-2)."""
    return p.responsivity**2 * channel_gain(geom, p) ** 2 / p.noise_var


def snr(geom: LinkGeometry, power, p: SystemParams):
    power = np.asarray(power, dtype=float)
    if np.any(power < 0):
        raise ValueError("power must be non-negative")
    return power**2 * cnr(geom, p)


def cnr_at(distance, p: SystemParams, aoi_deg=None):
    """Shorthand for :func:`cnr` at the configured angles."""
    return cnr(LinkGeometry.from_params(distance, p, aoi_deg), p)
