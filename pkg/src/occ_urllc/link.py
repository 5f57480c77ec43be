"""Modulation-dependent BER, camera-limited rate and transmission latency."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

# Latency reported for a link that carries no data.
OUTAGE_LATENCY = math.inf


@dataclass(frozen=True, order=True)
class ModulationScheme:
    """BPSK or square M-QAM. Ordering follows spectral efficiency."""

    order: int
    kind: str = "MQAM"

    def __post_init__(self):
        if self.kind == "BPSK":
            if self.order != 2:
                raise ValueError("BPSK has order 2")
        elif self.kind == "MQAM":
            if self.order < 4 or self.order & (self.order - 1):
                raise ValueError(f"M-QAM order must be a power of two >= 4, got {self.order}")
        else:
            raise ValueError(f"unknown modulation kind {self.kind!r}")

    @property
    def spectral_efficiency(self) -> float:
        return 1.0 if self.kind == "BPSK" else math.log2(self.order)

    @property
    def name(self) -> str:
        return "BPSK" if self.kind == "BPSK" else f"{self.order}-QAM"

    def __str__(self):
        return self.name


BPSK = ModulationScheme(2, "BPSK")
DEFAULT_MODULATION_SET = (BPSK,) + tuple(ModulationScheme(m) for m in (4, 8, 16, 32, 64))


def parse_scheme(text) -> ModulationScheme:
    """Parse ``'BPSK'``, ``'16-QAM'``, ``'16QAM'`` or a bare integer order."""
    if isinstance(text, ModulationScheme):
        return text
    if isinstance(text, int) and not isinstance(text, bool):
        return BPSK if text == 2 else ModulationScheme(text)
    s = str(text).strip().upper()
    if s == "BPSK":
        return BPSK
    match = re.fullmatch(r"(\d+)(?:-?QAM)?", s)
    if not match:
        raise ValueError(f"cannot parse modulation scheme {text!r}")
    return ModulationScheme(int(match.group(1)))


def q_function(x):
    """Gaussian tail probability Q(x) = erfc(x / sqrt(2)) / 2."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def exact_ber(mod: ModulationScheme, snr):
    """Uncoded BER of BPSK or square M-QAM at simplified SNR ``snr``."""
    snr = np.asarray(snr, dtype=float)
    if np.any(snr < 0):
        raise ValueError("snr must be non-negative")
    if mod.kind == "BPSK":
        return q_function(np.sqrt(2.0 * snr))
    k = math.log2(mod.order)
    return 4.0 / k * q_function(np.sqrt(3.0 * snr * k / (mod.order - 1)))


def approx_ber(power, cnr, order):
    """Invertible exponential BER bound 0.2 exp(-1.5 P^2 S / (M - 1))."""
    order = np.asarray(order, dtype=float)
    if np.any(order <= 1):
        raise ValueError("constellation size must exceed 1")
    power = np.asarray(power, dtype=float)
    return 0.2 * np.exp(-1.5 * power**2 * np.asarray(cnr, dtype=float) / (order - 1.0))


def ber_gap_constant(ber_tgt: float) -> float:
    return -1.5 / math.log(5.0 * ber_tgt)


def continuous_order(power, cnr, k):
    """Real-valued constellation size that meets the target BER exactly."""
    power = np.asarray(power, dtype=float)
    if np.any(power < 0):
        raise ValueError("power must be non-negative")
    return 1.0 + k * power**2 * np.asarray(cnr, dtype=float)


def _check_distance(distance):
    distance = np.asarray(distance, dtype=float)
    if np.any(~(distance > 0)):
        raise ValueError("distance must be > 0")
    return distance


def continuous_rate(power, distance, cnr, l0, k):
    """Continuous-modulation rate (l0 / D) log2(1 + K P^2 S) in bit/s."""
    distance = _check_distance(distance)
    power = np.asarray(power, dtype=float)
    return l0 / distance * np.log1p(k * power**2 * np.asarray(cnr, dtype=float)) / math.log(2.0)


def discrete_rate(mod: ModulationScheme, distance, l0):
    distance = _check_distance(distance)
    return l0 / distance * mod.spectral_efficiency


def latency(rate, packet_size):
    """Transmission latency L_p / rate; a zero rate gives :data:`OUTAGE_LATENCY`."""
    rate = np.asarray(rate, dtype=float)
    if np.any(rate < 0):
        raise ValueError("rate must be non-negative")
    with np.errstate(divide="ignore"):
        out = np.where(rate > 0, packet_size / np.where(rate > 0, rate, 1.0), OUTAGE_LATENCY)
    return out[()] if out.ndim == 0 else out


def feasible_scheme_index(snr, schemes, ber_tgt):
    """Index into ``schemes`` of the highest-SE scheme meeting ``ber_tgt``; -1 when none does."""
    if len(schemes) == 0:
        raise ValueError("modulation set is empty")
    snr = np.asarray(snr, dtype=float)
    idx = np.full(snr.shape, -1, dtype=int)
    for i, mod in enumerate(schemes):
        idx = np.where(exact_ber(mod, snr) <= ber_tgt, i, idx)
    return idx


def best_feasible_modulation(snr: float, schemes, ber_tgt: float):
    """Highest spectral-efficiency scheme with exact BER <= ``ber_tgt``, else ``None``."""
    schemes = sorted(schemes, key=lambda mo: mo.spectral_efficiency)
    i = int(feasible_scheme_index(float(snr), schemes, ber_tgt))
    return None if i < 0 else schemes[i]
