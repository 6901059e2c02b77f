"""Path loss, Rayleigh block fading and coherent BPSK over AWGN.

Energies are in joules per bit, gains are dimensionless power ratios.  Noise
is specified by its spectral level ``N0``; the real-valued decision
statistic after coherent combining carries noise of variance ``N0/2``, which
makes the uncoded bit error rate exactly ``Q(sqrt(2*snr))``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 3e8


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class PathLossParams:
    carrier_frequency: float = 2.4e9
    reference_distance: float = 1.0
    exponent: float = 3.0

    def __post_init__(self):
        if self.carrier_frequency <= 0 or self.reference_distance <= 0:
            raise ValueError("carrier_frequency and reference_distance must be positive")
        if self.exponent <= 0:
            raise ValueError("path loss exponent must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency


@dataclass(frozen=True)
class NoiseParams:
    n0_db: float = -134.0

    @property
    def linear(self) -> float:
        return float(db_to_linear(self.n0_db))

    def energy_above_floor(self, x_db: float) -> float:
        """Energy that sits ``x_db`` dB above N0."""
        return float(db_to_linear(self.n0_db + x_db))


def path_loss_gain(params: PathLossParams, distance) -> np.ndarray | float:
    """Mean power gain ``(lambda/(4 pi d0))^2 (d/d0)^-mu``."""
    d = np.asarray(distance, dtype=float)
    if np.any(d < params.reference_distance):
        raise ValueError(
            f"distance below the reference distance {params.reference_distance} m"
        )
    d0 = params.reference_distance
    g = (params.wavelength / (4 * np.pi * d0)) ** 2 * (d / d0) ** (-params.exponent)
    return float(g) if g.ndim == 0 else g


@dataclass(frozen=True)
class ChannelRealization:
    """One link during one slot."""

    h: complex
    avg_gain: float

    @property
    def gain(self) -> float:
        return abs(self.h) ** 2


def draw_fading(avg_gain: float, rng: np.random.Generator) -> ChannelRealization:
    if avg_gain <= 0:
        raise ValueError("avg_gain must be positive")
    re, im = rng.standard_normal(2)
    h = complex(re, im) * np.sqrt(avg_gain / 2)
    return ChannelRealization(h, avg_gain)


def draw_gains(avg_gain, rng: np.random.Generator, size=None) -> np.ndarray:
    """Vectorised |h|^2 draws, Exponential with the given mean."""
    avg_gain = np.asarray(avg_gain, dtype=float)
    if np.any(avg_gain <= 0):
        raise ValueError("avg_gain must be positive")
    return rng.exponential(avg_gain, size=size)


def received_snr(energy: float, gain, noise: NoiseParams):
    """``gain * E / N0``; pass a realization for the instantaneous SNR."""
    if isinstance(gain, ChannelRealization):
        gain = gain.gain
    return np.asarray(gain, dtype=float) * energy / noise.linear


def bpsk_llr(bits, amplitude: float, noise: NoiseParams, rng: np.random.Generator):
    """LLRs for bits sent at received amplitude ``|h| sqrt(E)`` (coherent)."""
    b = np.asarray(bits).reshape(-1)
    s = 1.0 - 2.0 * b
    n0 = noise.linear
    if n0 == 0:
        return s * np.inf if amplitude > 0 else np.zeros(b.size)
    y = amplitude * s + rng.standard_normal(b.size) * np.sqrt(n0 / 2)
    return 4.0 * amplitude * y / n0


def transmit(bits, energy_per_bit: float, h, noise: NoiseParams,
             rng: np.random.Generator) -> np.ndarray:
    """Send BPSK bits over one faded slot; returns per-bit LLRs."""
    gain = h.gain if isinstance(h, ChannelRealization) else float(h)
    return bpsk_llr(bits, np.sqrt(gain * energy_per_bit), noise, rng)


@dataclass(frozen=True)
class LinkBudget:
    """Common transmit energy used by every node in every slot."""

    tx_energy: float
    pathloss: PathLossParams = PathLossParams()
    noise: NoiseParams = NoiseParams()

    @classmethod
    def from_energy_db(cls, x_db: float, pathloss: PathLossParams = PathLossParams(),
                       noise: NoiseParams = NoiseParams()) -> "LinkBudget":
        """Transmit energy ``x_db`` dB above the noise floor."""
        return cls(noise.energy_above_floor(x_db), pathloss, noise)

    @classmethod
    def for_mean_snr(cls, snr_db: float, distance: float,
                     pathloss: PathLossParams = PathLossParams(),
                     noise: NoiseParams = NoiseParams()) -> "LinkBudget":
        """Energy giving mean SNR ``snr_db`` at ``distance`` (source to destination)."""
        energy = float(db_to_linear(snr_db)) * noise.linear / path_loss_gain(pathloss, distance)
        return cls(energy, pathloss, noise)

    @property
    def energy_db_above_floor(self) -> float:
        return float(linear_to_db(self.tx_energy / self.noise.linear))

    def mean_snr(self, distance) -> float:
        return received_snr(self.tx_energy, path_loss_gain(self.pathloss, distance), self.noise)
