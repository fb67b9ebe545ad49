"""Quadrature statistics of weak coherent pulses under balanced homodyne detection.

Quadratures use the normalization X = (a + a^dagger)/2, so the vacuum (and any
coherent state) has standard deviation 1/2 in every quadrature. A homodyne
photoelectron difference N is converted with X = N / (2 sqrt(n_lo)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.stats import norm

VACUUM_SIGMA = 0.5
PROTOCOL_PHASES = (0, 90, 180, 270)
BOB_BASES = (0, 90)


@dataclass(frozen=True)
class CoherentPulse:
    """Signal pulse sent by Alice.

    Attributes:
        n_sig: mean photon number. Zero is a vacuum pulse.
        phase_a: Alice's phase shift in degrees, wrapped into [0, 360).
    """

    n_sig: float
    phase_a: float = 0.0

    def __post_init__(self):
        if not (self.n_sig >= 0 and math.isfinite(self.n_sig)):
            raise ValueError(f"n_sig must be finite and >= 0, got {self.n_sig}")
        object.__setattr__(self, "phase_a", float(self.phase_a) % 360.0)

    @property
    def amplitude(self) -> float:
        return math.sqrt(self.n_sig)


@dataclass(frozen=True)
class ChannelModel:
    """Line, interferometer and detector imperfections seen by Bob.

    Attributes:
        transmittance: line transmittance T in [0, 1].
        visibility: fringe visibility V in [0, 1]; scales the quadrature mean only.
        detector_efficiency: photodiode quantum efficiency in [0, 1].
        n_lo: mean local-oscillator photon number per pulse.
        electronic_noise_electrons: rms amplifier noise in photoelectrons.
        electronic_sigma: if set, the additive noise standard deviation in
            quadrature units, overriding the value derived from
            ``electronic_noise_electrons``.
        phase_jitter_deg: standard deviation of a zero-mean Gaussian phase
            error drawn independently for every pulse (0 disables it).
    """

    transmittance: float = 1.0
    visibility: float = 1.0
    detector_efficiency: float = 1.0
    n_lo: float = 1e6
    electronic_noise_electrons: float = 0.0
    electronic_sigma: Optional[float] = None
    phase_jitter_deg: float = 0.0

    def __post_init__(self):
        for name in ("transmittance", "visibility", "detector_efficiency"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if not self.n_lo > 0:
            raise ValueError(f"n_lo must be > 0, got {self.n_lo}")
        if self.electronic_noise_electrons < 0:
            raise ValueError("electronic_noise_electrons must be >= 0")
        if self.electronic_sigma is not None and self.electronic_sigma < 0:
            raise ValueError("electronic_sigma must be >= 0")
        if self.phase_jitter_deg < 0:
            raise ValueError("phase_jitter_deg must be >= 0")

    @classmethod
    def ideal(cls) -> "ChannelModel":
        return cls()

    def with_total_sigma(self, sigma: float) -> "ChannelModel":
        """Return a copy whose overall quadrature spread equals ``sigma``.

        The excess over the vacuum level is attributed to electronic noise.
        """
        if sigma < VACUUM_SIGMA:
            raise ValueError(f"total sigma {sigma} is below the vacuum limit 0.5")
        return replace(self, electronic_sigma=math.sqrt(sigma**2 - VACUUM_SIGMA**2))

    @property
    def amplitude_gain(self) -> float:
        """Factor multiplying sqrt(n_sig) in the quadrature mean."""
        return math.sqrt(self.transmittance * self.detector_efficiency) * self.visibility


def check_basis(phase_b) -> int:
    if phase_b not in BOB_BASES:
        raise ValueError(f"Bob's basis must be 0 or 90 degrees, got {phase_b}")
    return int(phase_b)


def photocurrent_to_quadrature(n_diff, n_lo):
    """Normalize a photoelectron-number difference to a quadrature amplitude."""
    return np.asarray(n_diff, dtype=float) / (2.0 * np.sqrt(n_lo))


def quadrature_to_photocurrent(x, n_lo):
    return np.asarray(x, dtype=float) * 2.0 * np.sqrt(n_lo)


def electronic_sigma(channel: ChannelModel) -> float:
    """Amplifier noise standard deviation in quadrature units."""
    if channel.electronic_sigma is not None:
        return channel.electronic_sigma
    if channel.electronic_noise_electrons == 0:
        return 0.0
    scale = channel.n_lo * channel.detector_efficiency
    if scale == 0:
        raise ValueError("cannot normalize electronic noise when n_lo * detector_efficiency is 0")
    return channel.electronic_noise_electrons / (2.0 * math.sqrt(scale))


def quadrature_mean(pulse: CoherentPulse, channel: ChannelModel, basis) -> float:
    """Mean homodyne quadrature for Alice's pulse measured at LO phase ``basis``."""
    phase = math.radians(pulse.phase_a - check_basis(basis))
    return pulse.amplitude * channel.amplitude_gain * math.cos(phase)


def quadrature_sigma(channel: ChannelModel) -> float:
    return math.sqrt(VACUUM_SIGMA**2 + electronic_sigma(channel) ** 2)


def quadrature_pdf(x, pulse: CoherentPulse, channel: ChannelModel, basis):
    """Gaussian density of the measured quadrature (phase jitter not included)."""
    return norm.pdf(x, loc=quadrature_mean(pulse, channel, basis), scale=quadrature_sigma(channel))


def sample_quadratures(n_sig, phase_a, phase_b, channel: ChannelModel, rng: np.random.Generator):
    """Vectorized homodyne sampling.

    ``n_sig``, ``phase_a`` and ``phase_b`` broadcast against each other; one
    quadrature is drawn per element. With phase jitter enabled, a phase error is
    drawn before the Gaussian noise for every element, so a given generator
    state always yields the same sequence.
    """
    n_sig, phase_a, phase_b = np.broadcast_arrays(
        np.asarray(n_sig, dtype=float), np.asarray(phase_a, dtype=float), np.asarray(phase_b, dtype=float)
    )
    phase = np.radians(phase_a - phase_b)
    if channel.phase_jitter_deg > 0:
        phase = phase + np.radians(channel.phase_jitter_deg) * rng.standard_normal(phase.shape)
    mean = np.sqrt(n_sig) * channel.amplitude_gain * np.cos(phase)
    return mean + quadrature_sigma(channel) * rng.standard_normal(phase.shape)


def sample_quadrature(pulse: CoherentPulse, channel: ChannelModel, basis, rng: np.random.Generator) -> float:
    """Draw one homodyne outcome for a single pulse."""
    check_basis(basis)
    return float(sample_quadratures(pulse.n_sig, pulse.phase_a, basis, channel, rng)[()])
