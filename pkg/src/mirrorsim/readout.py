"""Homodyne phase readout and the frequency-modulation calibration chain."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import SPEED_OF_LIGHT
from .errors import ConfigurationError


@dataclass(frozen=True)
class OpticalParams:
    """Cavity and detection parameters.

    ``sensitivity_floor`` is the displacement-equivalent phase noise in m/sqrt(Hz),
    read as a double-sided density (see :mod:`mirrorsim.model`). The volt scale is
    fixed by one calibration pair: a laser frequency step ``calibration_delta_nu``
    that produced ``calibration_voltage`` at the demodulator output.
    """

    finesse: float = 37000.0
    wavelength: float = 810e-9
    cavity_length: float = 1e-3
    sensitivity_floor: float = 2.8e-19
    calibration_delta_nu: float = 200.0
    calibration_voltage: float = 27e-3

    def __post_init__(self):
        if not self.finesse >= 1:
            raise ConfigurationError(f"finesse must be >= 1, got {self.finesse}")
        for name in ("wavelength", "cavity_length", "sensitivity_floor"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if not (self.calibration_delta_nu > 0 and self.calibration_voltage > 0):
            raise ConfigurationError("calibration pair must be positive")

    @property
    def optical_frequency(self):
        return SPEED_OF_LIGHT / self.wavelength

    @property
    def radians_per_meter(self):
        """Phase slope 8 F / lambda of the reflected beam at cavity resonance."""
        return 8.0 * self.finesse / self.wavelength

    @property
    def volt_per_meter(self):
        return self.calibration_voltage / frequency_calibration(self.calibration_delta_nu, self)


@dataclass(frozen=True, eq=False)
class PhaseTrace:
    sample_period: float
    samples: np.ndarray
    includes_noise: bool

    def __len__(self):
        return len(self.samples)


def displacement_to_phase(x, sample_period, optics: OpticalParams, rng=None, with_noise=True,
                          carrier_angular_frequency=None):
    """Reflected-beam phase for a sampled mirror displacement ``x`` (m).

    The noise term is white and Gaussian with displacement-equivalent density
    ``optics.sensitivity_floor``; per sample its variance is floor**2 / dt.
    When ``carrier_angular_frequency`` is given, the sampling rate must be at
    least ten times the carrier frequency.
    """
    x = np.asarray(x, dtype=float)
    if not sample_period > 0:
        raise ConfigurationError("sample_period must be positive")
    if carrier_angular_frequency is not None:
        fs = 1.0 / sample_period
        if fs < 10 * carrier_angular_frequency / (2 * math.pi) * (1 - 1e-12):
            raise ConfigurationError(
                f"sampling rate {fs:.6g} Hz is below 10x the carrier "
                f"{carrier_angular_frequency / (2 * math.pi):.6g} Hz"
            )
    gain = optics.radians_per_meter
    phase = gain * x
    if with_noise:
        if rng is None:
            raise ValueError("an rng is required when with_noise=True")
        sigma = gain * optics.sensitivity_floor / math.sqrt(sample_period)
        phase = phase + sigma * rng.standard_normal(x.shape)
    return PhaseTrace(sample_period, phase, bool(with_noise))


def phase_to_displacement(phase, optics: OpticalParams):
    return np.asarray(phase, dtype=float) / optics.radians_per_meter


def frequency_calibration(delta_nu, optics: OpticalParams):
    """Displacement equivalent to a laser frequency shift: L * dnu / nu."""
    return optics.cavity_length * delta_nu / optics.optical_frequency


def volts_to_meters(v, optics: OpticalParams | None = None):
    optics = optics or OpticalParams()
    return v / optics.volt_per_meter


def meters_to_volts(x, optics: OpticalParams | None = None):
    optics = optics or OpticalParams()
    return x * optics.volt_per_meter
