"""Closed-form description of a viscously damped mechanical mode.

Everything here is a pure function of its arguments. Spectral densities are
double-sided in angular frequency, so a variance is ``(1/2pi) * integral(S dw)``
over the whole real line. With that convention the Langevin force spectrum
``2 M Gamma kB T`` gives a quadrature variance ``kB T / (M Omega_M**2)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import BOLTZMANN, SPEED_OF_LIGHT
from .errors import ConfigurationError, ThresholdError


@dataclass(frozen=True)
class OscillatorParams:
    """Single mechanical mode: resonance (rad/s), quality factor, effective mass (kg)."""

    resonance_angular_frequency: float
    quality_factor: float
    effective_mass: float
    damping_rate: float = field(init=False)

    def __post_init__(self):
        if not (self.resonance_angular_frequency > 0 and self.effective_mass > 0):
            raise ConfigurationError("resonance frequency and effective mass must be positive")
        if not self.quality_factor >= 1:
            raise ConfigurationError(f"quality factor must be >= 1, got {self.quality_factor}")
        object.__setattr__(
            self, "damping_rate", self.resonance_angular_frequency / self.quality_factor
        )

    @classmethod
    def from_frequency(cls, frequency_hz, quality_factor, effective_mass):
        return cls(2 * math.pi * frequency_hz, quality_factor, effective_mass)

    @property
    def resonance_frequency(self):
        """Resonance in Hz."""
        return self.resonance_angular_frequency / (2 * math.pi)


@dataclass(frozen=True)
class EnvironmentParams:
    temperature: float = 300.0
    boltzmann_constant: float = BOLTZMANN

    def __post_init__(self):
        if not self.temperature >= 0:
            raise ConfigurationError(f"temperature must be >= 0 K, got {self.temperature}")

    @property
    def thermal_energy(self):
        return self.boltzmann_constant * self.temperature


class FeedbackMode(str, enum.Enum):
    OFF = "off"
    COLD_DAMP = "cold_damp"
    PARAMETRIC_VISCOUS = "parametric_viscous"
    PARAMETRIC_SPRING = "parametric_spring"


@dataclass(frozen=True)
class FeedbackConfig:
    """Feedback force settings.

    ``modulation_phase`` offsets the 2 Omega_M drive, ``cos(2 Omega_M t + phase)``.
    At zero phase the viscous parametric force cools X1 and heats X2.
    ``saturation_force`` is the bound (N) on the feedback force; ``None`` means
    unbounded, which is only allowed below the parametric threshold.
    """

    mode: FeedbackMode = FeedbackMode.OFF
    gain: float = 0.0
    modulation_phase: float = 0.0
    saturation_force: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", FeedbackMode(self.mode))
        if not self.gain >= 0:
            raise ConfigurationError(f"feedback gain must be >= 0, got {self.gain}")
        if self.saturation_force is not None and not self.saturation_force > 0:
            raise ConfigurationError("saturation_force must be > 0 when present")
        if self.is_parametric and self.gain >= 1 and self.saturation_force is None:
            raise ConfigurationError(
                f"FeedbackConfig: parametric gain {self.gain} >= 1 requires saturation_force "
                "(the amplified quadrature has no stationary variance otherwise)"
            )

    @property
    def is_parametric(self):
        return self.mode in (FeedbackMode.PARAMETRIC_VISCOUS, FeedbackMode.PARAMETRIC_SPRING)


# --------------------------------------------------------------------------
# susceptibilities and spectra


def susceptibility(p: OscillatorParams, omega):
    """Mechanical compliance chi(omega) = 1 / (M (Omega_M^2 - omega^2 - i Gamma omega)), in m/N."""
    omega = np.asarray(omega, dtype=float)
    m, w0, gamma = p.effective_mass, p.resonance_angular_frequency, p.damping_rate
    return 1.0 / (m * (w0**2 - omega**2 - 1j * gamma * omega))


def feedback_susceptibility(p: OscillatorParams, g, omega):
    """Compliance with the damping term multiplied by (1 + g) (ideal cold damping)."""
    omega = np.asarray(omega, dtype=float)
    m, w0, gamma = p.effective_mass, p.resonance_angular_frequency, p.damping_rate
    return 1.0 / (m * (w0**2 - omega**2 - 1j * (1.0 + g) * gamma * omega))


def langevin_force_psd(p: OscillatorParams, e: EnvironmentParams):
    """Thermal force spectrum S_T = 2 M Gamma kB T (N^2 s), flat in frequency."""
    return 2.0 * p.effective_mass * p.damping_rate * e.thermal_energy


def fdt_force_psd(p: OscillatorParams, e: EnvironmentParams, omega):
    """Force spectrum from the dissipative part of 1/chi: -(2 kB T / omega) Im(1/chi)."""
    omega = np.asarray(omega, dtype=float)
    return -(2.0 * e.thermal_energy / omega) * np.imag(1.0 / susceptibility(p, omega))


def quadrature_psd(p: OscillatorParams, e: EnvironmentParams, omega, gamma_eff=None):
    """Lorentzian spectrum of one slow quadrature driven by thermal noise.

    ``gamma_eff`` is the damping seen by that quadrature (defaults to Gamma);
    the thermal drive is always the intrinsic one.
    """
    omega = np.asarray(omega, dtype=float)
    gamma = p.damping_rate
    ge = gamma if gamma_eff is None else gamma_eff
    w0, m = p.resonance_angular_frequency, p.effective_mass
    return gamma * e.thermal_energy / (m * w0**2 * (omega**2 + ge**2 / 4))


def thermal_variance(p: OscillatorParams, e: EnvironmentParams):
    """Per-quadrature variance kB T / (M Omega_M^2), in m^2."""
    return e.thermal_energy / (p.effective_mass * p.resonance_angular_frequency**2)


def effective_temperature(temperature, g):
    if g <= -1:
        raise ValueError(f"effective temperature undefined for g = {g} <= -1 (anti-damping)")
    return temperature / (1.0 + g)


def cold_damped_variance(p: OscillatorParams, e: EnvironmentParams, g):
    return thermal_variance(p, EnvironmentParams(effective_temperature(e.temperature, g),
                                                 e.boltzmann_constant))


def effective_dampings(p: OscillatorParams, g):
    """(Gamma_1, Gamma_2) = Gamma (1 + g), Gamma (1 - g). Gamma_2 <= 0 above threshold."""
    gamma = p.damping_rate
    return gamma * (1.0 + g), gamma * (1.0 - g)


def parametric_variances(p: OscillatorParams, e: EnvironmentParams, g):
    """Below-threshold variances of the cooled and amplified quadratures."""
    if g >= 1:
        raise ThresholdError(f"parametric variances only exist below threshold (g < 1), got g = {g}")
    v = thermal_variance(p, e)
    g1, g2 = effective_dampings(p, g)
    gamma = p.damping_rate
    return v * gamma / g1, v * gamma / g2


def autocorrelation_model(variance, gamma_eff, tau):
    """Stationary quadrature correlation V exp(-gamma_eff tau / 2)."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("lag must be non-negative")
    return variance * np.exp(-gamma_eff * tau / 2.0)


def saturation_force(light_power):
    """Largest force at Omega_M from a fully square-modulated beam: (2P/c)(4/pi)."""
    if light_power < 0:
        raise ValueError("light power must be non-negative")
    return 2.0 * light_power / SPEED_OF_LIGHT * 4.0 / math.pi


def saturation_amplitude(light_power, p: OscillatorParams):
    """Mean oscillation amplitude <X2> reached when the feedback force saturates."""
    return saturation_force(light_power) / (
        p.effective_mass * p.damping_rate * p.resonance_angular_frequency
    )


# --------------------------------------------------------------------------
# slow-quadrature dynamics


def feedback_force_matrix(p: OscillatorParams, fb: FeedbackConfig):
    """Linear map from (X1, X2) to the feedback force quadratures (F1, F2), in N/m.

    Obtained by projecting each feedback force onto cos/sin(Omega_M t) and
    dropping harmonics.
    """
    k = fb.gain * p.effective_mass * p.damping_rate * p.resonance_angular_frequency
    c, s = math.cos(fb.modulation_phase), math.sin(fb.modulation_phase)
    if fb.mode is FeedbackMode.OFF or fb.gain == 0:
        return np.zeros((2, 2))
    if fb.mode is FeedbackMode.COLD_DAMP:
        return k * np.array([[0.0, -1.0], [1.0, 0.0]])
    if fb.mode is FeedbackMode.PARAMETRIC_VISCOUS:
        return k * np.array([[s, c], [c, -s]])
    return k * np.array([[c, -s], [-s, -c]])


def quadrature_drift_matrix(p: OscillatorParams, fb: FeedbackConfig):
    """Drift A of d(X1, X2)/dt = A (X1, X2) + noise in the linear (unsaturated) regime."""
    m, w0, gamma = p.effective_mass, p.resonance_angular_frequency, p.damping_rate
    # dX1/dt gets -F2/(2 M w0), dX2/dt gets +F1/(2 M w0)
    coupling = np.array([[0.0, -1.0], [1.0, 0.0]]) / (2.0 * m * w0)
    return -0.5 * gamma * np.eye(2) + coupling @ feedback_force_matrix(p, fb)


def quadrature_dampings(p: OscillatorParams, fb: FeedbackConfig):
    """Effective dampings along the principal axes of the linear drift, fastest first.

    Off gives (Gamma, Gamma), cold damping (1+g)Gamma twice, either parametric
    force Gamma(1 +/- g).
    """
    eig = np.linalg.eigvals(quadrature_drift_matrix(p, fb))
    rates = np.sort(-2.0 * eig.real)[::-1]
    return float(rates[0]), float(rates[1])


def quadrature_diffusion(p: OscillatorParams, e: EnvironmentParams):
    """White-noise intensity of each slow quadrature, Gamma kB T / (M Omega_M^2), in m^2/s.

    The force quadratures carry spectra 2 S_T each and enter divided by 2 M Omega_M.
    """
    return 2.0 * langevin_force_psd(p, e) / (2.0 * p.effective_mass * p.resonance_angular_frequency) ** 2
