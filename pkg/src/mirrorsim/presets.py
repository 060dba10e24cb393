"""Parameter sets and configuration builders for the standard scenarios."""

from __future__ import annotations

import math

from .demodulation import FilterSpec
from .model import EnvironmentParams, FeedbackConfig, OscillatorParams, saturation_force
from .readout import OpticalParams
from .simulator import Integrator, SimConfig

PAPER_FREQUENCY = 1859e3  # Hz
PAPER_QUALITY_FACTOR = 44000.0
PAPER_MASS = 230e-6  # kg
PAPER_TEMPERATURE = 300.0
PAPER_LIGHT_POWER = 0.5  # W
PAPER_FULL_SCALE = 2e-15  # m
PAPER_LOWPASS_CUTOFF = 460.0  # Hz
PAPER_BANDPASS_WIDTH = 10e3  # Hz
PAPER_ACQUISITION_TIME = 0.5  # s

SCALED_FREQUENCY = 10e3
SCALED_QUALITY_FACTOR = 100.0

# full-band sampling: about 161.8 samples per mechanical period; the golden-ratio
# fraction keeps the square references from locking to the sample grid
FULL_BAND_SAMPLES_PER_PERIOD = 50.0 * (1.0 + math.sqrt(5.0))

ROTATING_OUTPUT_PERIOD = 1e-4  # s


def paper_oscillator():
    return OscillatorParams.from_frequency(PAPER_FREQUENCY, PAPER_QUALITY_FACTOR, PAPER_MASS)


def scaled_oscillator():
    return OscillatorParams.from_frequency(SCALED_FREQUENCY, SCALED_QUALITY_FACTOR, PAPER_MASS)


def paper_environment():
    return EnvironmentParams(PAPER_TEMPERATURE)


def paper_optics():
    return OpticalParams()


def paper_filters(p: OscillatorParams | None = None):
    p = p or paper_oscillator()
    return FilterSpec(p.resonance_angular_frequency, PAPER_BANDPASS_WIDTH, PAPER_LOWPASS_CUTOFF)


def scaled_filters(p: OscillatorParams | None = None, lowpass_cutoff=3000.0, bandpass_width=40e3):
    """Lock-in settings for the scaled oscillator.

    Its linewidths (100 Hz and up) are a sizeable fraction of the paper's 460 Hz
    cut-off, so the low-pass and bandpass are opened up to keep the chain
    transparent to the quadrature fluctuations.
    """
    p = p or scaled_oscillator()
    return FilterSpec(p.resonance_angular_frequency, bandpass_width, lowpass_cutoff)


def saturated_feedback(mode, gain, light_power=PAPER_LIGHT_POWER, modulation_phase=0.0):
    return FeedbackConfig(mode, gain, modulation_phase, saturation_force(light_power))


def rotating_time_step(p: OscillatorParams, fb: FeedbackConfig, output_sample_period):
    """Largest step dividing the output period that meets the 1/(20 Gamma (1+g)) bound."""
    bound = 1.0 / (20.0 * p.damping_rate * (1.0 + fb.gain))
    m = max(1, math.ceil(output_sample_period / bound - 1e-9))
    return output_sample_period / m


def rotating_config(feedback=None, duration=60.0, seed=0, oscillator=None, environment=None,
                    output_sample_period=ROTATING_OUTPUT_PERIOD, **kwargs):
    p = oscillator or paper_oscillator()
    fb = feedback or FeedbackConfig()
    dt = rotating_time_step(p, fb, output_sample_period)
    return SimConfig(
        Integrator.ROTATING_FRAME, dt, duration, output_sample_period, seed, p,
        environment or paper_environment(), fb, **kwargs,
    )


def full_band_time_step(p: OscillatorParams):
    return 1.0 / (p.resonance_frequency * FULL_BAND_SAMPLES_PER_PERIOD)


def full_band_config(feedback=None, duration=10.0, seed=0, oscillator=None, environment=None,
                     output_sample_period=6.25e-5, filters=None, **kwargs):
    """Full-band configuration; the output period is rounded to a whole number of steps."""
    p = oscillator or scaled_oscillator()
    fb = feedback or FeedbackConfig()
    dt = full_band_time_step(p)
    m = max(1, round(output_sample_period / dt))
    return SimConfig(
        Integrator.FULL_BAND, dt, duration, m * dt, seed, p, environment or paper_environment(),
        fb, filters=filters or scaled_filters(p), **kwargs,
    )
