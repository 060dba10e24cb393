"""Simulation of a feedback-controlled high-Q mirror mode and its lock-in readout."""

from .errors import (
    CalibrationError,
    ConfigurationError,
    FitError,
    IntegratorDivergenceError,
    ThresholdError,
)
from .model import EnvironmentParams, FeedbackConfig, FeedbackMode, OscillatorParams
from .traces import QuadratureTrace, TraceOrigin

__all__ = [
    "CalibrationError",
    "ConfigurationError",
    "EnvironmentParams",
    "FeedbackConfig",
    "FeedbackMode",
    "FitError",
    "IntegratorDivergenceError",
    "OscillatorParams",
    "QuadratureTrace",
    "ThresholdError",
    "TraceOrigin",
]
