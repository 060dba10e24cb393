from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class TraceOrigin(str, enum.Enum):
    DIRECT_ROTATING_FRAME = "direct_rotating_frame"
    DEMODULATED_READOUT = "demodulated_readout"


@dataclass(frozen=True, eq=False)
class QuadratureTrace:
    """Uniformly sampled slow quadratures (X1, X2) in metres.

    ``samples`` has shape (n, 2); column 0 is X1, column 1 is X2.
    """

    sample_period: float
    samples: np.ndarray
    origin: TraceOrigin = TraceOrigin.DIRECT_ROTATING_FRAME
    seed: int | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2 or samples.shape[1] != 2:
            raise ValueError(f"samples must have shape (n, 2), got {samples.shape}")
        if samples.shape[0] == 0:
            raise ValueError("a quadrature trace needs at least one sample")
        if not self.sample_period > 0:
            raise ValueError("sample_period must be positive")
        if not np.all(np.isfinite(samples)):
            raise ValueError("trace contains non-finite values")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "origin", TraceOrigin(self.origin))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def x1(self):
        return self.samples[:, 0]

    @property
    def x2(self):
        return self.samples[:, 1]

    @property
    def times(self):
        return np.arange(len(self)) * self.sample_period

    @property
    def duration(self):
        return len(self) * self.sample_period

    def with_samples(self, samples):
        return QuadratureTrace(self.sample_period, samples, self.origin, self.seed)
