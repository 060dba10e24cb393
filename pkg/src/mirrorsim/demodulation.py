"""Lock-in extraction of the slow quadratures from the homodyne phase.

Chain: resonant bandpass around the carrier, mixing with two square references
in quadrature, identical second-order Butterworth low-pass filters on both
channels, then decimation by sample picking. All filters are causal recursive
sections running at the full input rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import signal

from . import _kernels
from .errors import CalibrationError, ConfigurationError
from .traces import QuadratureTrace, TraceOrigin

MAX_CHANNEL_MISMATCH = 0.01
CHUNK_SAMPLES = 1 << 19


@dataclass(frozen=True)
class FilterSpec:
    bandpass_center: float  # rad/s
    bandpass_width: float = 10e3  # Hz, -3 dB full width
    lowpass_cutoff: float = 460.0  # Hz
    lowpass_order: int = 2

    def __post_init__(self):
        if not self.bandpass_center > 0:
            raise ConfigurationError("bandpass_center must be positive")
        if not self.bandpass_width > 0:
            raise ConfigurationError("bandpass_width must be positive")
        if not self.lowpass_cutoff > 0:
            raise ConfigurationError("lowpass_cutoff must be positive")
        if self.lowpass_order != 2:
            raise ConfigurationError(f"lowpass_order must be 2, got {self.lowpass_order}")

    @property
    def center_frequency(self):
        return self.bandpass_center / (2 * math.pi)


@dataclass(frozen=True)
class DemodConfig:
    """Reference and scaling of the lock-in.

    ``gain_correction`` multiplies the low-passed mixer outputs; ``pi/2`` is the
    ideal value for a square reference and a unity-gain bandpass.
    ``radians_per_meter`` converts the phase input back to displacement.
    ``channel_balance`` is the measured Q/I gain ratio after calibration.
    """

    reference_frequency: float  # rad/s
    reference_phase: float = 0.0
    gain_correction: float = math.pi / 2
    radians_per_meter: float = 1.0
    channel_balance: float = 1.0

    def __post_init__(self):
        if not self.reference_frequency > 0:
            raise ConfigurationError("reference_frequency must be positive")
        if not self.gain_correction > 0:
            raise ConfigurationError("gain_correction must be positive")
        if not self.radians_per_meter > 0:
            raise ConfigurationError("radians_per_meter must be positive")


def _check_rate(sample_period, carrier):
    fs = 1.0 / sample_period
    if fs < 10 * carrier / (2 * math.pi) * (1 - 1e-12):
        raise ConfigurationError(
            f"sampling rate {fs:.6g} Hz is below 10x the carrier {carrier / (2 * math.pi):.6g} Hz"
        )


def bandpass_sos(spec: FilterSpec, sample_period):
    _check_rate(sample_period, spec.bandpass_center)
    fs = 1.0 / sample_period
    b, a = signal.iirpeak(spec.center_frequency, spec.center_frequency / spec.bandpass_width, fs=fs)
    return signal.tf2sos(b, a)


def lowpass_sos(spec: FilterSpec, sample_period):
    return signal.butter(spec.lowpass_order, spec.lowpass_cutoff, fs=1.0 / sample_period, output="sos")


def bandpass(x, spec: FilterSpec, sample_period):
    """Second-order resonant bandpass with unity gain at the centre."""
    return signal.sosfilt(bandpass_sos(spec, sample_period), np.asarray(x, dtype=float))


def lowpass2(x, spec: FilterSpec, sample_period):
    return signal.sosfilt(lowpass_sos(spec, sample_period), np.asarray(x, dtype=float))


def reference_cycles(cfg: DemodConfig, phase_offset, sample_period, time_offset=0.0):
    """(cycles per sample, cycle at sample 0) of the reference cos(w t + reference_phase - offset)."""
    per_sample = cfg.reference_frequency * sample_period / (2 * math.pi)
    start = (cfg.reference_frequency * time_offset + cfg.reference_phase - phase_offset) / (2 * math.pi)
    return per_sample, start


def square_reference(n, cfg: DemodConfig, phase_offset, sample_period, start_index=0,
                     time_offset=0.0):
    """+/-1 square wave sign(cos(w t + reference_phase - phase_offset)) on samples
    ``start_index .. start_index + n - 1``, sample k sitting at k*dt + time_offset.

    The sign is taken from the fractional carrier cycle, +1 on [-1/4, 1/4].
    """
    per_sample, start = reference_cycles(cfg, phase_offset, sample_period, time_offset)
    cyc = (start_index + np.arange(n)) * per_sample + start
    cyc -= np.floor(cyc)
    return np.where((cyc <= 0.25) | (cyc >= 0.75), 1.0, -1.0)


def mix_square(x, cfg: DemodConfig, phase_offset, sample_period, start_index=0, time_offset=0.0):
    """Multiply by the square reference. Offsets 0 and pi/2 give the I and Q mixers."""
    x = np.asarray(x, dtype=float)
    return x * square_reference(x.shape[0], cfg, phase_offset, sample_period, start_index,
                                time_offset)


class LockIn:
    """Streaming demodulator: feed phase samples chunk by chunk, get decimated (X1, X2).

    Filter states and the sample counter persist between calls, so splitting a
    record into chunks gives the same output as one call.
    """

    def __init__(self, spec: FilterSpec, cfg: DemodConfig, sample_period, decimation=1,
                 time_offset=0.0):
        if decimation < 1:
            raise ConfigurationError("decimation must be >= 1")
        self.spec = spec
        self.cfg = cfg
        self.sample_period = sample_period
        self.decimation = int(decimation)
        self.time_offset = time_offset
        self._bp = bandpass_sos(spec, sample_period)
        self._lp = lowpass_sos(spec, sample_period)
        if self._bp.shape[0] != 1 or self._lp.shape[0] != 1:
            raise ConfigurationError("the lock-in kernel runs single second-order sections")
        self._zi_bp = np.zeros((self._bp.shape[0], 2))
        self._zi_i = np.zeros((self._lp.shape[0], 2))
        self._zi_q = np.zeros((self._lp.shape[0], 2))
        self._count = 0

    def process(self, phase, decimate=True):
        """Filter a chunk; returns the kept (X1, X2) rows, or every row if ``decimate`` is False."""
        phase = np.ascontiguousarray(phase, dtype=float)
        dec = self.decimation if decimate else 1
        k0 = self._count
        n_keep = (k0 + phase.shape[0]) // dec - k0 // dec
        out = np.empty((n_keep, 2))
        per_sample, c_i = reference_cycles(self.cfg, 0.0, self.sample_period, self.time_offset)
        _, c_q = reference_cycles(self.cfg, math.pi / 2, self.sample_period, self.time_offset)
        scale = self.cfg.gain_correction / self.cfg.radians_per_meter
        written = _kernels.lockin_steps(phase, self._bp, self._zi_bp, self._lp, self._zi_i,
                                        self._zi_q, k0, per_sample, c_i, c_q, scale, dec, out)
        assert written == n_keep
        self._count += phase.shape[0]
        return out


def demodulate(phase_trace, spec: FilterSpec, cfg: DemodConfig, output_sample_period=None, seed=None):
    """Quadratures (m) of a phase trace, decimated to ``output_sample_period``.

    The output period must be an integer number of input samples and at least
    a quarter of the low-pass time scale, 1 / (4 f_c).
    """
    if abs(cfg.channel_balance - 1.0) > MAX_CHANNEL_MISMATCH:
        raise CalibrationError(
            f"I/Q channel gains differ by {abs(cfg.channel_balance - 1):.2%} (limit 1%)"
        )
    dt = phase_trace.sample_period
    if output_sample_period is None:
        output_sample_period = 1.0 / (4 * spec.lowpass_cutoff)
    decimation = decimation_factor(output_sample_period, dt)
    if decimation * dt < 1.0 / (4 * spec.lowpass_cutoff) * (1 - 1e-9):
        raise ConfigurationError("output sample period is shorter than 1/(4 f_c)")
    lockin = LockIn(spec, cfg, dt, decimation)
    samples = lockin.process(phase_trace.samples)
    return QuadratureTrace(decimation * dt, samples, TraceOrigin.DEMODULATED_READOUT, seed)


def decimation_factor(output_sample_period, sample_period):
    ratio = output_sample_period / sample_period
    m = int(round(ratio))
    if m < 1 or abs(ratio - m) > 1e-6 * max(ratio, 1.0):
        raise ConfigurationError(
            f"output sample period {output_sample_period:.6g} s is not an integer multiple "
            f"of the input sample period {sample_period:.6g} s"
        )
    return m


def settle_samples(spec, sample_period):
    settle = 20.0 / (2 * math.pi * spec.lowpass_cutoff) + 20.0 / (math.pi * spec.bandpass_width)
    return int(math.ceil(settle / sample_period))


def calibrate(spec: FilterSpec, sample_period, reference_frequency=None, reference_phase=0.0,
              radians_per_meter=1.0):
    """Set the lock-in gain by injecting unit cos and sin tones at the reference.

    Returns a :class:`DemodConfig` whose I output for ``cos(w t)`` is 1 and
    records the Q/I gain ratio measured with ``sin(w t)``. Raises
    :class:`CalibrationError` when the two channels differ by more than 1 %.
    """
    w = spec.bandpass_center if reference_frequency is None else reference_frequency
    raw = DemodConfig(w, reference_phase, 1.0, 1.0)
    n_settle = settle_samples(spec, sample_period)
    n_avg = int(math.ceil(10.0 / spec.lowpass_cutoff / sample_period))
    t = np.arange(n_settle + n_avg) * sample_period
    gains = []
    for tone, channel in ((np.cos, 0), (np.sin, 1)):
        lock = LockIn(spec, raw, sample_period)
        out = lock.process(tone(w * t + reference_phase), decimate=False)
        gains.append(out[n_settle:, channel].mean())
    g_i, g_q = gains
    balance = g_q / g_i
    if abs(balance - 1.0) > MAX_CHANNEL_MISMATCH:
        raise CalibrationError(f"I/Q channel gains differ by {abs(balance - 1):.2%} (limit 1%)")
    return DemodConfig(w, reference_phase, 1.0 / g_i, radians_per_meter, balance)


def response_matrix(spec: FilterSpec, cfg: DemodConfig, sample_period):
    """Steady-state 2x2 map from injected (X1, X2) tones to demodulated outputs."""
    n_settle = settle_samples(spec, sample_period)
    n_avg = int(math.ceil(10.0 / spec.lowpass_cutoff / sample_period))
    t = np.arange(n_settle + n_avg) * sample_period
    w, ph = cfg.reference_frequency, cfg.reference_phase
    cols = []
    for tone in (np.cos, np.sin):
        lock = LockIn(spec, cfg, sample_period)
        x = tone(w * t + ph) * cfg.radians_per_meter
        cols.append(lock.process(x, decimate=False)[n_settle:].mean(axis=0))
    return np.column_stack(cols)


def noise_bandwidth(spec: FilterSpec, cfg: DemodConfig, sample_period, method="impulse",
                    rng=None, n_phases=8, duration=None):
    """Output variance (m^2) per unit double-sided input density (m^2/Hz), in Hz.

    ``method="impulse"`` computes the expected variance of the chain driven by
    white noise exactly, from the squared impulse responses of the
    time-varying chain averaged over reference phases. ``method="monte_carlo"``
    drives the chain with Gaussian white noise and measures the variance.
    """
    dt = sample_period
    if method == "monte_carlo":
        rng = np.random.default_rng() if rng is None else rng
        if duration is None:
            duration = 2000.0 / spec.lowpass_cutoff
        n_settle = settle_samples(spec, dt)
        lock = LockIn(spec, cfg, dt, decimation=max(1, int(1.0 / (4 * spec.lowpass_cutoff) / dt)))
        chunk = CHUNK_SAMPLES
        total = n_settle + int(math.ceil(duration / dt))
        outs = []
        done = 0
        sigma = cfg.radians_per_meter / math.sqrt(dt)
        while done < total:
            n = min(chunk, total - done)
            out = lock.process(sigma * rng.standard_normal(n))
            outs.append(out)
            done += n
        out = np.concatenate(outs)[int(math.ceil(n_settle / lock.decimation)):]
        return float(np.mean(out.var(axis=0)))
    if method != "impulse":
        raise ValueError(f"unknown method {method!r}")

    bp = bandpass_sos(spec, dt)
    lp = lowpass_sos(spec, dt)
    bp_ir = _impulse_response(bp, dt, 1.0 / (math.pi * spec.bandpass_width))
    lp_ir = _impulse_response(lp, dt, 1.0 / (2 * math.pi * spec.lowpass_cutoff * math.sqrt(0.5)))
    n_lp = lp_ir.shape[0]
    period = 2 * math.pi / cfg.reference_frequency
    variances = []
    for k in range(n_phases):
        # output index whose reference phase is k/n_phases of a carrier period
        n_out = n_lp - 1 + int(round(k * period / n_phases / dt))
        m = np.arange(n_out - n_lp + 1, n_out + 1)
        weights = lp_ir[n_out - m]
        for offset in (0.0, math.pi / 2):
            r = square_reference(m.shape[0], cfg, offset, dt, start_index=m[0])
            h = signal.fftconvolve(weights * r, bp_ir[::-1])
            variances.append(np.sum(h * h) / dt)
    return float(np.mean(variances)) * cfg.gain_correction**2


def _impulse_response(sos, dt, time_constant, tail=1e-9):
    n = int(math.ceil(-math.log(tail) * time_constant / dt)) + 1
    x = np.zeros(n)
    x[0] = 1.0
    return signal.sosfilt(sos, x)


def noise_equivalent_displacement(spec: FilterSpec, delta_x_min, cfg: DemodConfig | None = None,
                                  sample_period=None, method="impulse", rng=None):
    """Smallest resolvable quadrature displacement: delta_x_min * sqrt(B_eff).

    When no demodulator is given, the chain is calibrated at a default rate of
    about 16 samples per carrier period (deliberately not an integer ratio).
    """
    if delta_x_min == 0:
        return 0.0
    if sample_period is None:
        sample_period = default_sample_period(spec.bandpass_center)
    if cfg is None:
        cfg = calibrate(spec, sample_period)
    return delta_x_min * math.sqrt(noise_bandwidth(spec, cfg, sample_period, method=method, rng=rng))


def default_sample_period(carrier):
    """Sample period with ~16.18 samples per carrier cycle (golden-ratio offset)."""
    return 2 * math.pi / carrier / (10.0 * (1 + math.sqrt(5)) / 2)


def with_reference_phase(cfg: DemodConfig, phase):
    return replace(cfg, reference_phase=phase)
