"""Stochastic integration of the mechanical mode.

Two integrators share one configuration type:

* ``FULL_BAND`` integrates x(t) at a fraction of the mechanical period and
  recovers the quadratures through the optical readout and the lock-in chain.
* ``ROTATING_FRAME`` integrates the slow quadratures directly. Below the
  saturation bound the update is the exact Gaussian transition of the linear
  drift; when the feedback force phasor exceeds the bound it is clipped to that
  magnitude and applied on top of the free relaxation.

Randomness: the dynamics draw from ``numpy.random.default_rng(seed)``. The
readout noise of the full-band pipeline uses an independent child stream of
``SeedSequence(seed)``. Both are consumed in fixed-size chunks, and the
single-step functions draw from the same streams in the same order, so stepping
by hand reproduces :func:`run_experiment` exactly.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from . import _kernels
from .demodulation import DemodConfig, FilterSpec, LockIn, calibrate
from .errors import ConfigurationError, IntegratorDivergenceError
from .model import (
    EnvironmentParams,
    FeedbackConfig,
    FeedbackMode,
    OscillatorParams,
    feedback_force_matrix,
    langevin_force_psd,
    quadrature_dampings,
    quadrature_diffusion,
    quadrature_drift_matrix,
)
from .readout import OpticalParams
from .traces import QuadratureTrace, TraceOrigin

__all__ = [
    "Integrator",
    "SimConfig",
    "FullBandState",
    "RotatingState",
    "QuadratureTrace",
    "generate_langevin_increment",
    "feedback_force",
    "step_full_band",
    "step_rotating",
    "run_experiment",
    "run_ensemble",
    "derive_seeds",
    "warmup_time",
]

CHUNK_STEPS = 1 << 19
MAX_SEED = 2**64 - 1


class Integrator(str, enum.Enum):
    FULL_BAND = "full_band"
    ROTATING_FRAME = "rotating_frame"


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to reproduce one trajectory.

    ``warmup`` is the transient discarded before recording; ``None`` picks
    10 / Gamma_slowest (plus the filter settling time for the full band).
    ``initial_state`` is (x1, x2) in the rotating frame or (x, v) in the full
    band; it defaults to rest at the origin.
    ``optics`` and ``filters`` configure the full-band readout chain.
    """

    integrator: Integrator
    time_step: float
    duration: float
    output_sample_period: float
    seed: int = 0
    oscillator: OscillatorParams = field(
        default_factory=lambda: OscillatorParams.from_frequency(1859e3, 44000, 230e-6)
    )
    environment: EnvironmentParams = field(default_factory=EnvironmentParams)
    feedback: FeedbackConfig = field(default_factory=FeedbackConfig)
    warmup: float | None = None
    initial_state: tuple[float, float] = (0.0, 0.0)
    optics: OpticalParams = field(default_factory=OpticalParams)
    filters: FilterSpec | None = None
    readout_noise: bool = True

    def __post_init__(self):
        object.__setattr__(self, "integrator", Integrator(self.integrator))
        problems = self.diagnostics()
        if problems:
            raise ConfigurationError("; ".join(problems))

    def diagnostics(self):
        """List of violated invariants, empty when the configuration is usable."""
        out = []
        dt, T, dout = self.time_step, self.duration, self.output_sample_period
        if not dt > 0:
            out.append(f"sim.time_step must be > 0, got {dt}")
            return out
        if not (T >= dout * (1 - 1e-9) and dout >= dt * (1 - 1e-9)):
            out.append(
                f"need duration >= output_sample_period >= time_step, got {T}, {dout}, {dt}"
            )
        else:
            ratio = dout / dt
            if abs(ratio - round(ratio)) > 1e-6 * ratio:
                out.append(
                    f"sim.output_sample_period {dout} is not an integer multiple of time_step {dt}"
                )
        if not 0 <= self.seed <= MAX_SEED:
            out.append(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.warmup is not None and self.warmup < 0:
            out.append("sim.warmup must be >= 0")
        w0 = self.oscillator.resonance_angular_frequency
        if self.integrator is Integrator.FULL_BAND:
            bound = 2 * math.pi / (20 * w0)
            if dt > bound * (1 + 1e-9):
                out.append(
                    f"sim.time_step {dt:.6g} s exceeds the full-band stability bound "
                    f"2*pi/(20*Omega_M) = {bound:.6g} s"
                )
        else:
            gamma_fast = self.oscillator.damping_rate * (1.0 + self.feedback.gain)
            bound = 1.0 / (20 * gamma_fast)
            if dt > bound * (1 + 1e-9):
                out.append(
                    f"sim.time_step {dt:.6g} s exceeds the rotating-frame bound "
                    f"1/(20*Gamma*(1+g)) = {bound:.6g} s"
                )
        return out

    @property
    def steps_per_output(self):
        return int(round(self.output_sample_period / self.time_step))

    @property
    def output_length(self):
        return int(math.floor(self.duration / self.output_sample_period + 1e-9))

    def filter_spec(self):
        if self.filters is not None:
            return self.filters
        return FilterSpec(self.oscillator.resonance_angular_frequency)


@dataclass(frozen=True)
class FullBandState:
    position: float
    velocity: float
    time: float = 0.0


@dataclass(frozen=True)
class RotatingState:
    x1: float
    x2: float
    time: float = 0.0


# --------------------------------------------------------------------------
# forces and noise


def generate_langevin_increment(rng, p: OscillatorParams, e: EnvironmentParams, dt, size=None):
    """Thermal impulse (N s) accumulated over ``dt``: Gaussian with variance S_T dt."""
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    sigma = math.sqrt(langevin_force_psd(p, e) * dt)
    draw = rng.standard_normal(size)
    return sigma * draw


def _force_coefficients(p: OscillatorParams, fb: FeedbackConfig):
    coef_v = fb.gain * p.effective_mass * p.damping_rate
    return coef_v, coef_v * p.resonance_angular_frequency


def feedback_force(state: FullBandState, cfg: SimConfig, t=None):
    """Instantaneous feedback force (N) on the full-band coordinate."""
    fb = cfg.feedback
    p = cfg.oscillator
    coef_v, coef_x = _force_coefficients(p, fb)
    fmax = fb.saturation_force or 0.0
    return _kernels.feedback_force(
        _kernels.MODE_CODES[fb.mode.value],
        state.position,
        state.velocity,
        state.time if t is None else t,
        coef_v,
        coef_x,
        2.0 * p.resonance_angular_frequency,
        fb.modulation_phase,
        fmax,
    )


# --------------------------------------------------------------------------
# full band


@dataclass(frozen=True)
class _FullBandCoefficients:
    decay: float
    stiffness: float
    inv_mass: float
    mode: int
    coef_v: float
    coef_x: float
    two_omega: float
    phase: float
    fmax: float

    @classmethod
    def build(cls, cfg: SimConfig):
        p, fb, dt = cfg.oscillator, cfg.feedback, cfg.time_step
        w0, gamma = p.resonance_angular_frequency, p.damping_rate
        a = math.exp(-gamma * dt)
        # stiffness chosen so the free discrete map has eigenvalues exp((-Gamma/2 +/- i Omega_d) dt)
        wd = math.sqrt(w0**2 - gamma**2 / 4.0)
        stiffness = (1.0 + a - 2.0 * math.sqrt(a) * math.cos(wd * dt)) / dt**2
        coef_v, coef_x = _force_coefficients(p, fb)
        return cls(a, stiffness, 1.0 / p.effective_mass, _kernels.MODE_CODES[fb.mode.value],
                   coef_v, coef_x, 2.0 * w0, fb.modulation_phase, fb.saturation_force or 0.0)

    def run(self, x, v, t0, dt, impulses, out):
        return _kernels.full_band_steps(
            x, v, t0, dt, self.decay, self.stiffness, self.inv_mass, self.mode, self.coef_v,
            self.coef_x, self.two_omega, self.phase, self.fmax, impulses, out,
        )


def _require(cfg, integrator):
    if cfg.integrator is not integrator:
        raise ConfigurationError(f"configuration is for the {cfg.integrator.value} integrator")


def step_full_band(state: FullBandState, cfg: SimConfig, rng) -> FullBandState:
    """One kick-drift step: velocity kick with exact viscous decay, then position drift."""
    _require(cfg, Integrator.FULL_BAND)
    dt = cfg.time_step
    coeffs = _FullBandCoefficients.build(cfg)
    impulse = np.array([generate_langevin_increment(rng, cfg.oscillator, cfg.environment, dt)])
    out = np.empty(1)
    x, v, bad = coeffs.run(state.position, state.velocity, state.time, dt, impulse, out)
    if bad >= 0:
        raise IntegratorDivergenceError(0, state.time + dt)
    return FullBandState(x, v, state.time + dt)


# --------------------------------------------------------------------------
# rotating frame


@dataclass(frozen=True)
class _RotatingCoefficients:
    phi: np.ndarray
    chol: np.ndarray
    free_decay: float
    free_sigma: float
    force_matrix: np.ndarray
    fmax: float
    drive: float

    @classmethod
    def build(cls, cfg: SimConfig):
        p, e, fb, dt = cfg.oscillator, cfg.environment, cfg.feedback, cfg.time_step
        gamma = p.damping_rate
        diff = quadrature_diffusion(p, e)
        drift = quadrature_drift_matrix(p, fb)
        phi, cov = _exact_transition(drift, diff, dt)
        chol = _safe_cholesky(cov)
        free_decay = math.exp(-gamma * dt / 2.0)
        free_sigma = math.sqrt(diff * (1.0 - math.exp(-gamma * dt)) / gamma)
        drive = (1.0 - free_decay) / (gamma / 2.0) / (2.0 * p.effective_mass * p.resonance_angular_frequency)
        return cls(phi, chol, free_decay, free_sigma, feedback_force_matrix(p, fb),
                   fb.saturation_force or 0.0, drive)

    def run(self, x1, x2, noise, out):
        return _kernels.rotating_steps(x1, x2, self.phi, self.chol, self.free_decay,
                                       self.free_sigma, self.force_matrix, self.fmax,
                                       self.drive, noise, out)


def _exact_transition(drift, diffusion, dt):
    """Transition matrix and noise covariance of dX = A X dt + sqrt(D) dW over dt (Van Loan)."""
    n = drift.shape[0]
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = -drift
    block[:n, n:] = diffusion * np.eye(n)
    block[n:, n:] = drift.T
    e = linalg.expm(block * dt)
    phi = e[n:, n:].T
    cov = phi @ e[:n, n:]
    cov = 0.5 * (cov + cov.T)
    return phi, cov


def _safe_cholesky(cov):
    if not np.any(cov):
        return np.zeros_like(cov)
    return np.linalg.cholesky(cov)


def step_rotating(state: RotatingState, cfg: SimConfig, rng) -> RotatingState:
    """One step of the slow-quadrature dynamics (exact Gaussian update when unsaturated)."""
    _require(cfg, Integrator.ROTATING_FRAME)
    coeffs = _RotatingCoefficients.build(cfg)
    noise = rng.standard_normal((1, 2))
    out = np.empty((1, 2))
    x1, x2, bad = coeffs.run(state.x1, state.x2, noise, out)
    t = state.time + cfg.time_step
    if bad >= 0:
        raise IntegratorDivergenceError(0, t)
    return RotatingState(x1, x2, t)


# --------------------------------------------------------------------------
# orchestration


def warmup_time(cfg: SimConfig):
    """Transient discarded before recording: 10 / Gamma_slowest, plus filter settling in the full band.

    Gamma_slowest is the slowest positive principal damping, floored at Gamma/100
    (it vanishes at threshold and is negative above it).
    """
    if cfg.warmup is not None:
        return cfg.warmup
    gamma = cfg.oscillator.damping_rate
    slow = min(quadrature_dampings(cfg.oscillator, cfg.feedback))
    t = 10.0 / max(slow, 0.01 * gamma)
    if cfg.integrator is Integrator.FULL_BAND:
        spec = cfg.filter_spec()
        t += 20.0 / (2 * math.pi * spec.lowpass_cutoff) + 20.0 / (math.pi * spec.bandpass_width)
    return t


def run_experiment(cfg: SimConfig, demod: DemodConfig | None = None) -> QuadratureTrace:
    """Simulate ``cfg`` and return the recorded quadrature trace.

    The full band returns demodulated readout quadratures; ``demod`` overrides
    the lock-in calibration (by default it is calibrated with injected tones).
    """
    if cfg.integrator is Integrator.ROTATING_FRAME:
        return _run_rotating(cfg)
    return _run_full_band(cfg, demod)


def _warmup_outputs(cfg):
    return int(math.ceil(warmup_time(cfg) / cfg.output_sample_period - 1e-9))


def _run_rotating(cfg: SimConfig):
    rng = np.random.default_rng(cfg.seed)
    coeffs = _RotatingCoefficients.build(cfg)
    m = cfg.steps_per_output
    n_out = cfg.output_length
    skip = _warmup_outputs(cfg)
    total_steps = (skip + n_out) * m
    chunk = max(m, (CHUNK_STEPS // m) * m)
    result = np.empty((n_out, 2))
    x1, x2 = cfg.initial_state
    buf = np.empty((chunk, 2))
    done = 0
    written = 0
    while done < total_steps:
        n = min(chunk, total_steps - done)
        noise = rng.standard_normal((n, 2))
        x1, x2, bad = coeffs.run(x1, x2, noise, buf[:n])
        if bad >= 0:
            step = done + bad
            raise IntegratorDivergenceError(step, (step + 1) * cfg.time_step)
        picked = buf[m - 1:n:m]
        first_out = done // m
        lo = max(0, skip - first_out)
        if lo < picked.shape[0]:
            block = picked[lo:]
            result[written:written + block.shape[0]] = block
            written += block.shape[0]
        done += n
    return QuadratureTrace(cfg.output_sample_period, result, TraceOrigin.DIRECT_ROTATING_FRAME,
                           cfg.seed)


def readout_rng(seed):
    """Generator for the optical readout noise, independent of the dynamics stream."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])


def _run_full_band(cfg: SimConfig, demod: DemodConfig | None):
    dt = cfg.time_step
    spec = cfg.filter_spec()
    if demod is None:
        demod = calibrate(spec, dt, cfg.oscillator.resonance_angular_frequency,
                          radians_per_meter=cfg.optics.radians_per_meter)
    m = cfg.steps_per_output
    n_out = cfg.output_length
    skip = _warmup_outputs(cfg)
    total_steps = (skip + n_out) * m
    chunk = max(m, (CHUNK_STEPS // m) * m)

    rng = np.random.default_rng(cfg.seed)
    rng_readout = readout_rng(cfg.seed)
    coeffs = _FullBandCoefficients.build(cfg)
    sigma = math.sqrt(langevin_force_psd(cfg.oscillator, cfg.environment) * dt)
    # positions are recorded at the end of each step, one sample after its start time
    lockin = LockIn(spec, demod, dt, decimation=m, time_offset=dt)
    x, v = cfg.initial_state
    result = np.empty((n_out, 2))
    xs = np.empty(chunk)
    impulses = np.empty(chunk)
    phase = np.empty(chunk)
    noise = np.empty(chunk)
    gain = cfg.optics.radians_per_meter
    sigma_phase = gain * cfg.optics.sensitivity_floor / math.sqrt(dt)
    done = 0
    written = 0
    while done < total_steps:
        n = min(chunk, total_steps - done)
        rng.standard_normal(out=impulses[:n])
        impulses[:n] *= sigma
        x, v, bad = coeffs.run(x, v, done * dt, dt, impulses[:n], xs[:n])
        if bad >= 0:
            step = done + bad
            raise IntegratorDivergenceError(step, (step + 1) * dt)
        # same arithmetic as readout.displacement_to_phase, without temporaries
        np.multiply(xs[:n], gain, out=phase[:n])
        if cfg.readout_noise:
            rng_readout.standard_normal(out=noise[:n])
            noise[:n] *= sigma_phase
            phase[:n] += noise[:n]
        picked = lockin.process(phase[:n])
        first_out = done // m
        lo = max(0, skip - first_out)
        if lo < picked.shape[0]:
            block = picked[lo:]
            result[written:written + block.shape[0]] = block
            written += block.shape[0]
        done += n
    return QuadratureTrace(cfg.output_sample_period, result, TraceOrigin.DEMODULATED_READOUT,
                           cfg.seed)


def derive_seeds(master_seed, n):
    """``n`` independent 64-bit seeds spawned deterministically from ``master_seed``."""
    children = np.random.SeedSequence(master_seed).spawn(n)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def run_ensemble(configs, max_workers=None):
    """Run independent configurations in parallel threads; results keep input order.

    The compiled kernels release the GIL, so threads give real concurrency.
    """
    configs = list(configs)
    _kernels.warm_up()
    if max_workers == 1 or len(configs) <= 1:
        return [run_experiment(c) for c in configs]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(run_experiment, configs))


def with_seed(cfg: SimConfig, seed):
    return replace(cfg, seed=seed)


def is_stable_linear(cfg: SimConfig):
    """True when the unsaturated quadrature dynamics relax to a stationary state."""
    if cfg.feedback.mode is FeedbackMode.OFF:
        return True
    return min(quadrature_dampings(cfg.oscillator, cfg.feedback)) > 0
