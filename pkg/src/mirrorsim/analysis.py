"""Statistics of quadrature traces: phase-space histograms, dispersions,
correlation functions with exponential fits, rotations, gain estimates and
jump detection above threshold."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft

from .errors import FitError
from .model import EnvironmentParams, OscillatorParams, thermal_variance
from .traces import QuadratureTrace

HISTOGRAM_BINS = 256
MIN_DISPERSION_SAMPLES = 100
FIT_FLOOR = 0.5
GAIN_SPREAD_LIMIT = 0.2


@dataclass(frozen=True, eq=False)
class PhaseSpaceHistogram:
    """Occupancy of a square grid over [-full_scale, full_scale)^2.

    ``cells[row, col]``: row indexes the X2 bin and col the X1 bin, both ascending.
    """

    cells: np.ndarray
    full_scale: float
    total_count: int
    overflow_count: int

    @property
    def bins(self):
        return self.cells.shape[0]

    @property
    def cell_width(self):
        return 2.0 * self.full_scale / self.bins

    @property
    def bin_centers(self):
        w = self.cell_width
        return -self.full_scale + w * (np.arange(self.bins) + 0.5)

    def marginal(self, axis):
        """Counts along X1 (axis=0) or X2 (axis=1)."""
        return self.cells.sum(axis=0 if axis == 0 else 1)


def histogram(trace: QuadratureTrace, full_scale, bins=HISTOGRAM_BINS):
    if not full_scale > 0:
        raise ValueError("full_scale must be positive")
    if len(trace) == 0:
        raise ValueError("cannot histogram an empty trace")
    width = 2.0 * full_scale / bins
    idx = np.floor((trace.samples + full_scale) / width).astype(np.int64)
    inside = np.all((idx >= 0) & (idx < bins), axis=1)
    cells = np.zeros((bins, bins), dtype=np.int64)
    np.add.at(cells, (idx[inside, 1], idx[inside, 0]), 1)
    total = len(trace)
    return PhaseSpaceHistogram(cells, float(full_scale), total, int(total - inside.sum()))


def dispersions(trace: QuadratureTrace):
    """Mean-subtracted standard deviations (Delta X1, Delta X2)."""
    if len(trace) < MIN_DISPERSION_SAMPLES:
        raise ValueError(
            f"dispersions need at least {MIN_DISPERSION_SAMPLES} samples, got {len(trace)}"
        )
    s = trace.samples.std(axis=0)
    return float(s[0]), float(s[1])


def variances(trace: QuadratureTrace):
    d1, d2 = dispersions(trace)
    return d1 * d1, d2 * d2


@dataclass(frozen=True, eq=False)
class CorrelationEstimate:
    """C_ij(tau) on lags 0, dt, ..., tau_max and, for i == j, the exponential fit.

    ``fitted_gamma`` is the damping in C = V exp(-gamma tau / 2); ``fit_residual``
    is the rms deviation of log C from the fitted line over ``fit_points`` lags.
    """

    lags: np.ndarray
    values: np.ndarray
    i: int
    j: int
    fitted_gamma: float | None = None
    fitted_variance: float | None = None
    fit_residual: float | None = None
    fit_points: int = 0


def _cross_correlation(a, b, max_lag):
    """Biased estimate (1/N) sum_t a_t b_{t+k} for k = 0..max_lag, means removed."""
    n = a.shape[0]
    a = a - a.mean()
    b = b - b.mean()
    size = sp_fft.next_fast_len(n + max_lag, real=True)
    spec = np.conj(sp_fft.rfft(a, size))
    spec *= sp_fft.rfft(b, size)
    return sp_fft.irfft(spec, size)[:max_lag + 1] / n


def correlation(trace: QuadratureTrace, i, j, tau_max, fit=None):
    """C_ij(tau) = <X_i(t) X_j(t + tau)> with the biased 1/N estimator.

    For ``i == j`` an exponential is fitted (``fit`` defaults to True then);
    see :func:`fit_exponential`.
    """
    if i not in (0, 1) or j not in (0, 1):
        raise ValueError("quadrature indices must be 0 or 1")
    if tau_max < 0:
        raise ValueError("tau_max must be non-negative")
    if tau_max > trace.duration / 10 * (1 + 1e-9):
        raise ValueError(
            f"tau_max = {tau_max:.6g} s exceeds a tenth of the trace duration "
            f"({trace.duration:.6g} s)"
        )
    dt = trace.sample_period
    max_lag = int(math.floor(tau_max / dt + 1e-9))
    values = _cross_correlation(trace.samples[:, i], trace.samples[:, j], max_lag)
    lags = np.arange(max_lag + 1) * dt
    if fit is None:
        fit = i == j
    if not fit:
        return CorrelationEstimate(lags, values, i, j)
    gamma, var, resid, npts = fit_exponential(lags, values)
    return CorrelationEstimate(lags, values, i, j, gamma, var, resid, npts)


def fit_exponential(lags, values, floor=FIT_FLOOR):
    """Least-squares line through log C over the leading lags with C > floor * C(0).

    Returns (gamma, variance, rms log residual, number of points) for
    C = variance * exp(-gamma tau / 2).
    """
    lags = np.asarray(lags, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size == 0 or not values[0] > 0:
        raise FitError("zero-lag correlation is not positive")
    below = np.nonzero(values <= floor * values[0])[0]
    n = below[0] if below.size else values.size
    if n < 2:
        raise FitError("fewer than two lags above the fit floor")
    t = lags[:n]
    y = np.log(values[:n])
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    return -2.0 * slope, float(math.exp(intercept)), float(np.sqrt(np.mean(resid**2))), int(n)


def rotate_quadratures(trace: QuadratureTrace, theta):
    """(X1', X2') = (X1 cos + X2 sin, -X1 sin + X2 cos)."""
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    return trace.with_samples(trace.samples @ rot)


def inferred_temperature(variance, p: OscillatorParams, e: EnvironmentParams):
    """Temperature whose thermal variance equals ``variance``."""
    return e.temperature * variance / thermal_variance(p, e)


@dataclass(frozen=True)
class GainEstimate:
    mean: float
    spread: float
    inconsistent: bool
    estimates: tuple


def gain_estimates_from_fits(gamma, free_variance, gamma1=None, gamma2=None, variance1=None,
                             variance2=None):
    """Independent estimates of g from measured dampings and variances.

    Available ones among Gamma1/Gamma - 1, 1 - Gamma2/Gamma, V_free/V1 - 1,
    1 - V_free/V2 are returned in that order.
    """
    out = []
    if gamma1 is not None:
        out.append(gamma1 / gamma - 1.0)
    if gamma2 is not None:
        out.append(1.0 - gamma2 / gamma)
    if variance1 is not None:
        out.append(free_variance / variance1 - 1.0)
    if variance2 is not None:
        out.append(1.0 - free_variance / variance2)
    return out


def estimate_gain(estimates, spread_limit=GAIN_SPREAD_LIMIT):
    """Average of independent gain estimates; spread = (max - min) / |mean|."""
    est = [float(v) for v in estimates if v is not None]
    if len(est) < 2:
        raise ValueError("estimate_gain needs at least two independent estimates")
    mean = float(np.mean(est))
    rng = max(est) - min(est)
    spread = rng / abs(mean) if mean != 0 else (0.0 if rng == 0 else math.inf)
    return GainEstimate(mean, spread, spread > spread_limit, tuple(est))


@dataclass(frozen=True, eq=False)
class JumpStats:
    """Lobe residence along X2 with hysteresis.

    ``dwell_times`` covers the segments between registered jumps; the first
    starts when the trace first enters a lobe and the last ends with the trace.
    ``lobe_means`` is (mean X2 in the + lobe, mean X2 in the - lobe), NaN for an
    unvisited lobe.
    """

    dwell_times: np.ndarray
    jump_count: int
    lobe_means: tuple
    jump_indices: np.ndarray
    segment_signs: np.ndarray

    @property
    def jump_rate(self):
        total = float(np.sum(self.dwell_times))
        return self.jump_count / total if total > 0 else 0.0


def detect_jumps(trace: QuadratureTrace, threshold):
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    x2 = trace.x2
    side = np.zeros(x2.shape[0], dtype=np.int8)
    side[x2 > threshold] = 1
    side[x2 < -threshold] = -1
    hits = np.nonzero(side)[0]
    nan2 = (math.nan, math.nan)
    if hits.size == 0:
        return JumpStats(np.zeros(0), 0, nan2, np.zeros(0, dtype=np.int64), np.zeros(0, np.int8))
    # a jump is a change of sign between consecutive lobe visits
    signs = side[hits]
    change = np.nonzero(signs[1:] != signs[:-1])[0] + 1
    jump_idx = hits[change]
    bounds = np.concatenate(([hits[0]], jump_idx, [x2.shape[0]]))
    seg_signs = np.concatenate(([signs[0]], signs[change]))
    dwell = np.diff(bounds) * trace.sample_period
    means = []
    for s in (1, -1):
        sel = np.zeros(x2.shape[0], dtype=bool)
        for k in np.nonzero(seg_signs == s)[0]:
            sel[bounds[k]:bounds[k + 1]] = True
        means.append(float(x2[sel].mean()) if sel.any() else math.nan)
    return JumpStats(dwell, int(jump_idx.size), tuple(means), jump_idx, seg_signs)
