import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, linalg

from mirrorsim import model
from mirrorsim.errors import ConfigurationError, ThresholdError
from mirrorsim.model import (
    EnvironmentParams,
    FeedbackConfig,
    FeedbackMode,
    OscillatorParams,
)

KB = 1.380649e-23
C = 299_792_458.0

gains = st.floats(0.0, 0.95)
phases = st.floats(-math.pi, math.pi)


def test_paper_damping_rate(paper):
    assert paper.damping_rate == pytest.approx(2 * math.pi * 1859e3 / 44000, rel=1e-12)
    assert paper.damping_rate / (2 * math.pi) == pytest.approx(42.25, rel=1e-3)


def test_thermal_dispersion_matches_published(paper, env):
    # published free-mode dispersion 36.3e-17 m
    assert math.sqrt(model.thermal_variance(paper, env)) == pytest.approx(36.3e-17, rel=5e-3)


def test_thermal_variance_equals_integrated_displacement_spectrum(scaled, env):
    # independent route: integrate |chi|^2 S_T over frequency; the result is the
    # total displacement variance, which splits equally between two quadratures
    w0, gamma = scaled.resonance_angular_frequency, scaled.damping_rate
    s_t = 2 * scaled.effective_mass * gamma * KB * env.temperature

    def density(w):
        return abs(model.susceptibility(scaled, w)) ** 2 * s_t / (2 * math.pi)

    lo, hi = w0 - 200 * gamma, w0 + 200 * gamma
    core, _ = integrate.quad(density, lo, hi, points=[w0], limit=500)
    tails = integrate.quad(density, 0, lo, limit=200)[0] + integrate.quad(density, hi, np.inf)[0]
    # both signs of frequency in the double-sided convention
    total = 2 * (core + tails)
    assert total == pytest.approx(2 * model.thermal_variance(scaled, env), rel=2e-3)


def test_quadrature_psd_integrates_to_variance(paper, env):
    gamma = paper.damping_rate
    val, _ = integrate.quad(lambda w: model.quadrature_psd(paper, env, w) / (2 * math.pi),
                            -np.inf, np.inf)
    assert val == pytest.approx(model.thermal_variance(paper, env), rel=1e-6)
    cooled, _ = integrate.quad(
        lambda w: model.quadrature_psd(paper, env, w, 1.8 * gamma) / (2 * math.pi), -np.inf, np.inf)
    assert cooled == pytest.approx(model.thermal_variance(paper, env) / 1.8, rel=1e-6)


@given(st.floats(1e3, 1e7), st.floats(2.0, 1e5))
def test_fdt_force_spectrum_is_flat(f0, q):
    p = OscillatorParams.from_frequency(f0, q, 1e-4)
    e = EnvironmentParams(300.0)
    w = np.linspace(0.1, 3.0, 7) * p.resonance_angular_frequency
    np.testing.assert_allclose(model.fdt_force_psd(p, e, w), model.langevin_force_psd(p, e),
                               rtol=1e-9)


def test_cold_damping_temperature(paper, env):
    assert model.effective_temperature(300.0, 3.0) == pytest.approx(75.0)
    assert model.cold_damped_variance(paper, env, 3.0) == pytest.approx(
        model.thermal_variance(paper, env) / 4)
    with pytest.raises(ValueError):
        model.effective_temperature(300.0, -1.0)


def test_cold_linewidth_matches_published(paper):
    assert 4 * paper.damping_rate / (2 * math.pi) == pytest.approx(170.0, rel=6e-3)


def test_parametric_variances(paper, env):
    v = model.thermal_variance(paper, env)
    v1, v2 = model.parametric_variances(paper, env, 0.8)
    assert math.sqrt(v1 / v) == pytest.approx(0.745, rel=1e-3)
    assert math.sqrt(v2 / v) == pytest.approx(2.236, rel=1e-3)
    with pytest.raises(ThresholdError):
        model.parametric_variances(paper, env, 1.0)


def test_saturation_force_and_amplitude(paper):
    assert model.saturation_force(0.5) == pytest.approx(2 * 0.5 / C * 4 / math.pi, rel=1e-12)
    # published estimate of the oscillation amplitude
    assert model.saturation_amplitude(0.5, paper) == pytest.approx(6e-15, rel=0.01)
    with pytest.raises(ValueError):
        model.saturation_force(-1)


def test_autocorrelation_model():
    tau = np.array([0.0, 1.0, 2.0])
    np.testing.assert_allclose(model.autocorrelation_model(2.0, 1.0, tau), 2 * np.exp(-tau / 2))
    with pytest.raises(ValueError):
        model.autocorrelation_model(1.0, 1.0, -1.0)


def test_feedback_config_invariants():
    with pytest.raises(ConfigurationError, match="FeedbackConfig"):
        FeedbackConfig(FeedbackMode.PARAMETRIC_VISCOUS, 1.2)
    with pytest.raises(ConfigurationError):
        FeedbackConfig(FeedbackMode.COLD_DAMP, -0.1)
    with pytest.raises(ConfigurationError):
        FeedbackConfig(FeedbackMode.COLD_DAMP, 1.0, saturation_force=0.0)
    assert FeedbackConfig(FeedbackMode.PARAMETRIC_SPRING, 1.2, 0.0, 1e-9).is_parametric
    assert FeedbackConfig("cold_damp", 1.0).mode is FeedbackMode.COLD_DAMP


@given(gains)
def test_principal_dampings(g):
    p = OscillatorParams.from_frequency(10e3, 100.0, 1e-4)
    gamma = p.damping_rate
    cold = model.quadrature_dampings(p, FeedbackConfig(FeedbackMode.COLD_DAMP, g))
    np.testing.assert_allclose(cold, [(1 + g) * gamma] * 2, rtol=1e-9)
    for mode in (FeedbackMode.PARAMETRIC_VISCOUS, FeedbackMode.PARAMETRIC_SPRING):
        d = model.quadrature_dampings(p, FeedbackConfig(mode, g))
        np.testing.assert_allclose(d, model.effective_dampings(p, g), rtol=1e-9, atol=1e-9 * gamma)


@given(gains, phases)
def test_stationary_covariance_product_rule(g, phi):
    # Delta X1^2 Delta X2^2 = V_th^2 / (1 - g^2) for any modulation phase
    p = OscillatorParams.from_frequency(10e3, 100.0, 1e-4)
    e = EnvironmentParams(300.0)
    a = model.quadrature_drift_matrix(p, FeedbackConfig(FeedbackMode.PARAMETRIC_VISCOUS, g, phi))
    d = model.quadrature_diffusion(p, e)
    cov = linalg.solve_continuous_lyapunov(a, -d * np.eye(2))
    eig = np.linalg.eigvalsh(cov)
    v = model.thermal_variance(p, e)
    np.testing.assert_allclose(np.sort(eig), [v / (1 + g), v / (1 - g)], rtol=1e-7)


def test_viscous_phase_zero_squeezes_x1(paper, env):
    a = model.quadrature_drift_matrix(paper, FeedbackConfig(FeedbackMode.PARAMETRIC_VISCOUS, 0.8))
    cov = linalg.solve_continuous_lyapunov(a, -model.quadrature_diffusion(paper, env) * np.eye(2))
    v1, v2 = model.parametric_variances(paper, env, 0.8)
    np.testing.assert_allclose(np.diag(cov), [v1, v2], rtol=1e-9)
    assert abs(cov[0, 1]) < 1e-9 * v1


@given(gains)
def test_spring_at_pi_is_rotated_viscous(g):
    p = OscillatorParams.from_frequency(10e3, 100.0, 1e-4)
    visc = model.feedback_force_matrix(p, FeedbackConfig(FeedbackMode.PARAMETRIC_VISCOUS, g))
    spring = model.feedback_force_matrix(p, FeedbackConfig(FeedbackMode.PARAMETRIC_SPRING, g,
                                                           math.pi))
    c = s = math.sqrt(0.5)
    rot = np.array([[c, -s], [s, c]])
    np.testing.assert_allclose(rot.T @ spring @ rot, visc, atol=1e-12 * (abs(visc).max() + 1))


def test_off_mode_has_no_force(paper):
    assert not model.feedback_force_matrix(paper, FeedbackConfig()).any()


def test_diffusion_sets_thermal_variance(paper, env):
    # stationary OU variance D / Gamma equals kT/(M w0^2)
    assert model.quadrature_diffusion(paper, env) / paper.damping_rate == pytest.approx(
        model.thermal_variance(paper, env), rel=1e-12)


def test_parameter_validation():
    with pytest.raises(ConfigurationError):
        OscillatorParams.from_frequency(-1.0, 10.0, 1.0)
    with pytest.raises(ConfigurationError):
        OscillatorParams.from_frequency(1.0, 0.5, 1.0)
    with pytest.raises(ConfigurationError):
        EnvironmentParams(-1.0)
