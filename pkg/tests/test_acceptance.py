"""Acceptance criteria 1-10, each printing one PASS/FAIL line with its checks.

All runs use seed 1 and the default scenario settings. Runtime limits are
checked with the wall time of the scenario run (the compiled kernels are
warmed up beforehand).
"""

import time

import pytest

from mirrorsim import scenarios as sc
from mirrorsim.scenarios import Check

SEED = 1
pytestmark = pytest.mark.slow


def _report(capsys, number, title, checks):
    ok = all(c.passed for c in checks)
    with capsys.disabled():
        print(f"\ncriterion {number} ({title}): {'PASS' if ok else 'FAIL'}")
        for c in checks:
            print(f"    {c.line()}")
    assert ok, [c.line() for c in checks if not c.passed]


def _pick(result, *names):
    return [result.check(n) for n in names]


def _runtime(result, limit):
    return Check("runtime_s", result.wall_time, limit, kind="max")


@pytest.fixture(scope="module")
def free():
    return sc.run_free(sc.default_settings("free"), SEED, include_extras=False)


@pytest.fixture(scope="module")
def param_above():
    return sc.run_param_above(sc.default_settings("param_above"), SEED)


def test_criterion_01_free_variance(free, capsys):
    checks = _pick(free, "dispersion_x1_m", "dispersion_x2_m", "dispersion_theory_vs_published_m",
                   "cross_correlation_max_ratio")
    _report(capsys, 1, "free Brownian variance", checks + [_runtime(free, 10.0)])


def test_criterion_02_correlation_decay(free, capsys):
    _report(capsys, 2, "correlation decay",
            _pick(free, "fitted_gamma_x1_hz", "fitted_gamma_x2_hz"))


def test_criterion_03_cold_damping(capsys):
    r = sc.run_cold_damp(sc.default_settings("cold_damp"), SEED, include_extras=False)
    checks = _pick(r, "variance_ratio_x1", "variance_ratio_x2", "fitted_damping_x1_over_gamma",
                   "fitted_damping_x2_over_gamma", "linewidth_theory_vs_published_hz",
                   "effective_temperature_k")
    _report(capsys, 3, "cold damping", checks + [_runtime(r, 10.0)])


def test_criterion_04_parametric_squeezing(capsys):
    r = sc.run_param_below(sc.default_settings("param_below"), SEED, include_extras=False)
    checks = _pick(r, "dispersion_ratio_x1", "dispersion_ratio_x2",
                   "fitted_damping_x1_over_gamma", "fitted_damping_x2_over_gamma")
    _report(capsys, 4, "parametric squeezing", checks + [_runtime(r, 30.0)])


def test_criterion_05_gain_sweep(capsys):
    r = sc.run_gain_sweep(sc.default_settings("gain_sweep"), SEED)
    assert len(r.table) == 6
    checks = [c for c in r.checks if not c.name.startswith("estimated_gain")]
    _report(capsys, 5, "gain sweep", checks + [_runtime(r, 300.0)])


def test_criterion_06_parametric_oscillation(param_above, capsys):
    checks = _pick(param_above, "saturation_amplitude_theory_m", "lobe_mean_abs_x2_m",
                   "lobes_visited_plus", "lobes_visited_minus", "histogram_x2_dip_ratio",
                   "jumps_at_configured_gain", "jumps_near_threshold")
    _report(capsys, 6, "parametric oscillation", checks + [_runtime(param_above, 300.0)])


def test_criterion_07_above_threshold_squeezing(param_above, capsys):
    _report(capsys, 7, "squeezing above threshold",
            _pick(param_above, "near_threshold_x1_variance_over_thermal"))


def test_criterion_08_noise_floor(capsys):
    t0 = time.perf_counter()
    checks, _ = sc.noise_floor_checks(sc.default_settings("noise_floor"), SEED)
    runtime = Check("runtime_s", time.perf_counter() - t0, 60.0, kind="max")
    _report(capsys, 8, "readout noise floor", checks + [runtime])


def test_criterion_09_integrator_equivalence(capsys):
    t0 = time.perf_counter()
    checks = []
    for mode in ("free", "cold_damp", "param_below"):
        checks += sc.equivalence_checks(mode, SEED)
    runtime = Check("runtime_s", time.perf_counter() - t0, 120.0, kind="max")
    _report(capsys, 9, "integrator equivalence", checks + [runtime])


def test_criterion_10_calibration_chain(capsys):
    _report(capsys, 10, "calibration chain", sc.calibration_checks(sc.default_settings("free")))
