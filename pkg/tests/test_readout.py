import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mirrorsim import readout
from mirrorsim.errors import ConfigurationError
from mirrorsim.readout import OpticalParams

C = 299_792_458.0


def test_phase_gain():
    o = OpticalParams()
    assert o.radians_per_meter == pytest.approx(8 * 37000 / 810e-9, rel=1e-12)


def test_frequency_calibration():
    o = OpticalParams()
    expected = 1e-3 * 200.0 * 810e-9 / C
    assert readout.frequency_calibration(200.0, o) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(5.40374e-16, rel=1e-5)
    # published value 5.4e-16 m
    assert readout.frequency_calibration(200.0, o) == pytest.approx(5.4e-16, rel=1e-3)


def test_volt_scale_from_calibration_pair():
    o = OpticalParams()
    assert readout.meters_to_volts(readout.frequency_calibration(200.0, o), o) == pytest.approx(
        27e-3, rel=1e-12)
    # full scale of the phase-space plots is 100 mV
    assert readout.meters_to_volts(2e-15, o) == pytest.approx(0.1, rel=1e-3)


@given(st.floats(-1e3, 1e3, allow_nan=False))
def test_volt_round_trip(v):
    o = OpticalParams()
    back = readout.meters_to_volts(readout.volts_to_meters(v, o), o)
    assert back == pytest.approx(v, rel=1e-15, abs=1e-300)


@given(st.lists(st.floats(-1e-12, 1e-12), min_size=1, max_size=20))
def test_phase_round_trip_without_noise(xs):
    o = OpticalParams()
    ph = readout.displacement_to_phase(np.array(xs), 1e-8, o, with_noise=False)
    np.testing.assert_allclose(readout.phase_to_displacement(ph.samples, o), xs, rtol=1e-14,
                               atol=1e-30)
    assert not ph.includes_noise


def test_phase_noise_level(rng):
    o = OpticalParams()
    dt = 1e-8
    ph = readout.displacement_to_phase(np.zeros(200_000), dt, o, rng=rng)
    expected = o.radians_per_meter * o.sensitivity_floor / math.sqrt(dt)
    assert ph.samples.std() == pytest.approx(expected, rel=0.01)


def test_displacement_to_phase_checks():
    o = OpticalParams()
    with pytest.raises(ValueError):
        readout.displacement_to_phase(np.zeros(3), 1e-8, o)
    with pytest.raises(ConfigurationError):
        readout.displacement_to_phase(np.zeros(3), 0.0, o, with_noise=False)
    with pytest.raises(ConfigurationError, match="10x"):
        readout.displacement_to_phase(np.zeros(3), 1e-6, o, with_noise=False,
                                      carrier_angular_frequency=2 * math.pi * 1859e3)


@pytest.mark.parametrize("field,value", [("finesse", 0.5), ("wavelength", 0.0),
                                         ("calibration_voltage", -1.0)])
def test_optics_validation(field, value):
    with pytest.raises(ConfigurationError):
        OpticalParams(**{field: value})
