import pytest
from hypothesis import given
from hypothesis import strategies as st

from mirrorsim import config as cf
from mirrorsim.errors import ConfigurationError
from mirrorsim.model import FeedbackMode
from mirrorsim.simulator import Integrator


def _resolve(text, scenario="free", **kw):
    return cf.resolve_settings(scenario, cf.parse_config_text(text), **kw)


def test_default_config_has_no_diagnostics(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("# defaults only\n\n")
    diags, resolved = cf.validate_config(path)
    assert diags == []
    assert resolved["oscillator.frequency"] == 1859e3
    assert resolved["filter.lowpass_cutoff"] == 460.0


def test_parse_values_and_comments():
    c = cf.parse_config_text(
        "feedback.mode = cold_damp   # bare word\n"
        "feedback.gain = 3\n"
        "sim.gains = [0, 0.5]\n"
        "sim.equivalence_check = false\n"
        "feedback.saturation_force = none\n"
        "oscillator.preset = 'scaled'\n"
    )
    assert c.diagnostics == []
    assert c.values == {
        "feedback.mode": "cold_damp", "feedback.gain": 3.0, "sim.gains": (0.0, 0.5),
        "sim.equivalence_check": False, "feedback.saturation_force": None,
        "oscillator.preset": "scaled",
    }
    assert c.lines["sim.gains"] == 3


def test_unknown_key_reports_line_and_suggestion():
    c = cf.parse_config_text("\n\nfeedback.gian = 1\n")
    assert c.diagnostics == ["<config>:3: unknown key 'feedback.gian' (did you mean 'feedback.gain'?)"]


@pytest.mark.parametrize("text,needle", [
    ("feedback.gain 3", "expected 'namespace.key = value'"),
    ("feedback.gain = ", "has no value"),
    ("feedback.gain = fast", "expected a number"),
    ("sim.ensemble_size = 2.5", "expected an integer"),
    ("sim.equivalence_check = 1", "expected true or false"),
    ("sim.gains = [1, 'a']", "list of numbers"),
    ("feedback.gain = 1\nfeedback.gain = 2", "already set on line 1"),
])
def test_parse_errors(text, needle):
    c = cf.parse_config_text(text)
    assert len(c.diagnostics) == 1 and needle in c.diagnostics[0]


def test_parametric_above_threshold_without_saturation():
    settings, diags = _resolve("feedback.mode = parametric_viscous\nfeedback.gain = 1.2\n")
    assert settings is None and len(diags) == 1
    assert "FeedbackConfig" in diags[0] and "saturation_force" in diags[0]
    assert "feedback.gain (line 2)" in diags[0]


def test_light_power_sets_saturation():
    settings, diags = _resolve("feedback.mode = parametric_spring\nfeedback.gain = 1.2\n"
                               "feedback.light_power = 0.5\n")
    assert diags == []
    assert settings.feedback.saturation_force == pytest.approx(4.2441e-9, rel=1e-3)
    assert settings.feedback.mode is FeedbackMode.PARAMETRIC_SPRING


def test_full_band_time_step_bound():
    settings, diags = _resolve("sim.integrator = full_band\nsim.time_step = 1e-6\n")
    assert settings is None and len(diags) == 1
    assert "stability bound" in diags[0] and "sim.time_step (line 2)" in diags[0]


def test_scaled_preset_and_overrides():
    settings, diags = _resolve("oscillator.preset = scaled\nsim.integrator = full_band\n"
                               "sim.output_sample_period = 6.25e-5\nfilter.lowpass_cutoff = 4000\n"
                               "optics.finesse = 1000\n")
    assert diags == []
    assert settings.oscillator.resonance_frequency == pytest.approx(10e3)
    assert settings.oscillator.quality_factor == 100.0
    assert settings.integrator is Integrator.FULL_BAND
    assert settings.filters().lowpass_cutoff == 4000.0
    assert settings.optics.finesse == 1000.0


def test_command_line_overrides():
    s, _ = cf.resolve_settings("cold_damp", None, duration=2.0, gain=1.5)
    assert s.duration == 2.0 and s.feedback.gain == 1.5
    s, _ = cf.resolve_settings("gain_sweep", None, gain=0.4)
    assert s.gains == (0.4,)


@pytest.mark.parametrize("text,needle", [
    ("oscillator.preset = tiny", "paper or scaled"),
    ("feedback.mode = squeeze", "feedback.mode must be one of"),
    ("sim.integrator = leapfrog", "sim.integrator must be"),
    ("filter.lowpass_order = 4", "must be 2"),
    ("sim.full_scale = -1", "must be positive"),
    ("oscillator.quality_factor = 0.5", "quality factor"),
    ("feedback.saturation_force = 1e-9\nfeedback.light_power = 0.5", "not both"),
])
def test_invariant_violations(text, needle):
    settings, diags = _resolve(text)
    assert settings is None
    assert any(needle in d for d in diags)


def test_gain_sweep_needs_gains():
    settings, diags = _resolve("sim.gains = []", "gain_sweep")
    assert settings is None and "non-empty gain list" in diags[0]


def test_unknown_scenario():
    assert cf.resolve_settings("nope")[0] is None


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigurationError, match="cannot read"):
        cf.load_config(tmp_path / "missing.cfg")


values = st.fixed_dictionaries({}, optional={
    "feedback.gain": st.floats(0, 0.9),
    "sim.duration": st.floats(0.01, 100),
    "sim.ensemble_size": st.integers(1, 50),
    "sim.gains": st.lists(st.floats(0, 0.9), min_size=1, max_size=5).map(tuple),
    "sim.equivalence_check": st.booleans(),
    "feedback.mode": st.sampled_from([m.value for m in FeedbackMode]),
})


@given(values)
def test_format_parse_round_trip(vals):
    c = cf.parse_config_text(cf.format_config(vals))
    assert c.diagnostics == []
    assert c.values == vals
