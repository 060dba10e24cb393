"""Flat ``namespace.key = value`` configuration files.

One assignment per line, ``#`` starts a comment, values are Python literals
(numbers, booleans, lists, quoted strings) or bare words such as
``cold_damp``. SI units throughout. Unknown keys, malformed lines and type
mismatches are reported with their line numbers; invariant violations are
reported with the offending keys.
"""

from __future__ import annotations

import ast
import difflib
from dataclasses import dataclass, field, replace

from . import presets
from .errors import ConfigurationError
from .model import FeedbackConfig, FeedbackMode, OscillatorParams, saturation_force
from .readout import OpticalParams
from .scenarios import SCENARIOS, default_settings, describe
from .simulator import Integrator

# key -> (type tag, description)
KEYS = {
    "oscillator.preset": ("str", "paper or scaled (10 kHz, Q = 100)"),
    "oscillator.frequency": ("float", "resonance frequency, Hz"),
    "oscillator.quality_factor": ("float", "mechanical quality factor"),
    "oscillator.effective_mass": ("float", "effective mass, kg"),
    "environment.temperature": ("float", "bath temperature, K"),
    "feedback.mode": ("str", "off, cold_damp, parametric_viscous or parametric_spring"),
    "feedback.gain": ("float", "dimensionless loop gain g"),
    "feedback.modulation_phase": ("float", "phase of the 2 Omega_M modulation, rad"),
    "feedback.saturation_force": ("float?", "force bound, N"),
    "feedback.light_power": ("float?", "beam power setting the force bound, W"),
    "sim.integrator": ("str", "rotating_frame or full_band"),
    "sim.time_step": ("float?", "integration step, s (default: largest allowed)"),
    "sim.duration": ("float", "recorded duration, s"),
    "sim.output_sample_period": ("float", "trace sample period, s"),
    "sim.warmup": ("float?", "discarded transient, s (default: 10 / slowest damping)"),
    "sim.full_scale": ("float", "histogram half range, m"),
    "sim.gains": ("floats", "gain list of the sweep"),
    "sim.ensemble_size": ("int", "trajectories above threshold"),
    "sim.near_threshold_gain": ("float", "gain of the jump-rate run"),
    "sim.near_threshold_duration": ("float", "duration of the jump-rate run, s"),
    "sim.noise_duration": ("float", "duration of the readout-noise run, s"),
    "sim.equivalence_check": ("bool", "also compare full-band and rotating-frame runs"),
    "sim.equivalence_duration": ("float?", "full-band duration of that comparison, s"),
    "optics.finesse": ("float", "cavity finesse"),
    "optics.wavelength": ("float", "laser wavelength, m"),
    "optics.cavity_length": ("float", "cavity length, m"),
    "optics.sensitivity_floor": ("float", "displacement noise floor, m/sqrt(Hz)"),
    "optics.calibration_delta_nu": ("float", "calibration frequency step, Hz"),
    "optics.calibration_voltage": ("float", "demodulated voltage of that step, V"),
    "filter.bandpass_width": ("float", "bandpass -3 dB full width, Hz"),
    "filter.lowpass_cutoff": ("float", "low-pass cut-off, Hz"),
    "filter.lowpass_order": ("int", "low-pass order (must be 2)"),
}


@dataclass
class ParsedConfig:
    values: dict = field(default_factory=dict)  # key -> value
    lines: dict = field(default_factory=dict)  # key -> line number
    diagnostics: list = field(default_factory=list)
    source: str = "<config>"


def _strip_comment(text):
    quote = None
    for i, ch in enumerate(text):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch == "#":
            return text[:i]
    return text


def _convert(raw):
    low = raw.lower()
    if low in ("none", "null"):
        return None
    if low in ("true", "false"):
        return low == "true"
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        return raw


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_type(tag, value):
    """Return the coerced value or raise TypeError with a short reason."""
    if tag.endswith("?"):
        if value is None:
            return None
        tag = tag[:-1]
    if tag == "float":
        if _is_number(value):
            return float(value)
        raise TypeError("expected a number")
    if tag == "int":
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        raise TypeError("expected an integer")
    if tag == "bool":
        if isinstance(value, bool):
            return value
        raise TypeError("expected true or false")
    if tag == "str":
        if isinstance(value, str):
            return value
        raise TypeError("expected a word")
    if tag == "floats":
        if _is_number(value):
            return (float(value),)
        if isinstance(value, (list, tuple)) and all(_is_number(v) for v in value):
            return tuple(float(v) for v in value)
        raise TypeError("expected a list of numbers")
    raise AssertionError(tag)


def parse_config_text(text, source="<config>"):
    cfg = ParsedConfig(source=source)
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = _strip_comment(line).strip()
        if not body:
            continue
        where = f"{source}:{lineno}"
        if "=" not in body:
            cfg.diagnostics.append(f"{where}: expected 'namespace.key = value', got {body!r}")
            continue
        key, _, raw = body.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in KEYS:
            hint = difflib.get_close_matches(key, KEYS, n=1)
            extra = f" (did you mean {hint[0]!r}?)" if hint else ""
            cfg.diagnostics.append(f"{where}: unknown key {key!r}{extra}")
            continue
        if not raw:
            cfg.diagnostics.append(f"{where}: {key} has no value")
            continue
        if key in cfg.values:
            cfg.diagnostics.append(
                f"{where}: {key} already set on line {cfg.lines[key]}"
            )
            continue
        try:
            value = _check_type(KEYS[key][0], _convert(raw))
        except TypeError as exc:
            cfg.diagnostics.append(f"{where}: {key}: {exc}, got {raw!r}")
            continue
        cfg.values[key] = value
        cfg.lines[key] = lineno
    return cfg


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc.strerror}") from exc
    return parse_config_text(text, str(path))


def _where(cfg: ParsedConfig, *keys):
    found = [f"{k} (line {cfg.lines[k]})" for k in keys if k in cfg.lines]
    return ", ".join(found) if found else "defaults"


def resolve_settings(scenario, cfg: ParsedConfig | None = None, duration=None, gain=None):
    """Settings for ``scenario`` after applying the file and command-line overrides.

    Returns (settings or None, diagnostics). Invariant violations name the
    keys involved.
    """
    if scenario not in SCENARIOS:
        return None, [f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}"]
    cfg = cfg or ParsedConfig()
    v = dict(cfg.values)
    diags = list(cfg.diagnostics)
    if duration is not None:
        v["sim.duration"] = float(duration)
    if gain is not None:
        if scenario == "gain_sweep":
            v["sim.gains"] = (float(gain),)
        else:
            v["feedback.gain"] = float(gain)
    base = default_settings(scenario)
    changes = {}

    # oscillator
    preset = v.get("oscillator.preset", "paper")
    if preset not in ("paper", "scaled"):
        diags.append(f"{_where(cfg, 'oscillator.preset')}: oscillator.preset must be paper or scaled")
        preset = "paper"
    p0 = presets.paper_oscillator() if preset == "paper" else presets.scaled_oscillator()
    try:
        osc = OscillatorParams.from_frequency(
            v.get("oscillator.frequency", p0.resonance_frequency),
            v.get("oscillator.quality_factor", p0.quality_factor),
            v.get("oscillator.effective_mass", p0.effective_mass),
        )
        changes["oscillator"] = osc
    except ConfigurationError as exc:
        diags.append(f"{_where(cfg, 'oscillator.frequency', 'oscillator.quality_factor', 'oscillator.effective_mass')}: {exc}")

    if "environment.temperature" in v:
        try:
            changes["environment"] = replace(base.environment, temperature=v["environment.temperature"])
        except ConfigurationError as exc:
            diags.append(f"{_where(cfg, 'environment.temperature')}: {exc}")

    # feedback
    fb_keys = [k for k in v if k.startswith("feedback.")]
    if fb_keys:
        fb = base.feedback
        force = fb.saturation_force
        if "feedback.saturation_force" in v and "feedback.light_power" in v:
            diags.append(f"{_where(cfg, 'feedback.saturation_force', 'feedback.light_power')}: "
                         "set either feedback.saturation_force or feedback.light_power, not both")
        if "feedback.saturation_force" in v:
            force = v["feedback.saturation_force"]
        elif "feedback.light_power" in v:
            lp = v["feedback.light_power"]
            force = None if lp is None else saturation_force(lp) if lp > 0 else -1.0
        try:
            mode = FeedbackMode(v.get("feedback.mode", fb.mode.value))
        except ValueError:
            diags.append(f"{_where(cfg, 'feedback.mode')}: feedback.mode must be one of "
                         f"{', '.join(m.value for m in FeedbackMode)}")
            mode = fb.mode
        try:
            changes["feedback"] = FeedbackConfig(
                mode, v.get("feedback.gain", fb.gain),
                v.get("feedback.modulation_phase", fb.modulation_phase), force,
            )
        except ConfigurationError as exc:
            diags.append(f"{_where(cfg, *fb_keys)}: {exc}")

    # optics and filters
    optic_fields = {k.split(".", 1)[1]: val for k, val in v.items() if k.startswith("optics.")}
    if optic_fields:
        try:
            changes["optics"] = replace(OpticalParams(), **optic_fields)
        except ConfigurationError as exc:
            diags.append(f"{_where(cfg, *['optics.' + k for k in optic_fields])}: {exc}")
    if "filter.lowpass_order" in v and v["filter.lowpass_order"] != 2:
        diags.append(f"{_where(cfg, 'filter.lowpass_order')}: filter.lowpass_order must be 2")
    for key, attr in (("filter.bandpass_width", "filter_bandpass_width"),
                      ("filter.lowpass_cutoff", "filter_lowpass_cutoff")):
        if key in v:
            if v[key] > 0:
                changes[attr] = v[key]
            else:
                diags.append(f"{_where(cfg, key)}: {key} must be positive")

    # simulation
    if "sim.integrator" in v:
        try:
            changes["integrator"] = Integrator(v["sim.integrator"])
        except ValueError:
            diags.append(f"{_where(cfg, 'sim.integrator')}: sim.integrator must be rotating_frame or full_band")
    for key in ("time_step", "duration", "output_sample_period", "warmup", "full_scale", "gains",
                "ensemble_size", "near_threshold_gain", "near_threshold_duration",
                "noise_duration", "equivalence_check", "equivalence_duration"):
        if f"sim.{key}" in v:
            changes[key] = v[f"sim.{key}"]
    for key in ("full_scale", "duration", "output_sample_period", "noise_duration",
                "near_threshold_duration"):
        if key in changes and not changes[key] > 0:
            diags.append(f"{_where(cfg, 'sim.' + key)}: sim.{key} must be positive")
    if "ensemble_size" in changes and changes["ensemble_size"] < 1:
        diags.append(f"{_where(cfg, 'sim.ensemble_size')}: sim.ensemble_size must be >= 1")
    if scenario == "gain_sweep" and "gains" in changes and not changes["gains"]:
        diags.append(f"{_where(cfg, 'sim.gains')}: gain_sweep requires a non-empty gain list")

    if diags:
        return None, diags
    settings = replace(base, **changes)
    try:
        settings.sim_config(0)
    except ConfigurationError as exc:
        diags.append(f"{_where(cfg, *[k for k in v if k.startswith('sim.')])}: {exc}")
        return None, diags
    return settings, diags


def validate_config(path):
    """(diagnostics, resolved parameters) for a configuration file."""
    cfg = load_config(path)
    settings, diags = resolve_settings("free", cfg)
    if settings is None:
        return diags, {}
    resolved = describe(settings)
    resolved.update({k: cfg.values[k] for k in cfg.values if k not in resolved})
    return diags, resolved


def format_config(values: dict):
    """Inverse of the parser for plain values: ``key = repr`` lines."""
    out = []
    for key, val in values.items():
        if isinstance(val, str):
            out.append(f"{key} = {val}")
        else:
            out.append(f"{key} = {val!r}")
    return "\n".join(out) + "\n"
