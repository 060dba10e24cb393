import numpy as np
import pytest

from mirrorsim import cli

FAST = "sim.equivalence_check = false\nsim.noise_duration = 0.2\n"


@pytest.fixture
def fast_cfg(tmp_path):
    path = tmp_path / "fast.cfg"
    path.write_text(FAST)
    return str(path)


def _run(out, *args):
    return cli.main(["run", "--out", str(out), *args])


def _report_lines(out):
    return [ln for ln in (out / "report.txt").read_text().splitlines() if not ln.startswith("#")]


def test_free_run_writes_all_files(tmp_path, fast_cfg, capsys):
    out = tmp_path / "free"
    code = _run(out, "--scenario", "free", "--config", fast_cfg, "--seed", "1", "--duration", "60")
    assert code == 0, capsys.readouterr().out
    lines = (out / "trace.csv").read_text().splitlines()
    assert lines[0] == "time_s,x1_m,x2_m" and len(lines) == 600_001
    t, x1, x2 = (float(v) for v in lines[1].split(","))
    assert t == 0.0
    # at least 15 significant digits
    assert len(lines[2].split(",")[1].lstrip("-").replace(".", "").split("e")[0]) >= 15

    hist = (out / "histogram.txt").read_text().splitlines()
    header = [ln for ln in hist if ln.startswith("#")]
    assert any("full_scale_m = 2e-15" in ln for ln in header)
    assert any("total_count = 600000" in ln for ln in header)
    cells = np.loadtxt(out / "histogram.txt", delimiter=",", dtype=int)
    assert cells.shape == (256, 256)

    corr = np.loadtxt(out / "correlation.csv", delimiter=",", skiprows=1)
    assert corr.shape[1] == 4 and corr[0, 0] == 0.0

    report = _report_lines(out)
    assert all(ln.count("|") == 4 and ln.rstrip().endswith(("PASS", "FAIL")) for ln in report)
    names = [ln.split(" = ")[0] for ln in report]
    for key in ("dispersion_x1_m", "dispersion_x2_m", "fitted_gamma_x1_hz",
                "cross_correlation_max_ratio", "calibration_displacement_m",
                "histogram_cell_width_m", "noise_floor_vs_bandwidth_prediction_m"):
        assert key in names
    text = (out / "report.txt").read_text()
    assert "# seed = 1" in text and "wall_time_s" in text and "oscillator.frequency" in text


def test_trace_and_histogram_are_byte_identical(tmp_path, fast_cfg):
    for name in ("a", "b"):
        _run(tmp_path / name, "--scenario", "cold_damp", "--config", fast_cfg, "--seed", "7",
             "--duration", "2")
    for f in ("trace.csv", "histogram.txt", "correlation.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    _run(tmp_path / "c", "--scenario", "cold_damp", "--config", fast_cfg, "--seed", "8",
         "--duration", "2")
    assert (tmp_path / "a" / "trace.csv").read_bytes() != (tmp_path / "c" / "trace.csv").read_bytes()


def test_single_sample_run_flags_insufficient_statistics(tmp_path, fast_cfg):
    out = tmp_path / "one"
    code = _run(out, "--scenario", "free", "--config", fast_cfg, "--seed", "1",
                "--duration", "1e-4")
    assert code == 1
    lines = (out / "trace.csv").read_text().splitlines()
    assert len(lines) == 2
    text = (out / "report.txt").read_text()
    assert "insufficient statistics" in text
    assert "samples = 1 | 100 |" in text and "FAIL" in text


def test_gain_sweep_table(tmp_path):
    out = tmp_path / "sweep"
    _run(out, "--scenario", "gain_sweep", "--seed", "2", "--duration", "20")
    rows = (out / "table.csv").read_text().splitlines()
    assert rows[0].startswith("gain,gamma1_over_gamma,gamma2_over_gamma,var1_over_thermal")
    assert len(rows) == 7
    assert [float(r.split(",")[0]) for r in rows[1:]] == [0, 0.2, 0.4, 0.6, 0.8, 0.9]


def test_exit_status_on_failed_check(tmp_path, fast_cfg):
    # far too short for the decay fit to meet its tolerance
    assert _run(tmp_path / "x", "--scenario", "cold_damp", "--config", fast_cfg,
                "--duration", "0.05") == 1


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("sim.integrator = full_band\nsim.time_step = 1e-6\n")
    assert _run(tmp_path / "o", "--scenario", "free", "--config", str(bad)) == 2
    assert "stability bound" in capsys.readouterr().err
    assert _run(tmp_path / "o", "--scenario", "free", "--config", str(tmp_path / "none")) == 2


def test_validate(tmp_path, capsys):
    good = tmp_path / "good.cfg"
    good.write_text("# nothing\n")
    assert cli.main(["validate", "--config", str(good)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("0 errors") and "filter.lowpass_cutoff = 460" in out
    bad = tmp_path / "bad.cfg"
    bad.write_text("feedback.mode = parametric_viscous\nfeedback.gain = 1.2\n")
    assert cli.main(["validate", "--config", str(bad)]) == 2
    out = capsys.readouterr().out
    assert out.count("error:") == 1 and "FeedbackConfig" in out


def test_seed_argument_range(tmp_path):
    with pytest.raises(SystemExit):
        cli.main(["run", "--scenario", "free", "--out", str(tmp_path), "--seed", "-1"])
    with pytest.raises(SystemExit):
        cli.main(["run", "--scenario", "nope", "--out", str(tmp_path)])
