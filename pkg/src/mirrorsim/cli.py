"""Command-line scenario runner.

``mirrorsim run --scenario free --seed 1 --out results/`` writes

* ``trace.csv``: ``time_s,x1_m,x2_m`` with 17 significant digits;
* ``histogram.txt``: ``#`` header lines, then 256 rows of 256 counts (row = X2 bin,
  column = X1 bin, both ascending);
* ``correlation.csv``: measured correlation functions against lag;
* ``report.txt``: parameters, then one ``metric = measured | theory | rel_error |
  tolerance | PASS/FAIL`` line per check;
* ``table.csv`` for scenarios producing a table (gain sweep, ensembles).

The exit status is 0 when every check passes, 1 when any fails and 2 for
configuration or input errors. ``mirrorsim validate --config file`` prints the
diagnostics and the resolved parameter set.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from .config import ParsedConfig, load_config, resolve_settings
from .errors import ConfigurationError, IntegratorDivergenceError
from .scenarios import SCENARIOS, ScenarioResult, describe, run_scenario

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
MAX_SEED = 2**64 - 1


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be in [0, 2^64)")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="mirrorsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one scenario and write its output files")
    run.add_argument("--scenario", required=True, choices=sorted(SCENARIOS))
    run.add_argument("--config", help="configuration file (defaults when omitted)")
    run.add_argument("--seed", type=_seed, default=0)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--duration", type=float, help="override sim.duration (s)")
    run.add_argument("--gain", type=float, help="override feedback.gain (sim.gains for the sweep)")
    val = sub.add_parser("validate", help="check a configuration file")
    val.add_argument("--config", required=True)
    val.add_argument("--scenario", default="free", choices=sorted(SCENARIOS),
                     help="scenario whose defaults the file is resolved against")
    return parser


def _format_value(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, tuple):
        return "[" + ", ".join(_format_value(x) for x in v) + "]"
    return str(v)


def write_trace(path, trace):
    data = np.column_stack((trace.times, trace.samples)) if len(trace) else np.zeros((0, 3))
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header="time_s,x1_m,x2_m", comments="")


def write_histogram(path, hist):
    header = "\n".join([
        f"full_scale_m = {hist.full_scale!r}",
        f"total_count = {hist.total_count}",
        f"overflow_count = {hist.overflow_count}",
        f"bins = {hist.bins}",
        "rows: X2 bins ascending; columns: X1 bins ascending",
    ])
    np.savetxt(path, hist.cells, fmt="%d", delimiter=",", header=header, comments="# ")


def write_correlations(path, correlations):
    names = sorted(correlations)
    if not names:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("lag_s\n")
        return
    n = min(len(correlations[k].values) for k in names)
    lags = correlations[names[0]].lags[:n]
    data = np.column_stack([lags] + [correlations[k].values[:n] for k in names])
    header = ",".join(["lag_s"] + [f"{k}_m2" for k in names])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=header, comments="")


def write_table(path, rows):
    keys = []
    for row in rows:
        keys += [k for k in row if k not in keys]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _format_value(v) for k, v in row.items()})


def format_report(result: ScenarioResult):
    lines = [
        f"# scenario = {result.name}",
        f"# seed = {result.seed}",
        f"# wall_time_s = {result.wall_time:.3f}",
        f"# result = {'PASS' if result.passed else 'FAIL'}",
        "# parameters",
    ]
    lines += [f"#   {k} = {_format_value(v)}" for k, v in result.parameters.items()]
    for fit_name, c in sorted(result.correlations.items()):
        if c.fitted_gamma is not None:
            lines.append(f"# fit {fit_name}: gamma = {c.fitted_gamma:.6g} 1/s, variance = "
                         f"{c.fitted_variance:.6g} m^2, log residual = {c.fit_residual:.3g}, "
                         f"{c.fit_points} lags")
    lines += [f"# note: {n}" for n in result.notes]
    lines.append("# metric = measured | theory | rel_error | tolerance | PASS/FAIL")
    lines += [c.line() for c in result.checks]
    return "\n".join(lines) + "\n"


def write_outputs(out_dir, result: ScenarioResult):
    os.makedirs(out_dir, exist_ok=True)
    if result.trace is not None:
        write_trace(os.path.join(out_dir, "trace.csv"), result.trace)
    if result.histogram is not None:
        write_histogram(os.path.join(out_dir, "histogram.txt"), result.histogram)
    write_correlations(os.path.join(out_dir, "correlation.csv"), result.correlations)
    if result.table:
        write_table(os.path.join(out_dir, "table.csv"), result.table)
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(format_report(result))


def _load(path):
    if path is None:
        return ParsedConfig()
    return load_config(path)


def cmd_run(args):
    try:
        cfg = _load(args.config)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    settings, diags = resolve_settings(args.scenario, cfg, args.duration, args.gain)
    if settings is None:
        for d in diags:
            print(f"error: {d}", file=sys.stderr)
        return EXIT_USAGE
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory {args.out}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = run_scenario(args.scenario, settings, args.seed)
    except IntegratorDivergenceError as exc:
        print(f"error: scenario {args.scenario}, seed {args.seed}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    write_outputs(args.out, result)
    for c in result.checks:
        print(c.line())
    for n in result.notes:
        print(f"note: {n}")
    failed = sum(not c.passed for c in result.checks)
    print(f"{args.scenario}: {len(result.checks) - failed}/{len(result.checks)} checks passed "
          f"in {result.wall_time:.1f} s; outputs in {args.out}")
    return EXIT_OK if failed == 0 else EXIT_FAIL


def cmd_validate(args):
    try:
        cfg = load_config(args.config)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    settings, diags = resolve_settings(args.scenario, cfg)
    for d in diags:
        print(f"error: {d}")
    if settings is None:
        print(f"{len(diags)} error(s)")
        return EXIT_USAGE
    print("0 errors; resolved parameters:")
    for k, v in describe(settings).items():
        print(f"  {k} = {_format_value(v)}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_validate(args)


if __name__ == "__main__":
    sys.exit(main())
