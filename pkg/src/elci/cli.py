"""Command-line interface: ``elci ci``, ``elci simulate`` and ``elci diagnose``.

Exit status is 0 on success, 2 for invalid input or configuration and 3 for
numerical failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .el import confidence_interval
from .errors import DataError, ElciError, NumericalError
from .functionals import parse_functional, point_estimate
from .influence import w_hat
from .sample import CsvConfig, ingest_csv
from .scaled import score_vector, scaled_interval
from .simulation import run_coverage_study, scenario_from_dict
from .tables import coverage_tsv, format_number, run_table

__all__ = ["main"]

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

METHOD_CHOICES = {"el": ("el",), "scaled": ("scaled",), "both": ("el", "scaled")}
_INTERVALS = {"el": confidence_interval, "scaled": scaled_interval}


class _InvalidConfig(Exception):
    pass


def _alpha(text):
    try:
        a = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"alpha must be a number, got {text!r}") from None
    if not 0.0 < a <= 0.5:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 0.5], got {a}")
    return a


def _reps(text):
    try:
        r = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"reps must be an integer, got {text!r}") from None
    if r < 100:
        raise argparse.ArgumentTypeError(f"reps must be >= 100, got {r}")
    return r


def _seed(text):
    try:
        s = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if s < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return s


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="elci", description="Empirical likelihood intervals for censored data.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug messages")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_args(p):
        p.add_argument("--file", required=True, type=Path, help="CSV file with a header row")
        p.add_argument("--functional", default="mean", help='e.g. "mean", "mrl:t0=0.9", "quantile:p=0.5"')
        p.add_argument("--alpha", type=_alpha, default=0.05)
        p.add_argument("--time-column", default="time")
        p.add_argument("--event-column", default="event")
        p.add_argument("--delimiter", default=",")

    ci = sub.add_parser("ci", help="confidence intervals for a data file")
    data_args(ci)
    ci.add_argument("--method", choices=sorted(METHOD_CHOICES), default="el")
    ci.add_argument("--format", choices=("tsv", "json"), default="tsv")
    ci.add_argument("--diagnostics", action="store_true", help="include solver diagnostics (json)")

    diag = sub.add_parser("diagnose", help="influence vectors, scores and solver diagnostics as JSON")
    data_args(diag)

    sim = sub.add_parser("simulate", help="Monte Carlo coverage study")
    which = sim.add_mutually_exclusive_group(required=True)
    which.add_argument("--table", type=int, choices=(1, 2, 3, 4, 5))
    which.add_argument("--scenario", help="JSON scenario (inline or a file path)")
    sim.add_argument("--reps", type=_reps, default=2000)
    sim.add_argument("--seed", type=_seed, default=0)
    sim.add_argument("--out", type=Path, help="output TSV (default: stdout)")
    sim.add_argument("--workers", type=int, default=None, help="worker processes (capped by ELCI_THREADS)")
    return parser


def _clean(obj):
    """JSON-safe copy: infinities become the strings ``inf``/``-inf``, NaN becomes null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def _load(args):
    config = CsvConfig(args.time_column, args.event_column, args.delimiter)
    try:
        return ingest_csv(args.file, config), parse_functional(args.functional)
    except OSError as exc:
        raise _InvalidConfig(f"cannot read {args.file}: {exc.strerror or exc}") from None


def _flags(res):
    flags = list(res.warnings)
    if res.experimental:
        flags.append("experimental")
    return ",".join(flags) if flags else "-"


def run_ci(args, out) -> int:
    sample, f = _load(args)
    results, status = [], EXIT_OK
    for m in METHOD_CHOICES[args.method]:
        try:
            results.append(_INTERVALS[m](sample, f, args.alpha))
        except NumericalError as exc:
            print(f"elci: {m}: {type(exc).__name__}: {exc}", file=sys.stderr)
            status = EXIT_NUMERICAL
    if args.format == "json":
        recs = []
        for r in results:
            d = r.as_dict()
            if not args.diagnostics:
                d.pop("diagnostics")
            recs.append(d)
        out.write(json.dumps(_clean(recs), indent=2, allow_nan=False) + "\n")
    else:
        out.write("method\tlower\tupper\ttheta_hat\talpha\tflags\n")
        for r in results:
            out.write("\t".join((r.method, format_number(r.lower, 10), format_number(r.upper, 10),
                                 format_number(r.theta_hat, 10), format_number(r.alpha, 4),
                                 _flags(r))) + "\n")
        if args.diagnostics:
            out.write(json.dumps(_clean({r.method: r.diagnostics for r in results}), allow_nan=False) + "\n")
    return status


def run_diagnose(args, out) -> int:
    sample, f = _load(args)
    report = {
        "n": sample.n,
        "censoring_fraction": sample.censoring_fraction,
        "has_ties": sample.has_ties,
        "functional": f.label,
        "experimental": f.experimental,
    }
    status = EXIT_OK
    try:
        theta_hat = point_estimate(sample, f)
        report["theta_hat"] = theta_hat
        w = w_hat(sample, f, theta_hat).w
        v = score_vector(sample, f, theta_hat).v
        report["w_hat"] = {"mean": float(w.mean()), "var": float(np.var(w, ddof=1)), "values": w}
        report["v_hat"] = {"mean": float(v.mean()), "var": float(np.var(v, ddof=1)), "values": v}
    except NumericalError as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
        status = EXIT_NUMERICAL
    for m, func in _INTERVALS.items():
        try:
            report[m] = func(sample, f, args.alpha).as_dict()
        except NumericalError as exc:
            report[m] = {"error": f"{type(exc).__name__}: {exc}"}
            status = EXIT_NUMERICAL
    out.write(json.dumps(_clean(report), indent=2, allow_nan=False) + "\n")
    return status


def _scenario_json(text):
    try:
        # long inline JSON overflows the path length limit, so test it first
        raw = text if text.lstrip().startswith("{") else Path(text).read_text()
        return json.loads(raw)
    except (OSError, json.JSONDecodeError) as exc:
        raise _InvalidConfig(f"cannot parse scenario JSON: {exc}") from None


def run_simulate(args, out) -> int:
    if args.table is not None:
        result = run_table(args.table, args.reps, args.seed, args.workers)
        text, summary = result.tsv(), result.summary()
    else:
        d = _scenario_json(args.scenario)
        if not isinstance(d, dict):
            raise _InvalidConfig("scenario JSON must be an object")
        specs = scenario_from_dict(d)
        alphas = d.get("alphas", [0.05])
        methods = d.get("methods", ["el", "scaled"])
        report = run_coverage_study(specs, alphas, methods, args.reps, args.seed, args.workers)
        text = coverage_tsv(report)
        summary = f"custom scenario: {len(report)} rows, reps={args.reps}, seed={args.seed}"
    if args.out is not None:
        args.out.write_text(text)
        out.write(summary + "\n")
    else:
        out.write(text)
        print(summary, file=sys.stderr)
    return EXIT_OK


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="elci: %(levelname)s: %(message)s")
    handler = {"ci": run_ci, "simulate": run_simulate, "diagnose": run_diagnose}[args.command]
    try:
        return handler(args, out)
    except (DataError, _InvalidConfig) as exc:
        print(f"elci: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"elci: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ElciError as exc:
        print(f"elci: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
