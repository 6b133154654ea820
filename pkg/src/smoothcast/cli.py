"""Command-line interface: ``fit``, ``predict`` and ``backtest``.

Input files are CSV with a header row, a ``ds`` column (ISO date or
integer), a ``y`` column and optionally further numeric columns used as
regressors. ``--config FILE`` reads ``key=value`` lines named after the long
flags; flags given on the command line take precedence.

Exit codes: 0 success, 1 input or validation error, 2 inference failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import artifact
from .backtest import SplitScheme, default_min_train, naive_forecaster, run_backtest
from .estimator import ADDITIVE, MULTIPLICATIVE, ModelConfig
from .exceptions import (
    IndexedValidationError,
    InferenceError,
    RegressorMissing,
    SmoothcastError,
    ValidationError,
)
from .forecast import STOCHASTIC
from .series import validate_series

logger = logging.getLogger("smoothcast")

SERIES_ID_COLUMN = "unique_id"
RESERVED = ("ds", "y", SERIES_ID_COLUMN)


class UsageError(ValidationError):
    """Malformed command line or configuration file."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage, which would read as an
    # inference failure; report it as an input error instead.
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------- io


def _parse_ds(text, row):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return dt.date.fromisoformat(text).toordinal()
    except ValueError:
        pass
    try:
        return int(dt.datetime.fromisoformat(text).timestamp())
    except ValueError:
        raise ValidationError(f"row {row}: cannot parse timestamp {text!r}") from None


def _parse_float(text, row, column):
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"row {row}: column {column!r} has non-numeric value {text!r}") from None


def _read_rows(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValidationError(f"{path}: file is empty")
        header = [name.strip() for name in reader.fieldnames]
        reader.fieldnames = header
        return header, list(reader)


def _series_from_rows(rows, header, period, source):
    if "ds" not in header or "y" not in header:
        raise ValidationError(f"{source}: header must contain 'ds' and 'y' columns")
    names = [c for c in header if c not in RESERVED]
    ts, ys, xs = [], [], []
    for i, row in enumerate(rows, start=1):
        ts.append(_parse_ds(row["ds"], i))
        ys.append(_parse_float(row["y"], i, "y"))
        xs.append([_parse_float(row[c], i, c) for c in names])
    matrix = np.array(xs, dtype=np.float64).reshape(len(rows), len(names))
    try:
        return validate_series(ts, ys, matrix, period, regressor_names=names)
    except IndexedValidationError as exc:
        raise type(exc)(f"{source}: row {exc.index + 1}: {exc}", index=exc.index) from exc


def read_series(path, period):
    """Read one series from a CSV file."""
    header, rows = _read_rows(path)
    return _series_from_rows(rows, header, period, path)


def read_series_set(path, period):
    """Read every series under ``path``.

    A directory contributes one series per ``*.csv`` file, named by file
    stem. A file with a ``unique_id`` column holds several series in long
    format; otherwise it is a single series. Returns ``(series, failures)``
    where failures maps an identifier to its error message.
    """
    path = Path(path)
    files = sorted(path.glob("*.csv")) if path.is_dir() else [path]
    series, failures = {}, {}
    for file in files:
        try:
            header, rows = _read_rows(file)
            if SERIES_ID_COLUMN in header:
                groups = {}
                for row in rows:
                    groups.setdefault(row[SERIES_ID_COLUMN], []).append(row)
                for key, group in groups.items():
                    try:
                        series[key] = _series_from_rows(group, header, period, f"{file}[{key}]")
                    except (SmoothcastError, ValueError) as exc:
                        failures[key] = f"{type(exc).__name__}: {exc}"
            else:
                series[file.stem] = _series_from_rows(rows, header, period, file)
        except (SmoothcastError, ValueError, OSError, UnicodeDecodeError, csv.Error) as exc:
            failures[file.stem] = f"{type(exc).__name__}: {exc}"
    return series, failures


def read_future_regressors(path, names, h):
    header, rows = _read_rows(path)
    missing = [n for n in names if n not in header]
    if missing:
        raise RegressorMissing(f"{path}: missing regressor columns {missing}")
    if len(rows) < h:
        raise RegressorMissing(f"{path}: {len(rows)} rows of future regressors, need {h}")
    return np.array(
        [[_parse_float(row[n], i, n) for n in names] for i, row in enumerate(rows[:h], start=1)],
        dtype=np.float64,
    ).reshape(h, len(names))


def _fmt(x):
    return repr(float(x))


def _write_text(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


# --------------------------------------------------------------------- commands


def _model_config(args):
    return ModelConfig(
        model=args.model, mode=args.mode, global_trend=args.global_trend, method=args.method,
        restarts=args.restarts, chains=args.chains, warmup=args.warmup, draws=args.draws,
        n_paths=args.paths,
    )


def cmd_fit(args):
    series = read_series(args.input, args.period)
    try:
        fitted = _model_config(args).fit(series, seed=args.seed, n_jobs=args.threads)
    except IndexedValidationError as exc:
        if exc.index is None:
            raise
        raise type(exc)(f"{args.input}: row {exc.index + 1}: {exc}", index=exc.index) from exc
    artifact.save(fitted, args.output)
    print(fitted.summary())
    print(f"artifact written to {args.output}")
    return 0


def _parse_quantiles(text):
    try:
        levels = [float(q) for q in text.split(",") if q.strip()]
    except ValueError:
        raise UsageError(f"cannot parse quantiles {text!r}") from None
    if any(not 0.0 <= q <= 1.0 for q in levels):
        raise UsageError(f"quantiles must lie in [0, 1], got {text!r}")
    return sorted(levels)


def cmd_predict(args):
    if args.h < 1:
        raise UsageError(f"horizon must be >= 1, got {args.h}")
    fitted = artifact.load(args.model)
    levels = _parse_quantiles(args.quantiles)
    future_x = None
    names = getattr(fitted.model, "regressor_names", ())
    if names:
        if args.future_regressors is None:
            raise RegressorMissing(
                f"model uses regressors {list(names)}; pass --future-regressors FILE"
            )
        future_x = read_future_regressors(args.future_regressors, names, args.h)
    dist = fitted.predict(args.h, n_paths=args.paths, seed=args.seed,
                          future_regressors=future_x, mode=STOCHASTIC, n_jobs=args.threads)
    median = dist.median
    bands = dist.quantiles(levels) if levels else np.zeros((args.h, 0))

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["step", "forecast"] + [f"q{q:g}" for q in levels])
    for k in range(args.h):
        writer.writerow([k + 1, _fmt(median[k])] + [_fmt(v) for v in bands[k]])
    _write_text(args.output, out.getvalue())
    return 0


def _report_table(report):
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["series", "split", "train_end", "smape"])
    for r in report.series:
        if not r.ok:
            writer.writerow([r.series_id, "", "", f"failed: {r.error}"])
            continue
        for k, s in enumerate(r.splits):
            writer.writerow([r.series_id, k, s.split.train_end, _fmt(s.smape)])
        writer.writerow([r.series_id, "mean", "", _fmt(r.mean)])
    for key, message in sorted(report.failures.items()):
        writer.writerow([key, "", "", f"failed: {message}"])
    return out.getvalue()


def cmd_backtest(args):
    series_set, failures = read_series_set(args.input, args.period)
    min_train = args.min_train or default_min_train(args.period)
    scheme = SplitScheme(args.h, args.splits, args.step, min_train)
    forecaster = naive_forecaster if args.model == "naive" else _model_config(args)
    report = run_backtest(series_set, forecaster, scheme, seed=args.seed, n_jobs=args.threads)
    report.failures.update(failures)

    _write_text(args.output, _report_table(report))
    report_path = args.report
    if report_path is None and args.output not in (None, "-"):
        report_path = str(Path(args.output).with_suffix(".json"))
    if report_path is not None:
        with open(report_path, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    n_ok = len(report.succeeded)
    n_failed = len(report.series) - n_ok + len(report.failures)
    print(f"SMAPE {report.mean:.4f} ({report.std:.4f}) over {n_ok} series, {n_failed} failed")
    for r in report.series:
        if not r.ok:
            print(f"  failed {r.series_id}: {r.error}", file=sys.stderr)
    for key, message in sorted(report.failures.items()):
        print(f"  failed {key}: {message}", file=sys.stderr)
    return 0 if n_ok > 0 else 1


# ----------------------------------------------------------------------- parser


def _add_model_flags(p, models=("lgt", "dlt")):
    p.add_argument("--model", choices=models, default="lgt")
    p.add_argument("--mode", choices=(ADDITIVE, MULTIPLICATIVE), default=ADDITIVE)
    p.add_argument("--period", type=int, default=1)
    p.add_argument("--global-trend", dest="global_trend",
                   choices=("flat", "linear", "loglinear", "logistic"), default="linear")
    p.add_argument("--method", choices=("map", "mcmc"), default="map")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--warmup", type=int, default=1000)
    p.add_argument("--draws", type=int, default=1000)


def _add_common_flags(p):
    p.add_argument("--config", help="key=value file; command-line flags override it")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--paths", type=int, default=1000, help="simulated forecast paths")


def build_parser():
    parser = _Parser(prog="smoothcast", description="Bayesian exponential smoothing forecasts")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fit = sub.add_parser("fit", help="fit a model and write an artifact")
    _add_model_flags(fit)
    _add_common_flags(fit)
    fit.add_argument("--input", required=True)
    fit.add_argument("--output", required=True)
    fit.set_defaults(func=cmd_fit)

    predict = sub.add_parser("predict", help="forecast from a saved artifact")
    _add_common_flags(predict)
    predict.add_argument("--model", required=True, help="artifact file written by fit")
    predict.add_argument("--h", "--horizon", dest="h", type=int, required=True)
    predict.add_argument("--quantiles", default="0.05,0.5,0.95")
    predict.add_argument("--future-regressors", dest="future_regressors")
    predict.add_argument("--output", default="-")
    predict.set_defaults(func=cmd_predict)

    backtest = sub.add_parser("backtest", help="expanding-window SMAPE backtest")
    _add_model_flags(backtest, models=("lgt", "dlt", "naive"))
    _add_common_flags(backtest)
    backtest.add_argument("--input", required=True, help="series file or directory of files")
    backtest.add_argument("--h", "--horizon", dest="h", type=int, required=True)
    backtest.add_argument("--splits", type=int, default=1)
    backtest.add_argument("--step", type=int, default=1)
    backtest.add_argument("--min-train", dest="min_train", type=int, default=None)
    backtest.add_argument("--output", default="-", help="per-split table (CSV)")
    backtest.add_argument("--report", help="JSON report path (default: output with .json)")
    backtest.set_defaults(func=cmd_backtest)
    return parser


def read_config(path):
    """Turn a ``key=value`` file into command-line tokens."""
    tokens = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key = key.strip().replace("_", "-")
            tokens += [f"--{key}", value.strip()]
    return tokens


def _expand_config(argv):
    argv = list(argv)
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif token.startswith("--config="):
            path = token.split("=", 1)[1]
        else:
            continue
        commands = [j for j, t in enumerate(argv) if t in ("fit", "predict", "backtest")]
        at = commands[0] + 1 if commands else 0
        return argv[:at] + read_config(path) + argv[at:]
    return argv


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = build_parser().parse_args(_expand_config(argv))
        logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except InferenceError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (SmoothcastError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
