"""``slicecast`` command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 training divergence.
Failures print exactly one line to stderr::

    slicecast: error: code=2 kind=data message="..."
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .charts import scatter_svg, write_svg
from .config import load_experiment_config, load_generator_config, load_train_config
from .errors import DataError, TrainingDivergedError
from .experiment import run_experiment
from .features import (DEFAULT_HISTORY_WINDOW, SplitSpec, ViewKind, joint_features, mno_features,
                       read_matrix_csv, read_target_csv, target_series, vertical_features,
                       write_matrix_csv, write_target_csv)
from .forecasters import ENGINES, EngineConfig, Forecast, TrainedModel, fit_model
from .provisioning import (COMPARISON_COLUMNS, SCATTER_COLUMNS, EvalReport, compare_scenarios,
                           evaluate, write_rows_csv)
from .synth import generate_trace
from .trace import load_trace, summarize, write_trace

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3

log = logging.getLogger("slicecast")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _split(text: str) -> SplitSpec:
    try:
        return SplitSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


# --- subcommands -------------------------------------------------------------

def cmd_generate(args) -> int:
    cfg = load_generator_config(args.config, seed=args.seed)
    trace = generate_trace(cfg)
    write_trace(trace, args.out)
    log.info("wrote %d records to %s", len(trace), args.out)
    return EXIT_OK


def cmd_features(args) -> int:
    view = ViewKind.parse(args.view)
    if view is not ViewKind.MNO and not args.app:
        raise UsageError(f"--app is required for the {view.value} view")
    if args.target_out and not args.app:
        raise UsageError("--target-out needs --app")
    trace = load_trace(args.trace)
    history = args.history_window or None
    if view is ViewKind.MNO:
        features = mno_features(trace, args.demand_mode)
    else:
        features = vertical_features(trace, args.app, args.agg, args.demand_mode, history_window=history)
        if view is ViewKind.JOINT:
            features = joint_features(mno_features(trace, args.demand_mode), features)
    write_matrix_csv(features, args.out)
    log.info("wrote %d x %d feature matrix to %s", *features.shape, args.out)
    if args.target_out:
        write_target_csv(target_series(trace, args.app, args.demand_mode), args.target_out)
    return EXIT_OK


def cmd_train(args) -> int:
    target = read_target_csv(args.target)
    if args.engine == "lstm" and not args.features:
        raise UsageError("--features is required for the lstm engine")
    features = read_matrix_csv(args.features) if args.features else None
    cfg = EngineConfig(train=load_train_config(args.config, seed=args.seed))

    def progress(epoch, loss):
        log.info("epoch %d  loss %.6g", epoch, loss)

    on_epoch = progress if log.isEnabledFor(logging.DEBUG) else None
    model = fit_model(args.engine, features, target, args.split, cfg, args.view, on_epoch=on_epoch)
    model.save(args.model_out)
    log.info("wrote %s model to %s", args.engine, args.model_out)
    return EXIT_OK


def cmd_forecast(args) -> int:
    model = TrainedModel.load(args.model)
    if model.engine == "lstm" and not args.features:
        raise UsageError("--features is required to forecast with an lstm model")
    if model.engine == "naive" and not args.target:
        raise UsageError("--target is required to forecast with a naive model")
    features = read_matrix_csv(args.features) if args.features else None
    target = read_target_csv(args.target) if args.target else None
    fc = model.forecast(features, target)
    fc.write_csv(args.out)
    log.info("wrote %d-period forecast to %s", len(fc), args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    actual = read_target_csv(args.actual)
    fc = Forecast.read_csv(args.forecast)
    end = fc.start + len(fc)
    if end > len(actual):
        raise DataError(f"forecast covers periods {fc.start}..{end - 1} but the actual series ends at "
                        f"{len(actual) - 1}")
    app = args.app or actual.app_id
    entry = evaluate(app, args.view, actual.values[fc.start:end], fc.values, args.headroom)
    report = EvalReport.load(args.append_to) if args.append_to else EvalReport()
    report.add(entry)
    report.save(args.out)
    print(json.dumps(entry.as_dict(), sort_keys=True))
    return EXIT_OK


def cmd_compare(args) -> int:
    report = EvalReport.merge([EvalReport.load(p) for p in args.report])
    table, scatter = compare_scenarios(report)
    write_rows_csv(table, COMPARISON_COLUMNS, args.out)
    if args.scatter_out:
        write_rows_csv(scatter, SCATTER_COLUMNS, args.scatter_out)
    if args.svg:
        write_svg(scatter_svg("Unused capability vs scale-up events", scatter), args.svg)
    print(_format_table(table))
    return EXIT_OK


def _format_table(rows: list[dict]) -> str:
    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.4g}"
        return str(v)

    body = [[cell(r[c]) for c in COMPARISON_COLUMNS] for r in rows]
    widths = [max(len(c), *(len(b[i]) for b in body)) for i, c in enumerate(COMPARISON_COLUMNS)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(COMPARISON_COLUMNS, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines)


def cmd_experiment(args) -> int:
    cfg = load_experiment_config(args.config, seed=args.seed, out_dir=args.out_dir)
    report = run_experiment(cfg)
    print(_format_table(compare_scenarios(report)[0]) if report.entries else "no successful pairs")
    for f in report.failures:
        log.warning("failed: %s/%s at %s: %s", f["app"], f["view"], f["stage"], f["error"])
    return EXIT_DATA if report.failures else EXIT_OK


SUMMARY_LABELS = {
    "duration_periods": "Duration (hours)",
    "n_users": "Unique users",
    "n_cells": "Unique cells",
    "n_apps": "Unique apps",
    "n_tiles": "Unique tiles",
    "total_traffic_bytes": "Total traffic (bytes)",
}


def cmd_summarize(args) -> int:
    meta = summarize(load_trace(args.trace)).as_dict()
    if args.json:
        print(json.dumps(meta, sort_keys=True))
    else:
        width = max(map(len, SUMMARY_LABELS.values()))
        for key, label in SUMMARY_LABELS.items():
            print(f"{label.ljust(width)}  {meta[key]}")
    return EXIT_OK


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="slicecast", description="Forecast per-app slice traffic and score provisioning.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress (training loss per epoch)")
    p.add_argument("-q", "--quiet", action="store_true", help="only log errors")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("generate", help="generate a synthetic trace")
    s.add_argument("--config", help="TOML file with a [generator] table (default: built-in profiles)")
    s.add_argument("--seed", type=_seed, help="override the generator seed (also SLICECAST_SEED)")
    s.add_argument("--out", required=True, help="trace CSV to write")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("features", help="build one stakeholder's feature matrix (and the app target)")
    s.add_argument("--trace", required=True, help="trace CSV")
    s.add_argument("--view", required=True, choices=[v.value for v in ViewKind], help="stakeholder view")
    s.add_argument("--app", help="app id (required for vertical/joint and for --target-out)")
    s.add_argument("--agg", type=_positive_int, default=8, help="super-tile edge in tiles (default 8)")
    s.add_argument("--demand-mode", choices=["dl", "dl+ul"], default="dl+ul",
                   help="bytes counted as demand (default dl+ul)")
    s.add_argument("--history-window", type=int, default=DEFAULT_HISTORY_WINDOW,
                   help=f"hours summed in the history column; 0 = cumulative (default {DEFAULT_HISTORY_WINDOW})")
    s.add_argument("--out", required=True, help="feature CSV to write")
    s.add_argument("--target-out", help="also write the app's target series CSV")
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("train", help="fit a forecasting model")
    s.add_argument("--features", help="feature CSV (required for lstm)")
    s.add_argument("--target", required=True, help="target CSV (period,<app_id>)")
    s.add_argument("--split", type=_split, default=SplitSpec(), help="TRAIN:TEST periods (default 504:168)")
    s.add_argument("--engine", choices=ENGINES, default="lstm", help="model family (default lstm)")
    s.add_argument("--config", help="TOML file with a [train] table")
    s.add_argument("--seed", type=_seed, help="override the training seed (also SLICECAST_SEED)")
    s.add_argument("--view", default="", help="view label stored with the model")
    s.add_argument("--model-out", required=True, help="model JSON to write")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("forecast", help="forecast the test periods with a trained model")
    s.add_argument("--model", required=True, help="model JSON from 'train'")
    s.add_argument("--features", help="feature CSV (required for lstm models)")
    s.add_argument("--target", help="target CSV (required for naive models)")
    s.add_argument("--out", required=True, help="forecast CSV to write (period,yhat)")
    s.set_defaults(func=cmd_forecast)

    s = sub.add_parser("evaluate", help="score a forecast against the actual series")
    s.add_argument("--actual", required=True, help="target CSV with the actual series")
    s.add_argument("--forecast", required=True, help="forecast CSV (period,yhat)")
    s.add_argument("--app", help="app id for the entry (default: from the actual CSV header)")
    s.add_argument("--view", default="unspecified", help="view label for the entry")
    s.add_argument("--headroom", type=_positive_float, default=1.0,
                   help="capacity = headroom x forecast (default 1.0)")
    s.add_argument("--append-to", help="existing report to add the entry to")
    s.add_argument("--out", required=True, help="report JSON to write")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("compare", help="comparison table and (w, u) scatter from reports")
    s.add_argument("--report", required=True, action="append", help="report JSON (repeatable)")
    s.add_argument("--out", required=True, help="comparison CSV to write")
    s.add_argument("--scatter-out", help="scatter CSV to write (app,view,w,u)")
    s.add_argument("--svg", help="scatter SVG to write")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("experiment", help="run the full three-view study")
    s.add_argument("--config", help="experiment TOML (default: bundled default experiment)")
    s.add_argument("--seed", type=_seed, help="override the experiment seed (also SLICECAST_SEED)")
    s.add_argument("--out-dir", help="output directory (overrides out_dir in the config)")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("summarize", help="print trace summary statistics")
    s.add_argument("--trace", required=True, help="trace CSV")
    s.add_argument("--json", action="store_true", help="print JSON instead of a table")
    s.set_defaults(func=cmd_summarize)
    return p


def _setup_logging(level: int) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(level)
    log.propagate = False


def _fail(code: int, kind: str, message: str) -> int:
    message = " ".join(str(message).split())
    print(f"slicecast: error: code={code} kind={kind} message={json.dumps(message)}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.verbose and args.quiet:
        return _fail(EXIT_USAGE, "usage", "--verbose and --quiet are mutually exclusive")
    _setup_logging(logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.INFO)
    try:
        return args.func(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    except TrainingDivergedError as exc:
        return _fail(EXIT_DIVERGED, "diverged", exc)
    except (DataError, ValueError) as exc:
        return _fail(EXIT_DATA, "data", exc)
    except OSError as exc:
        return _fail(EXIT_DATA, "io", f"{exc.filename or ''}: {exc.strerror or exc}")


if __name__ == "__main__":
    sys.exit(main())
