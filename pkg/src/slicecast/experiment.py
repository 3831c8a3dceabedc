"""One-shot three-scenario study: generate, build views, train, forecast, score.

Output layout under ``out_dir``::

    trace.csv
    features/<app>_<view>.csv      targets/<app>.csv
    models/<app>_<view>.json       forecasts/<app>_<view>.csv   (period,yhat)
    series/<app>_<view>.csv        (period,actual,predicted)
    charts/<app>_<view>.svg        charts/scatter.svg
    report.json  comparison.csv  scatter.csv

``report.json`` carries no timestamps or paths, so identical configs give
byte-identical reports. A failing (app, view) pair is recorded under
``failures`` with the stage that failed; the other pairs still run.
"""

from __future__ import annotations

import csv
import logging
import os
from pathlib import Path

import numpy as np

from .charts import VIEW_COLORS, line_chart_svg, scatter_svg, write_svg
from .config import ExperimentConfig
from .errors import SlicecastError
from .features import (FeatureMatrix, ViewKind, joint_features, mno_features, target_series,
                       vertical_features, write_matrix_csv, write_target_csv)
from .forecasters import fit_model
from .provisioning import (COMPARISON_COLUMNS, SCATTER_COLUMNS, EvalReport, compare_scenarios,
                           evaluate, write_rows_csv)
from .synth import generate_trace
from .trace import Trace, write_trace

log = logging.getLogger(__name__)

N_DEFAULT_APPS = 3


def top_apps(trace: Trace, k: int = N_DEFAULT_APPS, demand_mode: str = "dl+ul") -> tuple[str, ...]:
    """The ``k`` apps with the largest total traffic (ties broken by id)."""
    apps, inverse = np.unique(trace.app_id, return_inverse=True)
    totals = np.zeros(len(apps), dtype=np.int64)
    np.add.at(totals, inverse, trace.demand(demand_mode))
    order = sorted(range(len(apps)), key=lambda i: (-totals[i], apps[i]))
    return tuple(str(apps[i]) for i in order[:k])


def write_series_csv(path: str | os.PathLike, start: int, actual, predicted) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["period", "actual", "predicted"])
        for j, (y, yhat) in enumerate(zip(actual, predicted)):
            w.writerow([start + j, repr(float(y)), repr(float(yhat))])


class _Stage:
    """Tags an exception with the pipeline stage it came from."""

    def __init__(self):
        self.name = "setup"

    def __call__(self, name: str) -> "_Stage":
        self.name = name
        return self


def run_experiment(cfg: ExperimentConfig) -> EvalReport:
    out = Path(cfg.out_dir)
    for sub in ("features", "targets", "models", "forecasts", "series", "charts"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    log.info("generating trace (%d users, %d weeks, seed %d)",
             cfg.generator.n_users, cfg.generator.weeks, cfg.generator.seed)
    trace = generate_trace(cfg.generator)
    write_trace(trace, out / "trace.csv")
    apps = cfg.apps_under_study or top_apps(trace, demand_mode=cfg.demand_mode)

    report = EvalReport(meta={**cfg.as_meta(), "apps_under_study": list(apps)})
    mno: FeatureMatrix | None = None
    duration = cfg.generator.duration
    grid = (cfg.generator.grid_width, cfg.generator.grid_height)

    for app in apps:
        try:
            target = target_series(trace, app, cfg.demand_mode, duration)
        except SlicecastError as exc:
            for view in cfg.views:
                report.failures.append({"app": app, "view": view.value, "stage": "target", "error": str(exc)})
            continue
        write_target_csv(target, out / "targets" / f"{app}.csv")
        for view in cfg.views:
            stage = _Stage()
            name = f"{app}_{view.value}"
            try:
                stage("features")
                if view is not ViewKind.VERTICAL and mno is None:
                    mno = mno_features(trace, cfg.demand_mode, duration)
                if view is ViewKind.MNO:
                    features = mno
                else:
                    features = vertical_features(trace, app, cfg.agg, cfg.demand_mode, grid, duration,
                                                 cfg.history_window)
                    if view is ViewKind.JOINT:
                        features = joint_features(mno, features)
                write_matrix_csv(features, out / "features" / f"{name}.csv")

                stage("train")
                log.info("training %s on %s/%s", cfg.engine, app, view.value)
                model = fit_model(cfg.engine, features, target, cfg.split, cfg.engine_config, view.value)
                model.save(out / "models" / f"{name}.json")

                stage("forecast")
                fc = model.forecast(features, target)
                fc.write_csv(out / "forecasts" / f"{name}.csv")

                stage("evaluate")
                actual = target.values[cfg.split.train_periods:]
                report.add(evaluate(app, view.value, actual, fc.values, cfg.headroom))
                write_series_csv(out / "series" / f"{name}.csv", fc.start, actual, fc.values)

                stage("chart")
                svg = line_chart_svg(f"{app}: actual vs predicted ({view.label} view)",
                                     fc.periods, actual, [(view.label, fc.values, VIEW_COLORS[view.value])])
                write_svg(svg, out / "charts" / f"{name}.svg")
            except (SlicecastError, ValueError, FloatingPointError) as exc:
                log.error("%s/%s failed at %s: %s", app, view.value, stage.name, exc)
                report.failures.append({"app": app, "view": view.value, "stage": stage.name,
                                        "error": f"{type(exc).__name__}: {exc}"})

    report.save(out / "report.json")
    if report.entries:
        table, scatter = compare_scenarios(report)
        write_rows_csv(table, COMPARISON_COLUMNS, out / "comparison.csv")
        write_rows_csv(scatter, SCATTER_COLUMNS, out / "scatter.csv")
        write_svg(scatter_svg("Unused capability vs scale-up events", scatter), out / "charts" / "scatter.svg")
    return report
