"""Forecast-driven slice provisioning metrics and scenario reports.

A slice is dimensioned to the forecast (optionally times a headroom factor).
Per test window of n periods:

* ``rmse``  - root mean squared forecast error;
* ``w``     - unused capability, sum of max(0, provisioned - actual);
* ``u``     - scale-up events, periods where actual > provisioned (strict).
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DataError
from .features import ViewKind


def _pair(y, yhat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float).reshape(-1)
    yhat = np.asarray(yhat, dtype=float).reshape(-1)
    if y.shape != yhat.shape:
        raise DataError(f"length mismatch: {len(y)} actual vs {len(yhat)} predicted")
    if len(y) == 0:
        raise DataError("metrics need at least one period")
    return y, yhat


def rmse(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return math.sqrt(float(np.mean((y - yhat) ** 2)))


def unused_capability(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.sum(np.maximum(0.0, yhat - y)))


def scale_up_count(y, yhat) -> int:
    y, yhat = _pair(y, yhat)
    return int(np.count_nonzero(y > yhat))


@dataclass(frozen=True)
class EvalEntry:
    app: str
    view: str
    n: int
    rmse: float
    w: float
    w_frac: float | None  # None when the actual total is zero
    u: int
    u_frac: float

    def as_dict(self) -> dict:
        return asdict(self)


def evaluate(app: str, view: str, y, yhat, headroom: float = 1.0) -> EvalEntry:
    """All provisioning metrics for one (app, view); capacity = headroom * forecast."""
    if headroom <= 0:
        raise ValueError("headroom must be positive")
    y, yhat = _pair(y, yhat)
    capacity = yhat * headroom
    n = len(y)
    w = unused_capability(y, capacity)
    u = scale_up_count(y, capacity)
    total = float(np.sum(y))
    return EvalEntry(
        app=app, view=view, n=n,
        rmse=rmse(y, yhat),
        w=w, w_frac=w / total if total > 0 else None,
        u=u, u_frac=u / n,
    )


@dataclass
class EvalReport:
    entries: list[EvalEntry] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)

    def add(self, entry: EvalEntry) -> None:
        if any((e.app, e.view) == (entry.app, entry.view) for e in self.entries):
            raise DataError(f"duplicate entry for ({entry.app}, {entry.view})")
        self.entries.append(entry)

    def to_dict(self) -> dict:
        d = {"meta": self.meta, "entries": [e.as_dict() for e in self.entries]}
        if self.failures:
            d["failures"] = self.failures
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        report = cls(meta=dict(d.get("meta", {})), failures=list(d.get("failures", [])))
        for e in d.get("entries", []):
            report.add(EvalEntry(**{k: e[k] for k in EvalEntry.__dataclass_fields__}))
        return report

    @classmethod
    def load(cls, path: str | os.PathLike) -> "EvalReport":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"{path}: invalid report ({exc})") from None

    @classmethod
    def merge(cls, reports: list["EvalReport"]) -> "EvalReport":
        merged = cls(meta=dict(reports[0].meta) if reports else {})
        for r in reports:
            for e in r.entries:
                merged.add(e)
            merged.failures.extend(r.failures)
        return merged


COMPARISON_COLUMNS = ("app", "view", "rmse", "w", "w_frac", "u", "u_frac")
SCATTER_COLUMNS = ("app", "view", "w", "u")


def _view_rank(view: str) -> tuple[int, str]:
    try:
        return ViewKind.parse(view).order, view
    except ValueError:
        return len(ViewKind), view


def compare_scenarios(report: EvalReport) -> tuple[list[dict], list[dict]]:
    """Comparison rows and (w, u) scatter rows, sorted by app then MNO < Vertical < Joint."""
    if not report.entries:
        raise DataError("report has no entries")
    entries = sorted(report.entries, key=lambda e: (e.app, _view_rank(e.view)))
    table = [{k: getattr(e, k) for k in COMPARISON_COLUMNS} for e in entries]
    scatter = [{k: getattr(e, k) for k in SCATTER_COLUMNS} for e in entries]
    return table, scatter


def write_rows_csv(rows: list[dict], columns: tuple[str, ...], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: "" if row[k] is None else row[k] for k in columns})
