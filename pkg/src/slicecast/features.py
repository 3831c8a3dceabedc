"""Stakeholder feature views, per-app targets, train/test split and scaling.

Three parties see different data:

* the MNO sees, per cell and hour, the total demand over all apps and the
  number of users in the cell;
* a vertical sees, per super-tile and hour, its own app's demand and user
  count, plus its recent traffic history (trailing-window sum of its own
  traffic up to the previous hour);
* the joint view is the column-wise concatenation of both.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import DataError
from .trace import Trace

DEFAULT_TRAIN_PERIODS = 21 * 24
DEFAULT_TEST_PERIODS = 168
DEFAULT_HISTORY_WINDOW = 24


class ViewKind(str, Enum):
    MNO = "mno"
    VERTICAL = "vertical"
    JOINT = "joint"

    @property
    def label(self) -> str:
        return {"mno": "MNO", "vertical": "Vertical", "joint": "Joint"}[self.value]

    @property
    def order(self) -> int:
        return list(ViewKind).index(self)

    @classmethod
    def parse(cls, value: "str | ViewKind") -> "ViewKind":
        if isinstance(value, ViewKind):
            return value
        try:
            return cls(value.lower())
        except ValueError:
            raise ValueError(f"unknown view {value!r}; expected mno, vertical or joint") from None


@dataclass(frozen=True)
class StakeholderView:
    kind: ViewKind
    app_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ViewKind.parse(self.kind))
        if (self.app_id is None) != (self.kind is ViewKind.MNO):
            raise ValueError("app_id is required for vertical/joint views and forbidden for MNO")


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    column_names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("feature values must be a 2-D array")
        names = tuple(self.column_names)
        if len(names) != values.shape[1]:
            raise ValueError(f"{len(names)} column names for {values.shape[1]} columns")
        if not np.all(np.isfinite(values)):
            raise ValueError("feature values contain NaN or Inf")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_names", names)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def rows(self, start: int, stop: int) -> "FeatureMatrix":
        return FeatureMatrix(self.column_names, self.values[start:stop])

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return self.column_names == other.column_names and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class TargetSeries:
    app_id: str
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("target values must be 1-D")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("target values must be finite and non-negative")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, TargetSeries):
            return NotImplemented
        return self.app_id == other.app_id and np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class SplitSpec:
    train_periods: int = DEFAULT_TRAIN_PERIODS
    test_periods: int = DEFAULT_TEST_PERIODS

    def __post_init__(self):
        if self.train_periods < 1 or self.test_periods < 1:
            raise ValueError("train and test periods must both be >= 1")

    @property
    def total(self) -> int:
        return self.train_periods + self.test_periods

    def check(self, n_rows: int) -> None:
        if self.total != n_rows:
            raise DataError(
                f"split {self.train_periods}:{self.test_periods} does not cover {n_rows} periods"
            )

    @classmethod
    def parse(cls, text: str) -> "SplitSpec":
        try:
            train, test = (int(p) for p in text.split(":"))
        except ValueError:
            raise ValueError(f"split must look like TRAIN:TEST, got {text!r}") from None
        return cls(train, test)

    def __str__(self) -> str:
        return f"{self.train_periods}:{self.test_periods}"


class Split(NamedTuple):
    train_features: FeatureMatrix
    train_target: TargetSeries
    test_features: FeatureMatrix
    test_target: TargetSeries


def _index(labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    uniq, inv = np.unique(labels, return_inverse=True)
    return uniq, inv.reshape(-1)


def _grouped(duration: int, n_groups: int, period, group, demand, users) -> tuple[np.ndarray, np.ndarray]:
    """Per (period, group) byte sums and distinct-user counts."""
    flat = period * n_groups + group
    size = duration * n_groups
    total = np.zeros(size, dtype=np.int64)
    np.add.at(total, flat, demand)
    _, user_idx = _index(users)
    pairs = np.unique(np.stack([flat, user_idx], axis=1), axis=0) if len(flat) else np.zeros((0, 2), int)
    count = np.bincount(pairs[:, 0], minlength=size)
    return total.reshape(duration, n_groups), count.reshape(duration, n_groups)


def _interleave(prefix: list[str], demand: np.ndarray, users: np.ndarray):
    names, cols = [], []
    for i, p in enumerate(prefix):
        names += [f"{p}_demand", f"{p}_users"]
        cols += [demand[:, i], users[:, i]]
    values = np.stack(cols, axis=1).astype(float) if cols else np.zeros((demand.shape[0], 0))
    return names, values


def mno_features(trace: Trace, demand_mode: str = "dl+ul", duration: int | None = None) -> FeatureMatrix:
    """Per-cell total demand and user count; carries no app identity."""
    duration = trace.duration if duration is None else duration
    cells, cell_idx = _index(trace.cell_id)
    demand, users = _grouped(duration, len(cells), trace.period, cell_idx,
                             trace.demand(demand_mode), trace.user_id)
    names, values = _interleave([f"cell_{c}" for c in cells.tolist()], demand, users)
    return FeatureMatrix(tuple(names), values)


def _require_app(trace: Trace, app: str) -> np.ndarray:
    mask = trace.app_id == app
    if not mask.any():
        raise DataError(f"unknown app {app!r}")
    return mask


def traffic_history(app_total: np.ndarray, window: int | None) -> np.ndarray:
    """Demand of periods [t - window, t) at each t; all of [0, t) when ``window`` is None."""
    csum = np.concatenate([[0], np.cumsum(app_total)])
    if window is None:
        return csum[:-1]
    if window < 1:
        raise ValueError("history window must be >= 1")
    t = np.arange(len(app_total))
    return csum[t] - csum[np.maximum(t - window, 0)]


def vertical_features(trace: Trace, app: str, agg: int = 8, demand_mode: str = "dl+ul",
                      grid: tuple[int, int] | None = None,
                      duration: int | None = None,
                      history_window: int | None = DEFAULT_HISTORY_WINDOW) -> FeatureMatrix:
    """Per-super-tile demand/users of one app plus its traffic history.

    ``agg`` x ``agg`` tiles form one super-tile; super-tiles are numbered row
    by row over the grid, which defaults to the bounding box of all tiles in
    the trace (so every app yields the same column layout).

    The ``history`` column holds the app's demand over the ``history_window``
    periods before t (``None``: everything since period 0). A bounded window
    keeps the column inside its training range during the test weeks.
    """
    if agg < 1:
        raise ValueError("agg must be >= 1")
    mask = _require_app(trace, app)
    duration = trace.duration if duration is None else duration
    if grid is None:
        grid = (int(trace.tile_x.max()) + 1, int(trace.tile_y.max()) + 1)
    width, height = grid
    sw, sh = -(-width // agg), -(-height // agg)
    tx, ty = trace.tile_x[mask], trace.tile_y[mask]
    if tx.size and (tx.max() >= width or ty.max() >= height):
        raise DataError(f"tile outside the {width}x{height} grid")
    supertile = (ty // agg) * sw + tx // agg
    bytes_ = trace.demand(demand_mode)[mask]
    demand, users = _grouped(duration, sw * sh, trace.period[mask], supertile, bytes_,
                             trace.user_id[mask])
    names, values = _interleave([f"tile_{s}" for s in range(sw * sh)], demand, users)
    history = traffic_history(demand.sum(axis=1), history_window)
    return FeatureMatrix(tuple(names) + ("history",),
                         np.column_stack([values, history.astype(float)]))


def joint_features(mno: FeatureMatrix, vert: FeatureMatrix) -> FeatureMatrix:
    if mno.shape[0] != vert.shape[0]:
        raise DataError(f"row count mismatch: {mno.shape[0]} vs {vert.shape[0]}")
    return FeatureMatrix(mno.column_names + vert.column_names,
                         np.concatenate([mno.values, vert.values], axis=1))


def target_series(trace: Trace, app: str, demand_mode: str = "dl+ul",
                  duration: int | None = None) -> TargetSeries:
    """Network-wide demand of one app per period (the slice's traffic)."""
    mask = _require_app(trace, app)
    duration = trace.duration if duration is None else duration
    values = np.zeros(duration, dtype=np.int64)
    np.add.at(values, trace.period[mask], trace.demand(demand_mode)[mask])
    return TargetSeries(app, values.astype(float))


def build_view(trace: Trace, view: StakeholderView, agg: int = 8, demand_mode: str = "dl+ul",
               history_window: int | None = DEFAULT_HISTORY_WINDOW) -> FeatureMatrix:
    if view.kind is ViewKind.MNO:
        return mno_features(trace, demand_mode)
    vert = vertical_features(trace, view.app_id, agg, demand_mode, history_window=history_window)
    if view.kind is ViewKind.VERTICAL:
        return vert
    return joint_features(mno_features(trace, demand_mode), vert)


def split(features: FeatureMatrix, target: TargetSeries, spec: SplitSpec) -> Split:
    """Chronological split: first ``train_periods`` rows train, the rest test."""
    spec.check(features.shape[0])
    if len(target) != features.shape[0]:
        raise DataError(f"target has {len(target)} periods, features have {features.shape[0]}")
    k = spec.train_periods
    return Split(
        features.rows(0, k),
        TargetSeries(target.app_id, target.values[:k]),
        features.rows(k, spec.total),
        TargetSeries(target.app_id, target.values[k:]),
    )


@dataclass(frozen=True, eq=False)
class Scaler:
    """Per-column z-score with population std; zero-variance columns map to 0."""

    mean: np.ndarray
    std: np.ndarray

    def _safe_std(self) -> np.ndarray:
        return np.where(self.std > 0, self.std, 1.0)

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = (x - self.mean) / self._safe_std()
        return np.where(self.std > 0, out, 0.0)

    def inverse_transform(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float) * self._safe_std() + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float))


def fit_scaler(train: FeatureMatrix | np.ndarray) -> Scaler:
    values = train.values if isinstance(train, FeatureMatrix) else np.asarray(train, dtype=float)
    if values.shape[0] == 0:
        raise DataError("cannot fit a scaler on an empty training set")
    return Scaler(values.mean(axis=0), values.std(axis=0))


def apply_scaler(scaler: Scaler, m: FeatureMatrix) -> FeatureMatrix:
    return FeatureMatrix(m.column_names, scaler.transform(m.values))


def write_matrix_csv(m: FeatureMatrix, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(m.column_names)
        w.writerows(m.values.tolist())


def read_matrix_csv(path: str | os.PathLike) -> FeatureMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty feature file")
        rows = []
        for row in reader:
            if len(row) != len(header):
                raise DataError(f"{path}: line {reader.line_num}: expected {len(header)} fields")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise DataError(f"{path}: line {reader.line_num}: non-numeric value") from None
    values = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return FeatureMatrix(tuple(header), values)


def write_target_csv(target: TargetSeries, path: str | os.PathLike) -> None:
    """CSV ``period,<app_id>``: the header names the app."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["period", target.app_id])
        w.writerows((t, v) for t, v in enumerate(target.values.tolist()))


def read_target_csv(path: str | os.PathLike) -> TargetSeries:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or len(header) != 2 or header[0] != "period":
            raise DataError(f"{path}: expected header period,<app_id>")
        values = []
        for row in reader:
            try:
                period, value = int(row[0]), float(row[1])
            except (ValueError, IndexError):
                raise DataError(f"{path}: line {reader.line_num}: malformed row") from None
            if period != len(values):
                raise DataError(f"{path}: line {reader.line_num}: periods must be contiguous from 0")
            values.append(value)
    return TargetSeries(header[1], np.array(values, dtype=float))
