from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from ..errors import DataError


@dataclass(frozen=True, eq=False)
class Forecast:
    """Predicted demand for consecutive test periods, starting at global period ``start``."""

    app_id: str
    view: str
    values: np.ndarray
    start: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DataError("forecast values must be finite and non-negative")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def periods(self) -> np.ndarray:
        return self.start + np.arange(len(self.values))

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["period", "yhat"])
            w.writerows(zip(self.periods.tolist(), self.values.tolist()))

    @classmethod
    def read_csv(cls, path: str | os.PathLike, app_id: str = "", view: str = "") -> "Forecast":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            if next(reader, None) != ["period", "yhat"]:
                raise DataError(f"{path}: expected header period,yhat")
            periods, values = [], []
            for row in reader:
                try:
                    periods.append(int(row[0]))
                    values.append(float(row[1]))
                except (ValueError, IndexError):
                    raise DataError(f"{path}: line {reader.line_num}: malformed row") from None
        if not periods:
            raise DataError(f"{path}: forecast has no rows")
        if periods != list(range(periods[0], periods[0] + len(periods))):
            raise DataError(f"{path}: forecast periods must be consecutive")
        return cls(app_id, view, np.array(values), start=periods[0])
