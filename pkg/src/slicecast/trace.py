"""Crowd-sourced traffic trace: record model, CSV interchange and summary.

A trace is stored column-wise (one numpy array per field) because every
downstream consumer aggregates over records; ``Trace.records`` materializes
the row view on demand.

CSV layout (UTF-8, one record per line, decimal integers)::

    period,user_id,cell_id,tile_x,tile_y,app_id,dl_bytes,ul_bytes
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

from .errors import TraceFormatError

HEADER = ("period", "user_id", "cell_id", "tile_x", "tile_y", "app_id", "dl_bytes", "ul_bytes")


@dataclass(frozen=True, order=True)
class TileCoord:
    x: int
    y: int


@dataclass(frozen=True)
class TraceRecord:
    """One observation: traffic of the active app for a user in one hour."""

    period: int
    user_id: str
    cell_id: str
    tile: TileCoord
    app_id: str
    dl_bytes: int
    ul_bytes: int

    def __post_init__(self):
        if self.period < 0:
            raise ValueError(f"period must be non-negative, got {self.period}")
        if self.dl_bytes < 0 or self.ul_bytes < 0:
            raise ValueError("byte counts must be non-negative")
        if not (self.user_id and self.cell_id and self.app_id):
            raise ValueError("identifiers must be non-empty")
        if self.tile.x < 0 or self.tile.y < 0:
            raise ValueError("tile coordinates must be non-negative")


@dataclass(frozen=True)
class TraceMeta:
    duration_periods: int
    n_users: int
    n_cells: int
    n_apps: int
    n_tiles: int
    total_traffic_bytes: int

    def as_dict(self) -> dict[str, int]:
        return {
            "duration_periods": self.duration_periods,
            "n_users": self.n_users,
            "n_cells": self.n_cells,
            "n_apps": self.n_apps,
            "n_tiles": self.n_tiles,
            "total_traffic_bytes": self.total_traffic_bytes,
        }


def _id_array(values: Sequence[str] | np.ndarray) -> np.ndarray:
    arr = np.asarray(values, dtype=str)
    if arr.ndim != 1:
        raise ValueError("identifier columns must be 1-D")
    return arr


def _int_array(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.size == 0:
        return np.zeros(0, dtype=np.int64)
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError("integer column contains non-integer values")
    return arr.astype(np.int64, copy=False)


class Trace:
    """Immutable, canonically sorted collection of trace records.

    Records are ordered by period, then user_id; remaining fields break ties so
    that the order (and therefore the CSV form) is fully deterministic.
    Duplicate keys are kept as separate records.
    """

    def __init__(self, period, user_id, cell_id, tile_x, tile_y, app_id, dl_bytes, ul_bytes):
        cols = {
            "period": _int_array(period),
            "user_id": _id_array(user_id),
            "cell_id": _id_array(cell_id),
            "tile_x": _int_array(tile_x),
            "tile_y": _int_array(tile_y),
            "app_id": _id_array(app_id),
            "dl_bytes": _int_array(dl_bytes),
            "ul_bytes": _int_array(ul_bytes),
        }
        n = len(cols["period"])
        if any(len(c) != n for c in cols.values()):
            raise ValueError("trace columns have different lengths")
        _check_columns(cols)
        if n:
            order = np.lexsort((
                cols["ul_bytes"], cols["dl_bytes"], cols["tile_y"], cols["tile_x"],
                cols["cell_id"], cols["app_id"], cols["user_id"], cols["period"],
            ))
            cols = {k: v[order] for k, v in cols.items()}
        for name, col in cols.items():
            col.flags.writeable = False
            object.__setattr__(self, name, col)

    def __setattr__(self, name, value):
        if name in HEADER:
            raise AttributeError("Trace is immutable")
        object.__setattr__(self, name, value)

    @classmethod
    def from_records(cls, records: Iterable[TraceRecord]) -> "Trace":
        records = list(records)
        return cls(
            [r.period for r in records],
            [r.user_id for r in records],
            [r.cell_id for r in records],
            [r.tile.x for r in records],
            [r.tile.y for r in records],
            [r.app_id for r in records],
            [r.dl_bytes for r in records],
            [r.ul_bytes for r in records],
        )

    @classmethod
    def empty(cls) -> "Trace":
        return cls([], [], [], [], [], [], [], [])

    def __len__(self) -> int:
        return len(self.period)

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        return len(self) == len(other) and all(
            np.array_equal(getattr(self, name), getattr(other, name)) for name in HEADER
        )

    def __repr__(self) -> str:
        return f"Trace({len(self)} records, {self.meta})"

    @cached_property
    def records(self) -> tuple[TraceRecord, ...]:
        return tuple(
            TraceRecord(p, u, c, TileCoord(x, y), a, dl, ul)
            for p, u, c, x, y, a, dl, ul in zip(*(getattr(self, n).tolist() for n in HEADER))
        )

    @cached_property
    def meta(self) -> TraceMeta:
        return summarize(self)

    @property
    def duration(self) -> int:
        return int(self.period.max()) + 1 if len(self) else 0

    @property
    def apps(self) -> list[str]:
        return sorted(set(self.app_id.tolist()))

    def demand(self, mode: str = "dl+ul") -> np.ndarray:
        """Per-record byte count under the given demand mode (``dl`` or ``dl+ul``)."""
        if mode == "dl":
            return self.dl_bytes
        if mode == "dl+ul":
            return self.dl_bytes + self.ul_bytes
        raise ValueError(f"unknown demand mode {mode!r}; expected 'dl' or 'dl+ul'")


def _check_columns(cols: dict[str, np.ndarray]) -> None:
    for name in ("period", "tile_x", "tile_y", "dl_bytes", "ul_bytes"):
        bad = np.flatnonzero(cols[name] < 0)
        if bad.size:
            raise ValueError(f"{name} must be non-negative (record {bad[0]})")
    for name in ("user_id", "cell_id", "app_id"):
        bad = np.flatnonzero(np.char.str_len(cols[name]) == 0) if len(cols[name]) else []
        if len(bad):
            raise ValueError(f"{name} must be non-empty (record {bad[0]})")


def summarize(trace: Trace) -> TraceMeta:
    if len(trace) == 0:
        return TraceMeta(0, 0, 0, 0, 0, 0)
    tiles = np.unique(np.stack([trace.tile_x, trace.tile_y], axis=1), axis=0)
    return TraceMeta(
        duration_periods=trace.duration,
        n_users=len(np.unique(trace.user_id)),
        n_cells=len(np.unique(trace.cell_id)),
        n_apps=len(np.unique(trace.app_id)),
        n_tiles=len(tiles),
        total_traffic_bytes=int(trace.dl_bytes.sum() + trace.ul_bytes.sum()),
    )


def _text_stream(stream, mode: str):
    if isinstance(stream, (str, os.PathLike)):
        return open(stream, mode, encoding="utf-8", newline=""), True
    if isinstance(stream, io.TextIOBase):
        return stream, False
    wrapper = io.TextIOWrapper(stream, encoding="utf-8", newline="")
    return wrapper, False


def load_trace(source: str | os.PathLike | IO) -> Trace:
    """Parse a trace CSV from a path, binary stream or text stream."""
    fh, owned = _text_stream(source, "r")
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TraceFormatError("missing header", line=1)
        if tuple(h.strip() for h in header) != HEADER:
            raise TraceFormatError(f"expected header {','.join(HEADER)}", line=1)
        cols: list[list] = [[] for _ in HEADER]
        for row in reader:
            if not row:
                continue
            line = reader.line_num
            if len(row) != len(HEADER):
                raise TraceFormatError(f"expected {len(HEADER)} fields, got {len(row)}", line)
            try:
                period, tx, ty, dl, ul = (int(row[i]) for i in (0, 3, 4, 6, 7))
            except ValueError:
                raise TraceFormatError("non-integer value in integer field", line) from None
            if dl < 0 or ul < 0:
                raise TraceFormatError("negative byte count", line)
            if period < 0 or tx < 0 or ty < 0:
                raise TraceFormatError("negative period or tile coordinate", line)
            if not (row[1] and row[2] and row[5]):
                raise TraceFormatError("empty identifier", line)
            for col, value in zip(cols, (period, row[1], row[2], tx, ty, row[5], dl, ul)):
                col.append(value)
    finally:
        if owned:
            fh.close()
        elif isinstance(fh, io.TextIOWrapper) and not isinstance(source, io.TextIOBase):
            fh.detach()
    return Trace(*cols)


def write_trace(trace: Trace, sink: str | os.PathLike | IO) -> None:
    fh, owned = _text_stream(sink, "w")
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        writer.writerows(zip(*(getattr(trace, n).tolist() for n in HEADER)))
        fh.flush()
    finally:
        if owned:
            fh.close()
        elif isinstance(fh, io.TextIOWrapper) and not isinstance(sink, io.TextIOBase):
            fh.detach()
