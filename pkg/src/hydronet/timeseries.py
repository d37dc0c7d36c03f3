"""Unit-tagged time tables and the CSV format they travel in.

A :class:`TimeTable` holds one or more equally long value columns on a shared
time axis. The axis is stored as float second-offsets from ``start``; ``step``
is the uniform spacing in seconds, or None when the samples are irregular and
still need resampling.

CSV layout (RFC 4180): optional ``# unit: <tag>`` pragma line, then a header
whose first column is ``timestamp`` (ISO-8601), remaining columns keyed by
node or sensor ids. Empty cells become NaN gaps; gaps are reported here and
filled, if at all, by the preprocessing stage.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np

from .errors import (
    NonMonotoneTimestampsError,
    TimeSeriesError,
    UnitMismatchError,
)
from .units import KNOWN_UNITS

_EPOCH = datetime(1970, 1, 1)


def to_epoch(ts: datetime) -> float:
    """Seconds since 1970-01-01; naive datetimes are taken as UTC."""
    if ts.tzinfo is not None:
        ts = ts.astimezone(timezone.utc).replace(tzinfo=None)
    return (ts - _EPOCH).total_seconds()


def from_epoch(seconds: float) -> datetime:
    return _EPOCH + timedelta(seconds=float(seconds))


def _parse_timestamp(token: str, row: int) -> datetime:
    token = token.strip()
    if token.endswith("Z"):
        token = token[:-1] + "+00:00"
    try:
        return datetime.fromisoformat(token)
    except ValueError:
        raise TimeSeriesError(f"data row {row}: bad timestamp {token!r}") from None


@dataclass
class TimeTable:
    start: datetime
    times: np.ndarray  # seconds from start
    columns: dict[str, np.ndarray]
    unit: str
    step: float | None = field(default=None)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.columns = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        for key, col in self.columns.items():
            if col.shape != self.times.shape:
                raise TimeSeriesError(
                    f"column {key!r} has {col.size} values for {self.times.size} timestamps"
                )
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise TimeSeriesError("timestamps must be strictly increasing")
        if self.step is None and self.times.size > 1:
            diffs = np.diff(self.times)
            if np.ptp(diffs) <= 1e-9:
                self.step = float(diffs[0])
        if self.step is not None and self.step <= 0:
            raise TimeSeriesError("step must be > 0")

    # -- shape -----------------------------------------------------------

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def keys(self) -> tuple[str, ...]:
        return tuple(self.columns)

    @property
    def is_uniform(self) -> bool:
        return self.step is not None

    def column(self, key: str) -> np.ndarray:
        try:
            return self.columns[key]
        except KeyError:
            raise KeyError(f"no column {key!r}; have {sorted(self.columns)}") from None

    def epoch_times(self) -> np.ndarray:
        return to_epoch(self.start) + self.times

    def timestamps(self) -> list[datetime]:
        return [from_epoch(e) for e in self.epoch_times()]

    def gaps(self) -> dict[str, int]:
        """NaN count per column (only columns that have any)."""
        out = {}
        for key, col in self.columns.items():
            n = int(np.isnan(col).sum())
            if n:
                out[key] = n
        return out

    def select(self, keys) -> "TimeTable":
        return TimeTable(self.start, self.times.copy(),
                         {k: self.column(k).copy() for k in keys},
                         self.unit, self.step)


def parse_timetable(text: str, unit: str | None = None) -> TimeTable:
    """Parse CSV content into a TimeTable.

    ``unit`` comes from the caller (CLI flag); a ``# unit:`` pragma in the
    file must agree with it when both are present.
    """
    pragma_unit = None
    data_lines = []
    for raw in text.splitlines():
        stripped = raw.strip()
        if stripped.startswith("#"):
            body = stripped.lstrip("#").strip()
            if body.lower().startswith("unit:"):
                pragma_unit = body[5:].strip()
            continue
        if stripped:
            data_lines.append(raw)

    if pragma_unit is not None and unit is not None and pragma_unit != unit:
        raise UnitMismatchError(f"file declares unit {pragma_unit!r}, caller expects {unit!r}")
    resolved = pragma_unit if pragma_unit is not None else unit
    if resolved is None:
        raise UnitMismatchError("no unit given: pass one or add a '# unit:' pragma line")
    if resolved not in KNOWN_UNITS:
        raise UnitMismatchError(f"unknown unit {resolved!r}; known: {KNOWN_UNITS}")

    reader = csv.reader(io.StringIO("\n".join(data_lines)))
    try:
        header = next(reader)
    except StopIteration:
        raise TimeSeriesError("empty time-series file") from None
    if not header or header[0].strip().lower() != "timestamp":
        raise TimeSeriesError("first header column must be 'timestamp'")
    keys = [h.strip() for h in header[1:]]
    if not keys:
        raise TimeSeriesError("no value columns")
    if len(set(keys)) != len(keys):
        raise TimeSeriesError("duplicate column keys in header")

    stamps: list[float] = []
    values: list[list[float]] = [[] for _ in keys]
    start: datetime | None = None
    prev = -np.inf
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(keys) + 1:
            raise TimeSeriesError(
                f"data row {row_no}: expected {len(keys) + 1} cells, got {len(row)}"
            )
        ts = _parse_timestamp(row[0], row_no)
        if start is None:
            start = ts
        offset = to_epoch(ts) - to_epoch(start)
        if offset <= prev and stamps:
            raise NonMonotoneTimestampsError(row_no)
        prev = offset
        stamps.append(offset)
        for ci, cell in enumerate(row[1:]):
            cell = cell.strip()
            if not cell:
                values[ci].append(np.nan)
                continue
            try:
                values[ci].append(float(cell))
            except ValueError:
                raise TimeSeriesError(
                    f"data row {row_no}, column {keys[ci]!r}: unparseable cell {cell!r}"
                ) from None

    if start is None:
        raise TimeSeriesError("time-series file has a header but no data rows")
    return TimeTable(start, np.array(stamps), dict(zip(keys, (np.array(v) for v in values))),
                     resolved)


def format_timetable(table: TimeTable, float_fmt: str = "%.6g") -> str:
    """Render to CSV text with the unit pragma (6 significant digits)."""
    out = io.StringIO()
    out.write(f"# unit: {table.unit}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["timestamp", *table.columns.keys()])
    stamps = table.timestamps()
    cols = list(table.columns.values())
    for i, ts in enumerate(stamps):
        cells = [ts.isoformat()]
        for col in cols:
            v = col[i]
            cells.append("" if np.isnan(v) else float_fmt % v)
        writer.writerow(cells)
    return out.getvalue()


def load_timetable(path, unit: str | None = None) -> TimeTable:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_timetable(fh.read(), unit)


def save_timetable(table: TimeTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_timetable(table))
