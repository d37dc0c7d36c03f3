"""Sensor data preprocessing: resampling, static-window detection and
constant pressure-offset estimation/correction.

The offset method exploits near-zero-flow ("static") periods: with no flow
there is no head loss, so every pressure sensor should report the same
hydraulic grade line. A sensor's constant monitoring error is therefore the
HGL gap to a designated reference sensor, estimated per static window and
aggregated by the median for robustness against residual micro-flows.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .errors import DataError, TimeSeriesError
from .network import Network
from .timeseries import TimeTable, from_epoch, to_epoch
from .units import FLOW_UNIT_LPS, FLOW_UNIT_M3S

logger = logging.getLogger(__name__)

RESAMPLE_METHODS = ("interpolate_linear", "downsample_mean", "hold_last")

CONFIDENCE_OK = "ok"
CONFIDENCE_LOW_DATA = "low_data"
CONFIDENCE_INCONSISTENT = "inconsistent"

# confidence=ok demands at least this many windows and at most this spread
MIN_WINDOWS_OK = 3
MAX_STDDEV_OK = 0.2  # m


@dataclass(frozen=True)
class SensorMeta:
    id: str
    node_id: str
    elevation: float  # m
    kind: str  # "pressure" | "flow"

    def __post_init__(self):
        if self.kind not in ("pressure", "flow"):
            raise DataError(f"sensor {self.id!r}: unknown kind {self.kind!r}")
        if not math.isfinite(self.elevation):
            raise DataError(f"sensor {self.id!r}: elevation must be finite")


@dataclass
class SensorOffset:
    offset: float            # m, positive = sensor reads high
    n_static_windows: int
    window_stddev: float     # m, spread of the per-window estimates
    confidence: str


@dataclass
class OffsetReport:
    reference: str
    sensors: dict[str, SensorOffset]


def parse_sensor_file(text: str) -> list[SensorMeta]:
    """Lines of ``id node_id elevation_m kind``, ``#`` comments."""
    sensors = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 4:
            raise DataError(f"sensor file line {line_no}: expected 4 fields, got {len(tokens)}")
        try:
            elevation = float(tokens[2])
        except ValueError:
            raise DataError(f"sensor file line {line_no}: bad elevation {tokens[2]!r}") from None
        sensors.append(SensorMeta(tokens[0], tokens[1], elevation, tokens[3]))
    if not sensors:
        raise DataError("sensor file has no entries")
    return sensors


def validate_sensors(net: Network, sensors: list[SensorMeta],
                     elevation_tolerance: float = 0.01) -> list[str]:
    """Check sensors against the network; returns flag messages (empty = clean)."""
    flags = []
    node_elev = {n.id: n.elevation for n in net.nodes}
    for s in sensors:
        if s.node_id not in node_elev:
            raise DataError(f"sensor {s.id!r} references unknown node {s.node_id!r}")
        dz = abs(node_elev[s.node_id] - s.elevation)
        if dz > elevation_tolerance:
            flags.append(
                f"sensor {s.id}: elevation {s.elevation} differs from node "
                f"{s.node_id} elevation {node_elev[s.node_id]} by {dz:.3f} m"
            )
    return flags


# -- resampling --------------------------------------------------------------


def resample(raw: TimeTable, target_step: float, method: str) -> TimeTable:
    """Put a (possibly irregular) table onto a uniform grid.

    Grid points are multiples of ``target_step``; the grid starts at the
    first multiple inside the record. ``interpolate_linear`` and
    ``downsample_mean`` never extrapolate, so the grid ends at the last
    multiple inside the record; ``hold_last`` implements deadband semantics
    (a recorded value persists until the next change) and therefore extends
    to the first multiple at or past the end of the record.
    """
    if method not in RESAMPLE_METHODS:
        raise ValueError(f"unknown resample method {method!r}; known: {RESAMPLE_METHODS}")
    if len(raw) == 0:
        raise TimeSeriesError("cannot resample an empty table")
    if target_step <= 0:
        raise TimeSeriesError("target step must be > 0")

    t_abs = raw.epoch_times()
    i0 = math.ceil(t_abs[0] / target_step - 1e-9)
    if method == "hold_last":
        i1 = math.ceil(t_abs[-1] / target_step - 1e-9)
    else:
        i1 = math.floor(t_abs[-1] / target_step + 1e-9)
    if i1 < i0:
        raise TimeSeriesError("empty overlap between record and target grid")
    grid = np.arange(i0, i1 + 1, dtype=float) * target_step

    columns = {}
    for key, col in raw.columns.items():
        valid = np.isfinite(col)
        if not np.any(valid):
            raise TimeSeriesError(f"column {key!r} is all-NaN")
        tv, vv = t_abs[valid], col[valid]
        if method == "interpolate_linear":
            out = np.interp(grid, tv, vv)
            out[(grid < tv[0]) | (grid > tv[-1])] = np.nan
        elif method == "downsample_mean":
            left = np.searchsorted(t_abs, grid - 1e-9, side="left")
            right = np.searchsorted(t_abs, grid + target_step - 1e-9, side="left")
            out = np.full(grid.size, np.nan)
            for i in range(grid.size):
                window = col[left[i]:right[i]]
                window = window[np.isfinite(window)]
                if window.size:
                    out[i] = window.mean()
        else:  # hold_last
            idx = np.searchsorted(tv, grid + 1e-9, side="left") - 1
            out = np.full(grid.size, np.nan)
            has = idx >= 0
            out[has] = vv[idx[has]]
        columns[key] = out

    return TimeTable(from_epoch(grid[0]), grid - grid[0], columns, raw.unit, target_step)


def fill_short_gaps(table: TimeTable, max_gap: int = 5) -> TimeTable:
    """Linearly fill interior NaN runs of at most ``max_gap`` samples.

    Longer runs and leading/trailing gaps are left NaN so that downstream
    consumers can exclude them instead of trusting invented data.
    """
    columns = {}
    for key, col in table.columns.items():
        out = col.copy()
        isnan = np.isnan(out)
        if isnan.any() and not isnan.all():
            n = out.size
            i = 0
            while i < n:
                if not isnan[i]:
                    i += 1
                    continue
                j = i
                while j < n and isnan[j]:
                    j += 1
                run = j - i
                if 0 < i and j < n and run <= max_gap:
                    lo, hi = out[i - 1], out[j]
                    out[i:j] = lo + (hi - lo) * np.arange(1, run + 1) / (run + 1)
                i = j
        columns[key] = out
    return TimeTable(table.start, table.times.copy(), columns, table.unit, table.step)


# -- static windows and offsets ----------------------------------------------


def detect_static_windows(
    system_flow: TimeTable,
    threshold: float = 10.0,     # L/s
    min_duration: float = 900.0,  # s
) -> list[tuple[datetime, datetime]]:
    """Maximal spans where |system flow| stays at or below ``threshold``
    for at least ``min_duration``. Disjoint, in time order."""
    if not system_flow.is_uniform:
        raise TimeSeriesError("static-window detection needs a uniform grid; resample first")
    if len(system_flow.keys) != 1:
        raise DataError(f"expected a single system-flow column, got {list(system_flow.keys)}")
    col = system_flow.column(system_flow.keys[0])
    if system_flow.unit == FLOW_UNIT_M3S:
        thr = threshold * 1e-3
    elif system_flow.unit == FLOW_UNIT_LPS:
        thr = threshold
    else:
        raise DataError(f"system flow table has non-flow unit {system_flow.unit!r}")

    ok = np.isfinite(col) & (np.abs(col) <= thr)
    epochs = system_flow.epoch_times()
    windows = []
    i, n = 0, ok.size
    while i < n:
        if not ok[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and ok[j + 1]:
            j += 1
        if epochs[j] - epochs[i] >= min_duration:
            windows.append((from_epoch(epochs[i]), from_epoch(epochs[j])))
        i = j + 1
    return windows


def estimate_offsets(
    pressures: TimeTable,
    sensors: list[SensorMeta],
    reference: str,
    windows: list[tuple[datetime, datetime]],
) -> OffsetReport:
    """Estimate constant pressure-sensor offsets from static windows.

    For sensor j with elevation z_j, each window contributes the mean of
    (p_j + z_j) - (p_ref + z_ref); the reported offset is the median across
    windows. The reference sensor is assumed offset-free.
    """
    by_id = {s.id: s for s in sensors}
    if reference not in by_id:
        raise DataError(f"reference sensor {reference!r} not in sensor list")
    ref = by_id[reference]
    if ref.kind != "pressure":
        raise DataError(f"reference sensor {reference!r} must be a pressure sensor")
    if reference not in pressures.columns:
        raise DataError(f"pressure table has no column for reference sensor {reference!r}")

    epochs = pressures.epoch_times()
    ref_hgl = pressures.column(reference) + ref.elevation

    report = OffsetReport(reference=reference, sensors={})
    for s in sensors:
        if s.kind != "pressure":
            continue
        if s.id not in pressures.columns:
            raise DataError(f"pressure table has no column for sensor {s.id!r}")
        if s.id == reference:
            report.sensors[s.id] = SensorOffset(0.0, len(windows), 0.0, CONFIDENCE_OK)
            continue
        hgl = pressures.column(s.id) + s.elevation
        estimates = []
        for w_start, w_end in windows:
            mask = (epochs >= to_epoch(w_start)) & (epochs <= to_epoch(w_end))
            diff = hgl[mask] - ref_hgl[mask]
            diff = diff[np.isfinite(diff)]
            if diff.size:
                estimates.append(float(diff.mean()))
        n = len(estimates)
        if n == 0:
            report.sensors[s.id] = SensorOffset(0.0, 0, 0.0, CONFIDENCE_LOW_DATA)
            continue
        offset = float(np.median(estimates))
        stddev = float(np.std(estimates))
        if n < MIN_WINDOWS_OK:
            confidence = CONFIDENCE_LOW_DATA
        elif stddev > MAX_STDDEV_OK:
            confidence = CONFIDENCE_INCONSISTENT
        else:
            confidence = CONFIDENCE_OK
        report.sensors[s.id] = SensorOffset(offset, n, stddev, confidence)
    return report


def apply_corrections(pressures: TimeTable, report: OffsetReport) -> TimeTable:
    """Subtract estimated offsets from the corresponding pressure columns.

    Only offsets with confidence ``ok`` are applied; other columns pass
    through unchanged with a warning.
    """
    columns = {}
    for key, col in pressures.columns.items():
        entry = report.sensors.get(key)
        if entry is None:
            columns[key] = col.copy()
        elif entry.confidence == CONFIDENCE_OK:
            columns[key] = col - entry.offset
        else:
            logger.warning(
                "sensor %s: offset %.3f m not applied (confidence=%s)",
                key, entry.offset, entry.confidence,
            )
            columns[key] = col.copy()
    return TimeTable(pressures.start, pressures.times.copy(), columns,
                     pressures.unit, pressures.step)
