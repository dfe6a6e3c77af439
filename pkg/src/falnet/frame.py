"""Hourly multivariate series container and CSV ingestion/export.

Timestamps are epoch-hours (unix seconds // 3600). Ingestion snaps every
row onto a uniform hourly grid; hours absent from the file become all-NaN
rows so downstream interpolation sees explicit gaps.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .exceptions import CsvFormatError, NonMonotonicTime

DEFAULT_CHANNELS = ["PM2.5", "PM10", "SO2", "NO2", "CO", "O3"]

__all__ = ["TimeSeriesFrame", "parse_csv", "render_csv", "DEFAULT_CHANNELS"]


@dataclass
class TimeSeriesFrame:
    """Uniform hourly grid of channel values; NaN marks a missing cell."""

    timestamps: np.ndarray  # int64 epoch-hours, stride exactly 1
    channels: list[str]
    values: np.ndarray      # float64 [time, channel]

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.timestamps.ndim != 1:
            raise ValueError("timestamps must be 1-D")
        if self.values.ndim != 2:
            raise ValueError("values must be 2-D [time, channel]")
        if self.values.shape[0] != len(self.timestamps):
            raise ValueError("row count does not match timestamp count")
        if self.values.shape[1] != len(self.channels):
            raise ValueError("column count does not match channel count")
        diffs = np.diff(self.timestamps)
        if np.any(diffs <= 0):
            raise NonMonotonicTime("timestamps must be strictly increasing")
        if np.any(diffs != 1):
            raise ValueError("timestamps must be a uniform hourly grid")

    @property
    def n_rows(self) -> int:
        return len(self.timestamps)

    def channel_index(self, name: str) -> int:
        try:
            return self.channels.index(name)
        except ValueError:
            raise KeyError(f"unknown channel {name!r}; have {self.channels}") from None

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.channel_index(name)]

    def with_values(self, values: np.ndarray) -> "TimeSeriesFrame":
        return TimeSeriesFrame(self.timestamps.copy(), list(self.channels),
                               np.asarray(values, dtype=np.float64))

    def copy(self) -> "TimeSeriesFrame":
        return self.with_values(self.values.copy())


def _parse_timestamp(token: str, line: int) -> int:
    token = token.strip()
    if not token:
        raise CsvFormatError(f"line {line}: empty timestamp")
    try:
        seconds = int(token)
    except ValueError:
        seconds = None
    if seconds is not None:
        if seconds % 3600 != 0:
            raise CsvFormatError(f"line {line}: epoch timestamp {token} is not hour-aligned")
        return seconds // 3600
    try:
        stamp = datetime.fromisoformat(token)
    except ValueError:
        raise CsvFormatError(f"line {line}: unparseable timestamp {token!r}") from None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    if stamp.minute or stamp.second or stamp.microsecond:
        raise CsvFormatError(f"line {line}: timestamp {token!r} is not on the hour")
    return int(stamp.timestamp()) // 3600


def _parse_cell(token: str, line: int, col: str) -> float:
    token = token.strip()
    if not token:
        return float("nan")
    try:
        return float(token)
    except ValueError:
        raise CsvFormatError(f"line {line}: column {col!r} has non-numeric cell {token!r}") from None


def parse_csv(text: str) -> TimeSeriesFrame:
    """Parse `timestamp,<channel...>` CSV onto a uniform hourly grid.

    Empty cells become NaN; hours missing between the first and last row are
    materialized as all-NaN rows. Timestamps may be ISO-8601 on the hour
    (e.g. 2021-03-01T05:00) or hour-aligned epoch seconds.
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise CsvFormatError("empty document")
    header = [c.strip().lstrip("\ufeff") for c in rows[0]]
    if len(header) < 2 or header[0].lower() != "timestamp":
        raise CsvFormatError(f"header must be 'timestamp,<channels...>', got {header}")
    channels = header[1:]
    if len(set(channels)) != len(channels):
        raise CsvFormatError("duplicate channel names in header")
    if len(rows) < 2:
        raise CsvFormatError("no data rows")

    hours = []
    data = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise CsvFormatError(f"line {line_no}: expected {len(header)} cells, got {len(row)}")
        hours.append(_parse_timestamp(row[0], line_no))
        data.append([_parse_cell(cell, line_no, col) for cell, col in zip(row[1:], channels)])

    hours = np.asarray(hours, dtype=np.int64)
    if np.any(np.diff(hours) <= 0):
        raise NonMonotonicTime("timestamps must be strictly increasing")

    grid = np.arange(hours[0], hours[-1] + 1, dtype=np.int64)
    values = np.full((len(grid), len(channels)), np.nan)
    values[hours - hours[0]] = np.asarray(data, dtype=np.float64)
    return TimeSeriesFrame(grid, channels, values)


def _format_hour(hour: int) -> str:
    return datetime.fromtimestamp(int(hour) * 3600, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M")


def render_csv(frame: TimeSeriesFrame) -> str:
    """Serialize a frame back to CSV; 6 fractional digits, NaN as empty."""
    out = io.StringIO()
    out.write("timestamp," + ",".join(frame.channels) + "\n")
    for i in range(frame.n_rows):
        cells = ["" if np.isnan(v) else f"{v:.6f}" for v in frame.values[i]]
        out.write(_format_hour(frame.timestamps[i]) + "," + ",".join(cells) + "\n")
    return out.getvalue()
