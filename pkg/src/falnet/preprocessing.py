"""Cleaning and supervised-pair construction for hourly frames.

Order of operations in the pipeline: interpolate raw gaps, replace IQR
outliers (mark missing, re-interpolate), scale, window, split. Outliers are
replaced rather than dropped so the hourly grid the spectral code relies on
stays intact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import AllMissingChannel, DegenerateChannel, InsufficientHistory
from .frame import TimeSeriesFrame

__all__ = [
    "interpolate_missing",
    "iqr_filter",
    "ChannelMinMaxScaler",
    "WindowedDataset",
    "make_windows",
    "chrono_split",
    "split_counts",
]


def interpolate_missing(frame: TimeSeriesFrame) -> TimeSeriesFrame:
    """Fill NaN cells: linear between neighbors, nearest-value at the edges."""
    values = frame.values.copy()
    idx = np.arange(frame.n_rows, dtype=np.float64)
    for c, name in enumerate(frame.channels):
        col = values[:, c]
        known = ~np.isnan(col)
        if not known.any():
            raise AllMissingChannel(f"channel {name!r} has no observed values")
        if known.all():
            continue
        # np.interp is linear inside and clamps to the end values outside,
        # which is exactly the nearest-value boundary rule
        values[:, c] = np.interp(idx, idx[known], col[known])
    return frame.with_values(values)


def iqr_filter(frame: TimeSeriesFrame, k: float = 1.5) -> TimeSeriesFrame:
    """Replace values outside [Q1 - k*IQR, Q3 + k*IQR] per channel.

    Flagged cells are marked missing and re-interpolated, so the result has
    no gaps. Quartiles use the linear-interpolation (type 7) rule.
    """
    if np.isnan(frame.values).any():
        raise ValueError("iqr_filter requires a gap-free frame; interpolate first")
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    values = frame.values.copy()
    for c in range(values.shape[1]):
        col = values[:, c]
        q1, q3 = np.quantile(col, [0.25, 0.75])
        iqr = q3 - q1
        outliers = (col < q1 - k * iqr) | (col > q3 + k * iqr)
        col[outliers] = np.nan
    return interpolate_missing(frame.with_values(values))


class ChannelMinMaxScaler(BaseEstimator, TransformerMixin):
    """Per-column min-max map onto [0, 1], invertible column by column.

    Fit on training data only; transformed test values may fall outside
    [0, 1], which is intended. A column with max == min cannot be scaled and
    raises DegenerateChannel at transform time.
    """

    def fit(self, X, y=None):
        X = self._validate(X)
        self.min_ = X.min(axis=0)
        self.max_ = X.max(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        X = self._check_ready(X)
        return (X - self.min_) / (self.max_ - self.min_)

    def inverse_transform(self, X):
        X = self._check_ready(X)
        return X * (self.max_ - self.min_) + self.min_

    def transform_column(self, values, column: int):
        self._check_column(column)
        v = np.asarray(values, dtype=np.float64)
        return (v - self.min_[column]) / (self.max_[column] - self.min_[column])

    def inverse_transform_column(self, values, column: int):
        self._check_column(column)
        v = np.asarray(values, dtype=np.float64)
        return v * (self.max_[column] - self.min_[column]) + self.min_[column]

    @staticmethod
    def _validate(X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("expected a non-empty 2-D array [rows, channels]")
        if not np.isfinite(X).all():
            raise ValueError("scaler input contains NaN or Inf")
        return X

    def _check_ready(self, X):
        X = self._validate(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        degenerate = np.flatnonzero(self.max_ <= self.min_)
        if degenerate.size:
            raise DegenerateChannel(f"columns {degenerate.tolist()} have max == min")
        return X

    def _check_column(self, column: int):
        if not hasattr(self, "min_"):
            raise ValueError("scaler is not fitted")
        if self.max_[column] <= self.min_[column]:
            raise DegenerateChannel(f"column {column} has max == min")


@dataclass
class WindowedDataset:
    """Many-to-one supervised pairs: inputs[i] covers rows [i, i+window),
    targets[i] is the target channel at row i + window + horizon - 1."""

    inputs: np.ndarray   # [samples, window, features]
    targets: np.ndarray  # [samples]
    window_len: int
    horizon: int
    target_channel: str

    @property
    def samples(self) -> int:
        return len(self.targets)


def make_windows(frame: TimeSeriesFrame, window_len: int = 10, horizon: int = 1,
                 target_channel: str = "PM2.5") -> WindowedDataset:
    """Slide a stride-1 window over the frame; one scalar target per window."""
    if window_len < 1 or horizon < 1:
        raise ValueError("window_len and horizon must be positive")
    target_idx = frame.channel_index(target_channel)
    samples = frame.n_rows - window_len - horizon + 1
    if samples < 1:
        raise InsufficientHistory(
            f"{frame.n_rows} rows cannot fill a window of {window_len} plus horizon {horizon}")
    view = np.lib.stride_tricks.sliding_window_view(frame.values, window_len, axis=0)
    inputs = view[:samples].transpose(0, 2, 1).copy()
    targets = frame.values[window_len + horizon - 1:window_len + horizon - 1 + samples,
                           target_idx].copy()
    return WindowedDataset(inputs, targets, window_len, horizon, target_channel)


def split_counts(n: int, train_fraction: float) -> tuple[int, int]:
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    if n < 2:
        raise InsufficientHistory(f"need at least 2 samples to split, got {n}")
    n_train = int(np.floor(train_fraction * n))
    return n_train, n - n_train


def chrono_split(dataset: WindowedDataset,
                 train_fraction: float = 0.8) -> tuple[WindowedDataset, WindowedDataset]:
    """First floor(fraction * n) samples train, the rest test; no shuffling,
    so every test target lies strictly after every train target."""
    n_train, _ = split_counts(dataset.samples, train_fraction)
    head = WindowedDataset(dataset.inputs[:n_train].copy(), dataset.targets[:n_train].copy(),
                           dataset.window_len, dataset.horizon, dataset.target_channel)
    tail = WindowedDataset(dataset.inputs[n_train:].copy(), dataset.targets[n_train:].copy(),
                           dataset.window_len, dataset.horizon, dataset.target_channel)
    return head, tail
