"""End-to-end pipeline: cleaning, per-channel decomposition, residual
denoising, scaling, windowing, training, and leak-free recomposition.

Leakage rules, in one place:
  * the chronological 8:2 split is decided first, in window index space;
  * decomposition, denoising, and the scaler are fit on the training rows
    only;
  * at prediction time the trend is held at its last fitted value, the
    seasonal component is extended periodically, and the residual history is
    re-denoised causally (one transform over rows up to the window's end),
    so no value later than the input window ever influences a prediction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .decomposition import Decomposition, stl_decompose
from .exceptions import InsufficientHistory
from .frame import TimeSeriesFrame
from .metrics import MetricsReport, evaluate
from .model import (AdamState, FalnetParams, TrainConfig, TrainHistory,
                    falnet_forward, train)
from .preprocessing import (ChannelMinMaxScaler, interpolate_missing, iqr_filter,
                            make_windows, split_counts)
from .spectral import denoise_residual

__all__ = ["PipelineConfig", "FittedPipeline", "clean_frame", "fit_pipeline",
           "extended_residuals", "model_window", "predict_series",
           "persistence_predictions", "evaluate_pipeline"]


@dataclass
class PipelineConfig:
    """Everything a full run needs beyond the raw CSV."""

    train: TrainConfig = field(default_factory=TrainConfig)
    period: int = 24
    cutoff: float = 0.1
    train_fraction: float = 0.8
    horizon: int = 1
    target_channel: str = "PM2.5"
    iqr_k: float = 1.5

    def validate(self):
        self.train.validate()
        if self.period < 2:
            raise ValueError("period must be >= 2")
        if not 0.0 < self.cutoff <= 0.5:
            raise ValueError("cutoff must lie in (0, 0.5]")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        return self


def clean_frame(frame: TimeSeriesFrame, iqr_k: float = 1.5) -> TimeSeriesFrame:
    """Interpolate raw gaps, then replace IQR outliers."""
    return iqr_filter(interpolate_missing(frame), iqr_k)


@dataclass
class FittedPipeline:
    """Everything predict/evaluate needs; exactly what the checkpoint stores."""

    params: FalnetParams
    adam_state: AdamState
    config: PipelineConfig
    channels: list
    scaler: ChannelMinMaxScaler
    decompositions: dict       # channel name -> Decomposition (training rows)
    train_rows: int
    n_train_windows: int
    n_test_windows: int

    @property
    def window(self) -> int:
        return self.config.train.window

    def predict(self, frame: TimeSeriesFrame) -> tuple[np.ndarray, np.ndarray]:
        return predict_series(self, frame)


def _trend_seasonal_at(decomp: Decomposition, trend_len: int, rows) -> np.ndarray:
    """Fitted trend+seasonal inside the training rows, hold-last trend plus
    periodic seasonal beyond them."""
    rows = np.asarray(rows)
    period = decomp.period
    last_cycle = decomp.seasonal[trend_len - period: trend_len]
    inside = rows < trend_len
    out = np.empty(rows.shape, dtype=np.float64)
    out[inside] = decomp.trend[rows[inside]] + decomp.seasonal[rows[inside]]
    beyond = ~inside
    out[beyond] = decomp.trend[trend_len - 1] + last_cycle[(rows[beyond] - trend_len) % period]
    return out


def fit_pipeline(frame: TimeSeriesFrame, config: PipelineConfig
                 ) -> tuple[FittedPipeline, TrainHistory]:
    """Clean, decide the split, fit components on the training rows, train."""
    config.validate()
    window, horizon = config.train.window, config.horizon
    cleaned = clean_frame(frame, config.iqr_k)
    n_windows = cleaned.n_rows - window - horizon + 1
    if n_windows < 2:
        raise InsufficientHistory(
            f"{cleaned.n_rows} rows yield {max(n_windows, 0)} windows; need >= 2")
    n_train, n_test = split_counts(n_windows, config.train_fraction)
    train_rows = n_train + window + horizon - 1

    decompositions = {}
    denoised = np.empty((train_rows, len(cleaned.channels)))
    for c, name in enumerate(cleaned.channels):
        decomp = stl_decompose(cleaned.values[:train_rows, c], config.period)
        decomp.denoised_residual = denoise_residual(decomp.residual, config.cutoff)
        decompositions[name] = decomp
        denoised[:, c] = decomp.denoised_residual

    scaler = ChannelMinMaxScaler().fit(denoised)
    scaled_frame = TimeSeriesFrame(cleaned.timestamps[:train_rows],
                                   list(cleaned.channels), scaler.transform(denoised))
    dataset = make_windows(scaled_frame, window, horizon, config.target_channel)
    assert dataset.samples == n_train
    params, state, history = train(dataset, config.train)

    fitted = FittedPipeline(params=params, adam_state=state, config=config,
                            channels=list(cleaned.channels), scaler=scaler,
                            decompositions=decompositions, train_rows=train_rows,
                            n_train_windows=n_train, n_test_windows=n_test)
    return fitted, history


def extended_residuals(fitted: FittedPipeline, cleaned: TimeSeriesFrame) -> np.ndarray:
    """Per-channel residual series over the whole frame: the fitted residual
    inside the training rows, observation minus extended trend/seasonal
    beyond them."""
    if cleaned.channels != fitted.channels:
        raise ValueError(f"frame channels {cleaned.channels} != fitted {fitted.channels}")
    if cleaned.n_rows < fitted.train_rows:
        raise InsufficientHistory("frame is shorter than the fitted training segment")
    tail = np.arange(fitted.train_rows, cleaned.n_rows)
    residual = np.empty((cleaned.n_rows, len(fitted.channels)))
    for c, name in enumerate(fitted.channels):
        decomp = fitted.decompositions[name]
        residual[:fitted.train_rows, c] = decomp.residual
        residual[tail, c] = cleaned.values[tail, c] - _trend_seasonal_at(
            decomp, fitted.train_rows, tail)
    return residual


def model_window(fitted: FittedPipeline, residual: np.ndarray,
                 index: int) -> np.ndarray:
    """Scaled model input for window `index`: each channel's residual history
    up to the window's end is low-pass filtered causally, then the trailing
    `window` rows are scaled. Nothing after row index+window is touched."""
    window = fitted.window
    end = index + window
    if index < 0 or end > residual.shape[0]:
        raise InsufficientHistory(f"window {index} runs outside the series")
    win = np.empty((window, residual.shape[1]))
    for c in range(residual.shape[1]):
        win[:, c] = denoise_residual(residual[:end, c], fitted.config.cutoff)[-window:]
    return fitted.scaler.transform(win)


def predict_series(fitted: FittedPipeline, frame: TimeSeriesFrame,
                   cleaned: TimeSeriesFrame | None = None
                   ) -> tuple[np.ndarray, np.ndarray]:
    """One recomposed prediction per test window, in original units.

    Returns (predictions, target_rows). The model predicts the scaled
    denoised residual; the output adds back the held trend and the
    periodically extended seasonal component.
    """
    config = fitted.config
    window, horizon = fitted.window, config.horizon
    if cleaned is None:
        cleaned = clean_frame(frame, config.iqr_k)
    n_windows = cleaned.n_rows - window - horizon + 1
    first = fitted.n_train_windows
    if n_windows <= first:
        raise InsufficientHistory("no test windows beyond the training segment")
    residual = extended_residuals(fitted, cleaned)

    target_idx = fitted.channels.index(config.target_channel)
    target_decomp = fitted.decompositions[config.target_channel]
    predictions = np.empty(n_windows - first)
    target_rows = np.empty(n_windows - first, dtype=np.int64)
    for j, i in enumerate(range(first, n_windows)):
        pred_scaled, _ = falnet_forward(fitted.params, model_window(fitted, residual, i),
                                        readout=config.train.readout)
        row = i + window + horizon - 1
        structural = _trend_seasonal_at(target_decomp, fitted.train_rows, [row])[0]
        predictions[j] = fitted.scaler.inverse_transform_column(
            pred_scaled, target_idx) + structural
        target_rows[j] = row
    return predictions, target_rows


def persistence_predictions(cleaned: TimeSeriesFrame, target_rows: np.ndarray,
                            target_channel: str = "PM2.5") -> np.ndarray:
    """Naive baseline: repeat the previous observed value."""
    col = cleaned.column(target_channel)
    rows = np.asarray(target_rows)
    if rows.min() < 1:
        raise ValueError("persistence needs one step of history")
    return col[rows - 1].copy()


def evaluate_pipeline(fitted: FittedPipeline, frame: TimeSeriesFrame,
                      baseline: str | None = None,
                      normalized: bool = False) -> MetricsReport:
    """Score the test split in original units (or scaled model units)."""
    cleaned = clean_frame(frame, fitted.config.iqr_k)
    predictions, target_rows = predict_series(fitted, frame, cleaned=cleaned)
    truth = cleaned.column(fitted.config.target_channel)[target_rows]
    if baseline == "persistence":
        predictions = persistence_predictions(cleaned, target_rows,
                                              fitted.config.target_channel)
    elif baseline is not None:
        raise ValueError(f"unknown baseline {baseline!r}")
    if normalized:
        idx = fitted.channels.index(fitted.config.target_channel)
        truth = fitted.scaler.transform_column(truth, idx)
        predictions = fitted.scaler.transform_column(predictions, idx)
    return evaluate(truth, predictions)
