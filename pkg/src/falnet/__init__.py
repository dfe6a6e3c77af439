"""Frequency-aware LSTM forecasting for hourly air-quality series.

Pipeline: seasonal-trend decomposition via LOESS, low-pass FFT denoising of
the residual, a stacked LSTM encoder, multi-head attention with a learnable
residual gate, and Adam-trained one-step-ahead prediction, all in plain
float64 numpy with hand-derived gradients.
"""

from .attention import AttentionParams, multi_head_forward, scaled_dot_attention
from .decomposition import Decomposition, loess_smooth, stl_decompose
from .forecaster import FalnetForecaster
from .frame import DEFAULT_CHANNELS, TimeSeriesFrame, parse_csv, render_csv
from .lstm import LstmLayerParams, LstmState, lstm_cell_forward, stack_forward
from .metrics import MetricsReport, evaluate
from .model import (AdamState, FalnetParams, TrainConfig, TrainHistory, adam_step,
                    falnet_forward, init_params, loss_and_grads, train)
from .pipeline import (FittedPipeline, PipelineConfig, clean_frame, fit_pipeline,
                       persistence_predictions, predict_series)
from .preprocessing import (ChannelMinMaxScaler, WindowedDataset, chrono_split,
                            interpolate_missing, iqr_filter, make_windows)
from .spectral import Spectrum, denoise_residual, fft_forward, fft_inverse
from .synth import synth_generate

__version__ = "0.1.0"

__all__ = [
    "AttentionParams", "multi_head_forward", "scaled_dot_attention",
    "Decomposition", "loess_smooth", "stl_decompose",
    "FalnetForecaster",
    "DEFAULT_CHANNELS", "TimeSeriesFrame", "parse_csv", "render_csv",
    "LstmLayerParams", "LstmState", "lstm_cell_forward", "stack_forward",
    "MetricsReport", "evaluate",
    "AdamState", "FalnetParams", "TrainConfig", "TrainHistory", "adam_step",
    "falnet_forward", "init_params", "loss_and_grads", "train",
    "FittedPipeline", "PipelineConfig", "clean_frame", "fit_pipeline",
    "persistence_predictions", "predict_series",
    "ChannelMinMaxScaler", "WindowedDataset", "chrono_split",
    "interpolate_missing", "iqr_filter", "make_windows",
    "Spectrum", "denoise_residual", "fft_forward", "fft_inverse",
    "synth_generate",
    "__version__",
]
