"""Scikit-learn estimator facade over the window-level model.

X is the 3-D window tensor [samples, window, features] a WindowedDataset
carries; y is the scalar next-step target per window. get_params/set_params
come from BaseEstimator, so the forecaster clones and grid-searches like any
other regressor.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .model import TrainConfig, predict_batch, train
from .preprocessing import WindowedDataset

__all__ = ["FalnetForecaster"]


def _validate_windows(X, expected_features=None, expected_window=None):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3 or X.shape[0] == 0:
        raise ValueError(f"X must be [samples, window, features], got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError("X contains NaN or Inf")
    if expected_window is not None and X.shape[1] != expected_window:
        raise ValueError(f"window length {X.shape[1]} != fitted {expected_window}")
    if expected_features is not None and X.shape[2] != expected_features:
        raise ValueError(f"feature count {X.shape[2]} != fitted {expected_features}")
    return X


class FalnetForecaster(RegressorMixin, BaseEstimator):
    """One-step-ahead regressor over sliding windows."""

    def __init__(self, hidden_units=128, lstm_layers=2, attention_heads=4,
                 dropout=0.2, learning_rate=1e-4, batch_size=32, epochs=200,
                 readout="last", forget_bias=1.0, clip_norm=None,
                 validation_fraction=0.1, seed=0):
        self.hidden_units = hidden_units
        self.lstm_layers = lstm_layers
        self.attention_heads = attention_heads
        self.dropout = dropout
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.readout = readout
        self.forget_bias = forget_bias
        self.clip_norm = clip_norm
        self.validation_fraction = validation_fraction
        self.seed = seed

    def _config(self, window: int) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate, batch_size=self.batch_size,
            epochs=self.epochs, dropout=self.dropout, window=window,
            seed=self.seed, hidden_units=self.hidden_units,
            lstm_layers=self.lstm_layers, attention_heads=self.attention_heads,
            readout=self.readout, forget_bias=self.forget_bias,
            clip_norm=self.clip_norm, validation_fraction=self.validation_fraction,
        ).validate()

    def fit(self, X, y):
        X = _validate_windows(X)
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"{X.shape[0]} windows but {y.shape[0]} targets")
        dataset = WindowedDataset(X, y, X.shape[1], 1, "target")
        config = self._config(X.shape[1])
        self.params_, self.adam_state_, self.history_ = train(dataset, config)
        self.window_ = X.shape[1]
        self.n_features_in_ = X.shape[2]
        return self

    def predict(self, X):
        if not hasattr(self, "params_"):
            raise NotFittedError("fit the forecaster before predicting")
        X = _validate_windows(X, self.n_features_in_, self.window_)
        return predict_batch(self.params_, X, self.readout)
