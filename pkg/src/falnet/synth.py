"""Synthetic hourly pollutant generator used in place of a real archive.

The target channel is built from a smoothed random-walk trend, a diurnal
sinusoid, and an AR(1) disturbance; the other five channels are lagged and
rescaled copies with their own noise so the model has cross-channel signal
to exploit. A fraction of cells is blanked and another fraction multiplied
tenfold to exercise the cleaning stage.
"""

from __future__ import annotations

import numpy as np

from .frame import DEFAULT_CHANNELS, TimeSeriesFrame

__all__ = ["synth_generate"]

_EPOCH_START_HOUR = 438_288  # 2020-01-01T00:00 UTC


def _ar1(rng: np.random.Generator, n: int, phi: float, sigma: float) -> np.ndarray:
    shocks = rng.normal(0.0, sigma, n)
    out = np.empty(n)
    acc = 0.0
    for t in range(n):
        acc = phi * acc + shocks[t]
        out[t] = acc
    return out


def _smooth(x: np.ndarray, width: int) -> np.ndarray:
    kernel = np.ones(width) / width
    padded = np.concatenate([np.full(width // 2, x[0]), x, np.full(width - 1 - width // 2, x[-1])])
    return np.convolve(padded, kernel, mode="valid")


def synth_generate(n: int, seed: int, base_level: float = 19.0,
                   diurnal_amplitude: float = 16.0, trend_step_sigma: float = 0.05,
                   ar_phi: float = 0.7, ar_sigma: float = 1.0,
                   blank_fraction: float = 0.02, outlier_fraction: float = 0.005,
                   spike_count: int = 0) -> TimeSeriesFrame:
    """Deterministic frame of the six default channels; n >= 48 rows."""
    if n < 48:
        raise ValueError(f"need at least 48 rows, got {n}")
    rng = np.random.default_rng(seed)
    t = np.arange(n)

    trend = _smooth(np.cumsum(rng.normal(0.0, trend_step_sigma, n)), 25)
    phase = rng.uniform(0.0, 24.0)
    diurnal = diurnal_amplitude * np.sin(2.0 * np.pi * (t + phase) / 24.0)
    disturbance = _ar1(rng, n, ar_phi, ar_sigma)
    pm25 = np.maximum(base_level + trend + diurnal + disturbance, 0.0)

    if spike_count > 0:
        # short pollution episodes: a few hours of strongly elevated levels
        for _ in range(spike_count):
            at = int(rng.integers(0, n - 6))
            width = int(rng.integers(3, 7))
            pm25[at:at + width] += rng.uniform(2.0, 4.0) * diurnal_amplitude

    lag1 = np.concatenate([pm25[:1], pm25[:-1]])
    lag2 = np.concatenate([pm25[:2], pm25[:-2]])
    values = np.empty((n, 6))
    values[:, 0] = pm25
    values[:, 1] = 1.4 * lag1 + 6.0 + rng.normal(0.0, 2.0, n)       # PM10
    values[:, 2] = 0.5 * lag2 + 3.0 + rng.normal(0.0, 1.5, n)       # SO2
    values[:, 3] = 0.8 * lag1 + 10.0 + rng.normal(0.0, 2.0, n)      # NO2
    values[:, 4] = 0.03 * pm25 + 0.4 + rng.normal(0.0, 0.05, n)     # CO
    values[:, 5] = np.maximum(30.0 - 0.5 * lag1 + rng.normal(0.0, 3.0, n), 0.0)  # O3

    outlier_mask = rng.random(values.shape) < outlier_fraction
    values[outlier_mask] *= 10.0
    blank_mask = rng.random(values.shape) < blank_fraction
    values[blank_mask] = np.nan

    timestamps = _EPOCH_START_HOUR + t.astype(np.int64)
    return TimeSeriesFrame(timestamps, list(DEFAULT_CHANNELS), values)
