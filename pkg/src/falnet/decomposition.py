"""Seasonal-trend decomposition via locally weighted regression.

A deliberately simple, deterministic STL variant: periodic-subseries LOESS
for the seasonal part, a LOESS pass over the deseasonalized series for the
trend, two inner iterations, no robustness loop. The residual is defined by
subtraction, so trend + seasonal + residual reconstructs the input exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import WindowTooSmall

__all__ = ["Decomposition", "loess_smooth", "stl_decompose"]


@dataclass
class Decomposition:
    """Additive components of one series: y = trend + seasonal + residual."""

    trend: np.ndarray
    seasonal: np.ndarray
    residual: np.ndarray
    period: int
    denoised_residual: np.ndarray | None = field(default=None)

    def reconstruct(self) -> np.ndarray:
        return self.trend + self.seasonal + self.residual


def _loess_fit_point(x: np.ndarray, y: np.ndarray, center: float, bandwidth: float) -> float:
    """Weighted degree-1 fit around `center`, evaluated at `center`."""
    d = np.abs(x - center)
    w = np.clip(1.0 - (d / bandwidth) ** 3, 0.0, None) ** 3
    sw = w.sum()
    xc = x - center
    swx = (w * xc).sum()
    swxx = (w * xc * xc).sum()
    swy = (w * y).sum()
    swxy = (w * xc * y).sum()
    det = sw * swxx - swx * swx
    if det <= 1e-12 * max(sw * swxx, 1e-300):
        # all weight on one abscissa: fall back to the weighted mean
        return float(swy / sw)
    return float((swxx * swy - swx * swxy) / det)


def loess_smooth(series: np.ndarray, span: float, degree: int = 1) -> np.ndarray:
    """LOESS with tricube weights over the span-nearest neighbors.

    span is the fraction of points in each local fit; k = ceil(span * n)
    points receive positive weight. The tricube bandwidth is the distance to
    the (k+1)-th nearest neighbor (capped at the series extent), so every
    selected neighbor actually contributes to the local line.
    """
    if degree != 1:
        raise ValueError("only degree-1 (local linear) LOESS is supported")
    y = np.asarray(series, dtype=np.float64)
    if y.ndim != 1 or len(y) < 3:
        raise ValueError("loess_smooth needs a 1-D series of length >= 3")
    if not 0.0 < span <= 1.0:
        raise ValueError(f"span must lie in (0, 1], got {span}")
    n = len(y)
    k = math.ceil(span * n)
    if k < degree + 2:
        raise WindowTooSmall(f"span {span} selects {k} points; need >= {degree + 2}")
    x = np.arange(n, dtype=np.float64)
    out = np.empty(n)
    for i in range(n):
        d = np.abs(x - x[i])
        order = np.argsort(d, kind="stable")
        # bandwidth just past the k-th neighbor keeps all k weights positive
        cut = order[k] if k < n else order[-1]
        bandwidth = d[cut] if k < n else d[cut] * (1.0 + 1e-9)
        if bandwidth <= 0.0:
            bandwidth = 1.0
        sel = order[: min(k + 1, n)]
        out[i] = _loess_fit_point(x[sel], y[sel], x[i], bandwidth)
    return out


def _smooth_subseries(sub: np.ndarray, span: float) -> np.ndarray:
    # subseries at the minimum stl length can have < degree+2 points;
    # a constant (mean) fit is the only estimate available there
    if len(sub) < 3 or math.ceil(span * len(sub)) < 3:
        return np.full(len(sub), float(np.mean(sub)))
    return loess_smooth(sub, span)


def stl_decompose(series: np.ndarray, period: int, seasonal_span: float = 0.75,
                  trend_span: float | None = None, inner_iterations: int = 2) -> Decomposition:
    """Split a series into trend, seasonal, and residual parts.

    Seasonal: each cycle position's subseries is LOESS-smoothed across
    cycles, then the grand mean of the position means is subtracted so the
    seasonal level lands in the trend. Trend: LOESS of the deseasonalized
    series with span 1.5*period/n unless overridden. Residual: what is left.
    """
    y = np.asarray(series, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError("stl_decompose expects a 1-D series")
    if period < 2:
        raise ValueError(f"period must be >= 2, got {period}")
    n = len(y)
    if n < 2 * period:
        raise ValueError(f"series length {n} shorter than two periods ({2 * period})")
    if not np.isfinite(y).all():
        raise ValueError("stl_decompose input contains missing or non-finite values")
    if trend_span is None:
        trend_span = min(1.0, (1.5 * period) / n)

    trend = np.zeros(n)
    seasonal = np.zeros(n)
    for _ in range(inner_iterations):
        detrended = y - trend
        for pos in range(period):
            seasonal[pos::period] = _smooth_subseries(detrended[pos::period], seasonal_span)
        position_means = np.array([seasonal[pos::period].mean() for pos in range(period)])
        seasonal -= position_means.mean()
        trend = loess_smooth(y - seasonal, trend_span)
    residual = y - trend - seasonal
    return Decomposition(trend=trend, seasonal=seasonal, residual=residual, period=period)
