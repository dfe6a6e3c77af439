"""Regression metrics on prediction runs.

MSE is the single source of truth; RMSE is derived as its square root.
R-squared is undefined for a constant ground truth and is reported as None
rather than raising, so callers can still read the error metrics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["MetricsReport", "evaluate"]


@dataclass
class MetricsReport:
    mae: float
    mse: float
    rmse: float
    r2: float | None

    def to_json(self) -> str:
        """Four-key JSON object with 6 fixed decimal places."""
        r2 = "null" if self.r2 is None else f"{self.r2:.6f}"
        return ('{"mae": %.6f, "mse": %.6f, "rmse": %.6f, "r2": %s}'
                % (self.mae, self.mse, self.rmse, r2))


def evaluate(y: np.ndarray, y_hat: np.ndarray) -> MetricsReport:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    y_hat = np.asarray(y_hat, dtype=np.float64).reshape(-1)
    if len(y) == 0:
        raise ValueError("cannot evaluate an empty prediction run")
    if y.shape != y_hat.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {y_hat.shape}")
    err = y - y_hat
    mae = float(np.mean(np.abs(err)))
    mse = float(np.mean(err * err))
    rmse = float(np.sqrt(mse))
    centered = y - y.mean()
    ss_tot = float(np.sum(centered * centered))
    r2 = None if ss_tot == 0.0 else 1.0 - float(np.sum(err * err)) / ss_tot
    return MetricsReport(mae=mae, mse=mse, rmse=rmse, r2=r2)
