"""Dense float64 matrix helpers shared by every learnable layer.

All heavy lifting is delegated to numpy; this module fixes the conventions
(64-bit, row-major, finiteness checks) and provides the finite-difference
gradient oracle that the analytic backward passes are tested against.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


def as_matrix(values, name: str = "matrix", checked: bool = True) -> np.ndarray:
    """Coerce to a 2-D row-major float64 array.

    In checked mode, NaN/Inf entries are rejected.
    """
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if checked and not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    return np.ascontiguousarray(a)


def matmul_affine(x: np.ndarray, w: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """out = x @ w (+ b broadcast over rows)."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if x.ndim != 2 or w.ndim != 2:
        raise ValueError(f"matmul_affine expects 2-D operands, got {x.shape} and {w.shape}")
    if x.shape[1] != w.shape[0]:
        raise ValueError(f"inner dimensions disagree: {x.shape} @ {w.shape}")
    out = x @ w
    if b is not None:
        b = np.asarray(b, dtype=np.float64).reshape(-1)
        if b.shape[0] != w.shape[1]:
            raise ValueError(f"bias length {b.shape[0]} != output width {w.shape[1]}")
        out = out + b
    return out


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Elementwise logistic function, correct for any finite input.

    exp may overflow to inf for very negative x; the final division then
    yields exactly 0.0, so the overflow warning is suppressed rather than
    worked around with a slower two-branch formula.
    """
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def tanh(x: np.ndarray) -> np.ndarray:
    """Elementwise hyperbolic tangent."""
    return np.tanh(np.asarray(x, dtype=np.float64))


def softmax_rows(x: np.ndarray) -> np.ndarray:
    """Softmax over the last axis, with max-subtraction for stability."""
    x = np.asarray(x, dtype=np.float64)
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def finite_diff_grad(f: Callable[[np.ndarray], float], x: np.ndarray,
                     eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function, entry by entry."""
    x = np.asarray(x, dtype=np.float64)
    work = x.copy()
    grad = np.zeros_like(work)
    flat = work.reshape(-1)
    gflat = grad.reshape(-1)
    for idx in range(flat.size):
        orig = flat[idx]
        flat[idx] = orig + eps
        f_plus = f(work)
        flat[idx] = orig - eps
        f_minus = f(work)
        flat[idx] = orig
        gflat[idx] = (f_plus - f_minus) / (2.0 * eps)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max_i |a_i - n_i| / max(1e-6, |a_i|, |n_i|), the gradient-check metric.

    The 1e-6 floor keeps near-zero gradient entries from amplifying central
    difference round-off; below the floor the comparison is effectively
    absolute at 1e-10 for the usual 1e-4 tolerance.
    """
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    n = np.asarray(numeric, dtype=np.float64).reshape(-1)
    if a.shape != n.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {n.shape}")
    denom = np.maximum(1e-6, np.maximum(np.abs(a), np.abs(n)))
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - n) / denom))
