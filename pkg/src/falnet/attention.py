"""Multi-head scaled dot-product attention with a learnable residual gate.

out = gamma * MultiHead(XWq, XWk, XWv) + X. Heads are contiguous column
slices of the full projections, computed batched over the head axis; gamma
starts at zero so a fresh module is the identity map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lstm import glorot_uniform
from .tensor import softmax_rows

__all__ = ["AttentionParams", "scaled_dot_attention", "multi_head_forward",
           "attention_backward", "AttentionGrads"]


@dataclass
class AttentionParams:
    w_qkv: np.ndarray   # [d_model, 3*d_model], column blocks Q | K | V
    w_o: np.ndarray     # [d_model, d_model]
    gamma: np.ndarray   # 0-d learnable residual scale
    heads: int

    def __post_init__(self):
        d = self.w_o.shape[0]
        if self.w_o.shape != (d, d) or self.w_qkv.shape != (d, 3 * d):
            raise ValueError(f"bad projection shapes {self.w_qkv.shape}, {self.w_o.shape}")
        if self.heads < 1 or d % self.heads != 0:
            raise ValueError(f"d_model {d} not divisible by heads {self.heads}")
        self.gamma = np.asarray(self.gamma, dtype=np.float64).reshape(())
        if not (np.isfinite(self.w_qkv).all() and np.isfinite(self.w_o).all()
                and np.isfinite(self.gamma)):
            raise ValueError("non-finite attention parameters")

    @property
    def d_model(self) -> int:
        return self.w_o.shape[0]

    @property
    def d_k(self) -> int:
        return self.d_model // self.heads

    @property
    def w_q(self) -> np.ndarray: return self.w_qkv[:, : self.d_model]
    @property
    def w_k(self) -> np.ndarray: return self.w_qkv[:, self.d_model: 2 * self.d_model]
    @property
    def w_v(self) -> np.ndarray: return self.w_qkv[:, 2 * self.d_model:]

    @classmethod
    def initialize(cls, d_model: int, heads: int,
                   rng: np.random.Generator) -> "AttentionParams":
        if heads < 1 or d_model % heads != 0:
            raise ValueError(f"d_model {d_model} not divisible by heads {heads}")
        w_qkv = np.empty((d_model, 3 * d_model))
        for block in range(3):
            w_qkv[:, block * d_model:(block + 1) * d_model] = glorot_uniform(
                rng, d_model, d_model, (d_model, d_model))
        w_o = glorot_uniform(rng, d_model, d_model, (d_model, d_model))
        return cls(w_qkv, w_o, np.zeros(()), heads)


def scaled_dot_attention(q: np.ndarray, k: np.ndarray, v: np.ndarray
                         ) -> tuple[np.ndarray, np.ndarray]:
    """softmax(q k^T / sqrt(d_k)) v for one head; also returns the weights."""
    q, k, v = (np.asarray(m, dtype=np.float64) for m in (q, k, v))
    if q.shape != k.shape or q.shape[0] != v.shape[0]:
        raise ValueError(f"shape mismatch: q {q.shape}, k {k.shape}, v {v.shape}")
    weights = softmax_rows(q @ k.T / np.sqrt(q.shape[1]))
    return weights @ v, weights


@dataclass
class _AttentionCache:
    params: AttentionParams
    x: np.ndarray
    q: np.ndarray          # [heads, T, d_k]
    k: np.ndarray
    v: np.ndarray
    weights: np.ndarray    # [heads, T, T]
    concat: np.ndarray     # [T, d_model] heads re-joined
    multihead: np.ndarray  # [T, d_model] after the output projection
    dropout_mult: np.ndarray | None

    def head_weights_mean(self) -> np.ndarray:
        return self.weights.mean(axis=0)


@dataclass
class AttentionGrads:
    dw_qkv: np.ndarray
    dw_o: np.ndarray
    dgamma: np.ndarray


def _split_heads(m: np.ndarray, heads: int) -> np.ndarray:
    rows, d = m.shape
    return m.reshape(rows, heads, d // heads).transpose(1, 0, 2)


def _join_heads(m: np.ndarray) -> np.ndarray:
    heads, rows, d_k = m.shape
    return m.transpose(1, 0, 2).reshape(rows, heads * d_k)


def multi_head_forward(params: AttentionParams, x: np.ndarray,
                       dropout_rate: float = 0.0, train_mode: bool = False,
                       rng: np.random.Generator | None = None
                       ) -> tuple[np.ndarray, _AttentionCache]:
    """gamma-gated residual attention over a [T, d_model] sequence.

    Train-mode dropout hits the multi-head term before the residual add.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.d_model:
        raise ValueError(f"input shape {x.shape} incompatible with d_model {params.d_model}")
    qkv = x @ params.w_qkv
    d = params.d_model
    q = _split_heads(qkv[:, :d], params.heads)
    k = _split_heads(qkv[:, d: 2 * d], params.heads)
    v = _split_heads(qkv[:, 2 * d:], params.heads)
    weights = softmax_rows(q @ k.transpose(0, 2, 1) / np.sqrt(params.d_k))
    concat = _join_heads(weights @ v)
    multihead = concat @ params.w_o
    mult = None
    dropped = multihead
    if train_mode and dropout_rate > 0.0:
        if rng is None:
            raise ValueError("train-mode dropout needs an rng")
        keep = rng.random(multihead.shape) >= dropout_rate
        mult = keep / (1.0 - dropout_rate)
        dropped = multihead * mult
    out = float(params.gamma) * dropped + x
    return out, _AttentionCache(params, x, q, k, v, weights, concat, multihead, mult)


def attention_backward(cache: _AttentionCache, grad_out: np.ndarray
                       ) -> tuple[AttentionGrads, np.ndarray]:
    """Reverse-mode gradients through the gate, projection, softmax, and
    input projections; grad_x carries both the residual and attention paths."""
    params = cache.params
    g = np.asarray(grad_out, dtype=np.float64)
    if g.shape != cache.x.shape:
        raise ValueError(f"grad shape {g.shape} != {cache.x.shape}")
    dropped = cache.multihead if cache.dropout_mult is None \
        else cache.multihead * cache.dropout_mult
    dgamma = np.asarray((g * dropped).sum()).reshape(())
    d_dropped = float(params.gamma) * g
    d_multihead = d_dropped if cache.dropout_mult is None \
        else d_dropped * cache.dropout_mult
    dw_o = cache.concat.T @ d_multihead
    d_concat = d_multihead @ params.w_o.T
    d_ctx = _split_heads(d_concat, params.heads)
    # softmax backward: dL = W * (dW - sum(dW * W, rows))
    d_weights = d_ctx @ cache.v.transpose(0, 2, 1)
    dv = cache.weights.transpose(0, 2, 1) @ d_ctx
    inner = (d_weights * cache.weights).sum(axis=-1, keepdims=True)
    d_logits = cache.weights * (d_weights - inner)
    scale = 1.0 / np.sqrt(params.d_k)
    dq = d_logits @ cache.k * scale
    dk = d_logits.transpose(0, 2, 1) @ cache.q * scale
    d_qkv = np.hstack([_join_heads(dq), _join_heads(dk), _join_heads(dv)])
    dw_qkv = cache.x.T @ d_qkv
    grad_x = g + d_qkv @ params.w_qkv.T
    return AttentionGrads(dw_qkv, dw_o, dgamma), grad_x
