"""Stacked LSTM: gated forward pass and full backpropagation through time.

Gate weights live in one fused block per layer, column order f | i | o | c,
so a step costs a single affine map; the per-gate matrices the equations
name are exposed as views into that block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import sigmoid

__all__ = ["LstmLayerParams", "LstmState", "lstm_cell_forward",
           "stack_forward", "stack_backward", "glorot_uniform"]


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int,
                   shape: tuple) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass
class LstmLayerParams:
    """One layer's weights over the concatenated [h_prev, x_t] input."""

    w: np.ndarray  # [(input+hidden) x 4*hidden], gate blocks f|i|o|c
    b: np.ndarray  # [4*hidden]
    input_dim: int
    hidden_dim: int

    def __post_init__(self):
        expect = (self.input_dim + self.hidden_dim, 4 * self.hidden_dim)
        if self.w.shape != expect:
            raise ValueError(f"weight shape {self.w.shape} != {expect}")
        if self.b.shape != (4 * self.hidden_dim,):
            raise ValueError(f"bias shape {self.b.shape} != ({4 * self.hidden_dim},)")
        if not (np.isfinite(self.w).all() and np.isfinite(self.b).all()):
            raise ValueError("non-finite LSTM parameters")

    def _gate(self, which: int) -> slice:
        h = self.hidden_dim
        return slice(which * h, (which + 1) * h)

    # per-gate views in the order the equations name them
    @property
    def w_f(self) -> np.ndarray: return self.w[:, self._gate(0)]
    @property
    def w_i(self) -> np.ndarray: return self.w[:, self._gate(1)]
    @property
    def w_o(self) -> np.ndarray: return self.w[:, self._gate(2)]
    @property
    def w_c(self) -> np.ndarray: return self.w[:, self._gate(3)]
    @property
    def b_f(self) -> np.ndarray: return self.b[self._gate(0)]
    @property
    def b_i(self) -> np.ndarray: return self.b[self._gate(1)]
    @property
    def b_o(self) -> np.ndarray: return self.b[self._gate(2)]
    @property
    def b_c(self) -> np.ndarray: return self.b[self._gate(3)]

    @classmethod
    def initialize(cls, input_dim: int, hidden_dim: int, rng: np.random.Generator,
                   forget_bias: float = 1.0) -> "LstmLayerParams":
        """Glorot-uniform per gate matrix; forget bias starts at forget_bias,
        the other biases at zero."""
        rows = input_dim + hidden_dim
        w = np.zeros((rows, 4 * hidden_dim))
        b = np.zeros(4 * hidden_dim)
        layer = cls(w, b, input_dim, hidden_dim)
        # draw in equation order f, i, c, o for a stable stream layout
        for name in ("w_f", "w_i", "w_c", "w_o"):
            getattr(layer, name)[...] = glorot_uniform(rng, rows, hidden_dim,
                                                       (rows, hidden_dim))
        layer.b_f[...] = forget_bias
        return layer


@dataclass
class LstmState:
    """Hidden and cell vectors; every |h_j| < 1 by construction."""

    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden_dim: int) -> "LstmState":
        return cls(np.zeros(hidden_dim), np.zeros(hidden_dim))


@dataclass
class _CellCache:
    z: np.ndarray        # [input+hidden] concatenated step input
    f: np.ndarray
    i: np.ndarray
    o: np.ndarray
    g: np.ndarray        # candidate tanh activations
    c_prev: np.ndarray
    tanh_c: np.ndarray


def lstm_cell_forward(params: LstmLayerParams, x_t: np.ndarray,
                      prev: LstmState) -> tuple[LstmState, _CellCache]:
    """One gated step:
    f = sig(Wf.[h,x]+bf), i = sig(Wi.[h,x]+bi), c~ = tanh(Wc.[h,x]+bc),
    C = f*C_prev + i*c~, o = sig(Wo.[h,x]+bo), h = o*tanh(C).
    """
    x_t = np.asarray(x_t, dtype=np.float64).reshape(-1)
    if x_t.shape[0] != params.input_dim:
        raise ValueError(f"input width {x_t.shape[0]} != {params.input_dim}")
    if prev.h.shape[0] != params.hidden_dim:
        raise ValueError(f"state width {prev.h.shape[0]} != {params.hidden_dim}")
    hd = params.hidden_dim
    z = np.concatenate([prev.h, x_t])
    a = z @ params.w + params.b
    sig = sigmoid(a[: 3 * hd])
    f, i, o = sig[:hd], sig[hd: 2 * hd], sig[2 * hd:]
    g = np.tanh(a[3 * hd:])
    c = f * prev.c + i * g
    tanh_c = np.tanh(c)
    h = o * tanh_c
    return LstmState(h, c), _CellCache(z, f, i, o, g, prev.c, tanh_c)


@dataclass
class _LayerCache:
    params: LstmLayerParams
    steps: list
    dropout_mult: np.ndarray | None  # applied to this layer's OUTPUT sequence


@dataclass
class StackCache:
    layers: list
    hidden_seq: np.ndarray


@dataclass
class LstmLayerGrads:
    dw: np.ndarray
    db: np.ndarray


def stack_forward(layers: list, sequence: np.ndarray, dropout_rate: float = 0.0,
                  train_mode: bool = False, rng: np.random.Generator | None = None
                  ) -> tuple[np.ndarray, StackCache]:
    """Run the stack over one [T, input] sequence.

    Inverted dropout is applied to inter-layer activations only (never after
    the last layer), only in train mode, with masks drawn from rng so eval
    mode consumes no randomness.
    """
    seq = np.asarray(sequence, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[0] == 0:
        raise ValueError("sequence must be a non-empty [T, input] matrix")
    if not layers:
        raise ValueError("need at least one LSTM layer")
    steps = seq.shape[0]
    caches = []
    current = seq
    for depth, params in enumerate(layers):
        if current.shape[1] != params.input_dim:
            raise ValueError(
                f"layer {depth} expects width {params.input_dim}, got {current.shape[1]}")
        state = LstmState.zeros(params.hidden_dim)
        step_caches = []
        hidden = np.empty((steps, params.hidden_dim))
        for t in range(steps):
            state, cache = lstm_cell_forward(params, current[t], state)
            hidden[t] = state.h
            step_caches.append(cache)
        mult = None
        if train_mode and dropout_rate > 0.0 and depth < len(layers) - 1:
            if rng is None:
                raise ValueError("train-mode dropout needs an rng")
            keep = rng.random(hidden.shape) >= dropout_rate
            mult = keep / (1.0 - dropout_rate)
            current = hidden * mult
        else:
            current = hidden
        caches.append(_LayerCache(params, step_caches, mult))
    return current, StackCache(caches, current)


def stack_backward(cache: StackCache, grad_hidden_seq: np.ndarray
                   ) -> tuple[list, np.ndarray]:
    """Exact reverse of stack_forward; returns per-layer grads and the
    gradient with respect to the input sequence."""
    grad = np.asarray(grad_hidden_seq, dtype=np.float64)
    if grad.shape != cache.hidden_seq.shape:
        raise ValueError(f"grad shape {grad.shape} != {cache.hidden_seq.shape}")
    layer_grads: list = [None] * len(cache.layers)
    for depth in range(len(cache.layers) - 1, -1, -1):
        layer = cache.layers[depth]
        if layer.dropout_mult is not None:
            grad = grad * layer.dropout_mult
        params = layer.params
        hd = params.hidden_dim
        steps = len(layer.steps)
        dw = np.zeros_like(params.w)
        db = np.zeros_like(params.b)
        dx_seq = np.empty((steps, params.input_dim))
        dh_next = np.zeros(hd)
        dc_next = np.zeros(hd)
        da = np.empty(4 * hd)
        for t in range(steps - 1, -1, -1):
            step = layer.steps[t]
            dh = grad[t] + dh_next
            do = dh * step.tanh_c
            dc = dc_next + dh * step.o * (1.0 - step.tanh_c ** 2)
            da[:hd] = (dc * step.c_prev) * step.f * (1.0 - step.f)          # forget
            da[hd: 2 * hd] = (dc * step.g) * step.i * (1.0 - step.i)        # input
            da[2 * hd: 3 * hd] = do * step.o * (1.0 - step.o)               # output
            da[3 * hd:] = (dc * step.i) * (1.0 - step.g ** 2)               # candidate
            dw += np.outer(step.z, da)
            db += da
            dz = params.w @ da
            dh_next = dz[:hd]
            dx_seq[t] = dz[hd:]
            dc_next = dc * step.f
        layer_grads[depth] = LstmLayerGrads(dw, db)
        grad = dx_seq
    return layer_grads, grad
