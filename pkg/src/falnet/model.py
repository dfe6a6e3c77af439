"""Assembled forecaster: stacked LSTM -> gated attention -> linear head,
trained with hand-rolled Adam on mean squared error.

Samples inside a batch are processed one by one and their gradients summed
in sample-index order, which keeps repeated runs bitwise identical.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .attention import AttentionParams, attention_backward, multi_head_forward
from .lstm import LstmLayerParams, glorot_uniform, stack_backward, stack_forward
from .metrics import evaluate
from .preprocessing import WindowedDataset

__all__ = ["FalnetParams", "TrainConfig", "AdamState", "TrainHistory",
           "init_params", "falnet_forward", "falnet_backward", "loss_and_grads",
           "adam_step", "train", "predict_batch"]

READOUTS = ("last", "mean")


@dataclass
class FalnetParams:
    """Every learnable tensor, exposed as an ordered (name, array) list for
    the optimizer, the gradient checks, and the checkpoint writer."""

    lstm_layers: list
    attention: AttentionParams
    head_w: np.ndarray   # [d_model]
    head_b: np.ndarray   # 0-d

    def __post_init__(self):
        self.head_w = np.asarray(self.head_w, dtype=np.float64).reshape(-1)
        self.head_b = np.asarray(self.head_b, dtype=np.float64).reshape(())
        if self.lstm_layers[-1].hidden_dim != self.attention.d_model:
            raise ValueError("LSTM output width != attention d_model")
        if self.head_w.shape[0] != self.attention.d_model:
            raise ValueError("head width != attention d_model")

    @property
    def input_dim(self) -> int:
        return self.lstm_layers[0].input_dim

    @property
    def hidden_dim(self) -> int:
        return self.lstm_layers[-1].hidden_dim

    def named_arrays(self) -> list:
        out = []
        for depth, layer in enumerate(self.lstm_layers):
            out.append((f"lstm{depth}.w", layer.w))
            out.append((f"lstm{depth}.b", layer.b))
        out.append(("attention.w_qkv", self.attention.w_qkv))
        out.append(("attention.w_o", self.attention.w_o))
        out.append(("attention.gamma", self.attention.gamma))
        out.append(("head.w", self.head_w))
        out.append(("head.b", self.head_b))
        return out

    def zero_grads(self) -> dict:
        return {name: np.zeros_like(arr) for name, arr in self.named_arrays()}

    def copy(self) -> "FalnetParams":
        layers = [LstmLayerParams(l.w.copy(), l.b.copy(), l.input_dim, l.hidden_dim)
                  for l in self.lstm_layers]
        att = AttentionParams(self.attention.w_qkv.copy(), self.attention.w_o.copy(),
                              self.attention.gamma.copy(), self.attention.heads)
        return FalnetParams(layers, att, self.head_w.copy(), self.head_b.copy())


def init_params(input_dim: int, hidden: int = 128, layers: int = 2, heads: int = 4,
                seed: int = 0, forget_bias: float = 1.0) -> FalnetParams:
    """Deterministic initialization; the same seed reproduces every byte."""
    if layers < 1:
        raise ValueError("need at least one LSTM layer")
    if heads < 1 or hidden % heads != 0:
        raise ValueError(f"hidden size {hidden} not divisible by heads {heads}")
    rng = np.random.default_rng(seed)
    lstm_layers = []
    width = input_dim
    for _ in range(layers):
        lstm_layers.append(LstmLayerParams.initialize(width, hidden, rng, forget_bias))
        width = hidden
    attention = AttentionParams.initialize(hidden, heads, rng)
    head_w = glorot_uniform(rng, hidden, 1, (hidden,))
    return FalnetParams(lstm_layers, attention, head_w, np.zeros(()))


@dataclass
class _ForwardCache:
    stack: object
    attention: object
    att_out: np.ndarray
    readout: str


def falnet_forward(params: FalnetParams, window: np.ndarray, train_mode: bool = False,
                   rng: np.random.Generator | None = None, dropout_rate: float = 0.0,
                   readout: str = "last") -> tuple[float, _ForwardCache]:
    """One window [T, features] -> scalar next-step prediction."""
    if readout not in READOUTS:
        raise ValueError(f"readout must be one of {READOUTS}")
    hidden_seq, stack_cache = stack_forward(params.lstm_layers, window,
                                            dropout_rate, train_mode, rng)
    att_out, att_cache = multi_head_forward(params.attention, hidden_seq,
                                            dropout_rate, train_mode, rng)
    pooled = att_out[-1] if readout == "last" else att_out.mean(axis=0)
    pred = float(pooled @ params.head_w + params.head_b)
    return pred, _ForwardCache(stack_cache, att_cache, att_out, readout)


def falnet_backward(params: FalnetParams, cache: _ForwardCache,
                    grad_pred: float) -> dict:
    """Gradients of grad_pred * prediction with respect to every parameter."""
    att_out = cache.att_out
    steps = att_out.shape[0]
    pooled = att_out[-1] if cache.readout == "last" else att_out.mean(axis=0)
    grads = {"head.w": grad_pred * pooled,
             "head.b": np.asarray(grad_pred).reshape(())}
    d_att = np.zeros_like(att_out)
    if cache.readout == "last":
        d_att[-1] = grad_pred * params.head_w
    else:
        d_att[:] = (grad_pred / steps) * params.head_w
    att_grads, d_hidden = attention_backward(cache.attention, d_att)
    grads["attention.w_qkv"] = att_grads.dw_qkv
    grads["attention.w_o"] = att_grads.dw_o
    grads["attention.gamma"] = att_grads.dgamma
    layer_grads, _ = stack_backward(cache.stack, d_hidden)
    for depth, lg in enumerate(layer_grads):
        grads[f"lstm{depth}.w"] = lg.dw
        grads[f"lstm{depth}.b"] = lg.db
    return grads


def loss_and_grads(params: FalnetParams, inputs: np.ndarray, targets: np.ndarray,
                   dropout_rate: float = 0.0, train_mode: bool = False,
                   rng: np.random.Generator | None = None,
                   readout: str = "last") -> tuple[float, dict]:
    """Mean squared error over the batch plus exact gradients, accumulated
    sample by sample in index order."""
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if inputs.ndim != 3 or inputs.shape[0] != targets.shape[0]:
        raise ValueError(f"batch shapes disagree: {inputs.shape} vs {targets.shape}")
    batch = inputs.shape[0]
    if batch == 0:
        raise ValueError("empty batch")
    total = params.zero_grads()
    loss = 0.0
    for idx in range(batch):
        pred, cache = falnet_forward(params, inputs[idx], train_mode, rng,
                                     dropout_rate, readout)
        err = pred - targets[idx]
        loss += err * err
        sample = falnet_backward(params, cache, 2.0 * err / batch)
        for name in total:
            total[name] += sample[name]
    return loss / batch, total


def predict_batch(params: FalnetParams, inputs: np.ndarray,
                  readout: str = "last") -> np.ndarray:
    inputs = np.asarray(inputs, dtype=np.float64)
    return np.array([falnet_forward(params, inputs[i], readout=readout)[0]
                     for i in range(inputs.shape[0])])


@dataclass
class TrainConfig:
    """Training defaults: lr 1e-4, batch 32, 200 epochs, dropout 0.2,
    window 10, Adam(0.9, 0.999, 1e-8), two 128-unit layers, 4 heads."""

    learning_rate: float = 1e-4
    batch_size: int = 32
    epochs: int = 200
    dropout: float = 0.2
    window: int = 10
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    hidden_units: int = 128
    lstm_layers: int = 2
    attention_heads: int = 4
    readout: str = "last"
    forget_bias: float = 1.0
    clip_norm: float | None = None
    validation_fraction: float = 0.1

    def validate(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("learning_rate, batch_size, epochs must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must lie in [0, 1), got {self.dropout}")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in [0, 1)")
        if self.readout not in READOUTS:
            raise ValueError(f"readout must be one of {READOUTS}")
        if self.hidden_units % self.attention_heads != 0:
            raise ValueError("hidden_units must be divisible by attention_heads")
        return self


@dataclass
class AdamState:
    """First/second moments per named parameter plus the step counter."""

    m: dict
    v: dict
    t: int = 0

    @classmethod
    def for_params(cls, params: FalnetParams) -> "AdamState":
        return cls(m={n: np.zeros_like(a) for n, a in params.named_arrays()},
                   v={n: np.zeros_like(a) for n, a in params.named_arrays()})


def adam_step(params: FalnetParams, grads: dict, state: AdamState,
              config: TrainConfig) -> tuple[FalnetParams, AdamState]:
    """In-place Adam update; returns the same objects for chaining."""
    state.t += 1
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_eps
    corr1 = 1.0 - b1 ** state.t
    corr2 = 1.0 - b2 ** state.t
    for name, arr in params.named_arrays():
        g = grads[name]
        state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        state.v[name] = b2 * state.v[name] + (1.0 - b2) * (g * g)
        m_hat = state.m[name] / corr1
        v_hat = state.v[name] / corr2
        arr[...] = arr - config.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
    return params, state


def clip_gradients(grads: dict, max_norm: float) -> dict:
    total = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if total > max_norm:
        factor = max_norm / total
        for name in grads:
            grads[name] = grads[name] * factor
    return grads


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_reports: list = field(default_factory=list)  # MetricsReport or None
    wall_seconds: list = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["epoch,train_loss,val_mae,val_rmse,val_r2"]
        for epoch, loss in enumerate(self.train_loss):
            report = self.val_reports[epoch]
            if report is None:
                lines.append(f"{epoch},{loss:.10g},nan,nan,nan")
            else:
                r2 = "nan" if report.r2 is None else f"{report.r2:.10g}"
                lines.append(f"{epoch},{loss:.10g},{report.mae:.10g},"
                             f"{report.rmse:.10g},{r2}")
        return "\n".join(lines) + "\n"


def train(dataset: WindowedDataset, config: TrainConfig,
          params: FalnetParams | None = None
          ) -> tuple[FalnetParams, AdamState, TrainHistory]:
    """Adam over shuffled mini-batches; the rng is re-seeded as seed+epoch,
    the trailing validation_fraction of samples is held out of the gradient
    updates and scored (in model units) after every epoch."""
    config.validate()
    if dataset.samples == 0:
        raise ValueError("empty dataset")
    n_val = int(dataset.samples * config.validation_fraction)
    n_fit = dataset.samples - n_val
    if n_fit < 1:
        raise ValueError("validation holdout leaves no training samples")
    features = dataset.inputs.shape[2]
    if params is None:
        params = init_params(features, config.hidden_units, config.lstm_layers,
                             config.attention_heads, config.seed, config.forget_bias)
    state = AdamState.for_params(params)
    history = TrainHistory()
    for epoch in range(config.epochs):
        started = time.perf_counter()
        rng = np.random.default_rng(config.seed + epoch)
        order = rng.permutation(n_fit)
        epoch_loss = 0.0
        for start in range(0, n_fit, config.batch_size):
            batch = order[start:start + config.batch_size]
            loss, grads = loss_and_grads(params, dataset.inputs[batch],
                                         dataset.targets[batch], config.dropout,
                                         True, rng, config.readout)
            if config.clip_norm is not None:
                clip_gradients(grads, config.clip_norm)
            adam_step(params, grads, state, config)
            epoch_loss += loss * len(batch)
        history.train_loss.append(epoch_loss / n_fit)
        if n_val > 0:
            preds = predict_batch(params, dataset.inputs[n_fit:], config.readout)
            history.val_reports.append(evaluate(dataset.targets[n_fit:], preds))
        else:
            history.val_reports.append(None)
        history.wall_seconds.append(time.perf_counter() - started)
    return params, state, history
