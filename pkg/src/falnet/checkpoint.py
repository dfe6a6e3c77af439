"""Self-describing binary container for a full training session.

Layout: 6-byte magic "FALNET", uint16 LE format version, uint64 LE header
length, a sorted-keys JSON header, then raw little-endian float64 blocks in
the order the header's manifest lists them. Writing the same fitted
pipeline twice produces identical bytes, which the determinism checks rely
on.
"""

from __future__ import annotations

import dataclasses
import json
import struct

import numpy as np

from .attention import AttentionParams
from .decomposition import Decomposition
from .exceptions import CheckpointError
from .lstm import LstmLayerParams
from .model import AdamState, FalnetParams, TrainConfig
from .pipeline import FittedPipeline, PipelineConfig
from .preprocessing import ChannelMinMaxScaler

__all__ = ["save_checkpoint", "load_checkpoint", "MAGIC", "FORMAT_VERSION"]

MAGIC = b"FALNET"
FORMAT_VERSION = 1

_DECOMP_FIELDS = ("trend", "seasonal", "residual", "denoised_residual")


def _config_dict(config: PipelineConfig) -> dict:
    out = dataclasses.asdict(config)
    out["train"] = dataclasses.asdict(config.train)
    return out


def _config_from_dict(data: dict) -> PipelineConfig:
    train = TrainConfig(**data["train"])
    rest = {k: v for k, v in data.items() if k != "train"}
    return PipelineConfig(train=train, **rest)


def save_checkpoint(fitted: FittedPipeline, path: str) -> None:
    blocks = []

    def add(name, array, kind):
        # ascontiguousarray would promote 0-d scalars to 1-d; tobytes below
        # already emits C order for any layout
        arr = np.asarray(array, dtype=np.float64)
        blocks.append((name, kind, arr))
        return {"name": name, "kind": kind, "shape": list(arr.shape)}

    manifest = []
    for name, arr in fitted.params.named_arrays():
        manifest.append(add(name, arr, "param"))
    for name, _ in fitted.params.named_arrays():
        manifest.append(add(name, fitted.adam_state.m[name], "adam_m"))
    for name, _ in fitted.params.named_arrays():
        manifest.append(add(name, fitted.adam_state.v[name], "adam_v"))
    for channel in fitted.channels:
        decomp = fitted.decompositions[channel]
        for field in _DECOMP_FIELDS:
            manifest.append(add(f"decomp.{channel}.{field}", getattr(decomp, field), "aux"))

    header = {
        "format_version": FORMAT_VERSION,
        "config": _config_dict(fitted.config),
        "channels": list(fitted.channels),
        "train_rows": fitted.train_rows,
        "n_train_windows": fitted.n_train_windows,
        "n_test_windows": fitted.n_test_windows,
        "adam_t": fitted.adam_state.t,
        "scaler": {"min": fitted.scaler.min_.tolist(), "max": fitted.scaler.max_.tolist()},
        "decomposition_periods": {c: fitted.decompositions[c].period
                                  for c in fitted.channels},
        "blocks": manifest,
    }
    encoded = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(encoded)))
        fh.write(encoded)
        for _, _, arr in blocks:
            fh.write(arr.astype("<f8").tobytes())


def load_checkpoint(path: str) -> FittedPipeline:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint: {exc}") from exc
    if len(raw) < 16 or raw[:6] != MAGIC:
        raise CheckpointError("not a FALNET checkpoint")
    version = struct.unpack("<H", raw[6:8])[0]
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header_len = struct.unpack("<Q", raw[8:16])[0]
    try:
        header = json.loads(raw[16:16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from exc

    offset = 16 + header_len
    arrays = {}
    for entry in header["blocks"]:
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        end = offset + 8 * count
        if end > len(raw):
            raise CheckpointError("checkpoint truncated")
        arr = np.frombuffer(raw[offset:end], dtype="<f8").astype(np.float64)
        arrays[(entry["kind"], entry["name"])] = arr.reshape(entry["shape"])
        offset = end
    if offset != len(raw):
        raise CheckpointError("trailing bytes after declared blocks")

    config = _config_from_dict(header["config"])
    layers = []
    for depth in range(config.train.lstm_layers):
        w = arrays[("param", f"lstm{depth}.w")]
        hidden = w.shape[1] // 4
        layers.append(LstmLayerParams(w.copy(), arrays[("param", f"lstm{depth}.b")].copy(),
                                      w.shape[0] - hidden, hidden))
    attention = AttentionParams(arrays[("param", "attention.w_qkv")].copy(),
                                arrays[("param", "attention.w_o")].copy(),
                                arrays[("param", "attention.gamma")].copy(),
                                config.train.attention_heads)
    params = FalnetParams(layers, attention, arrays[("param", "head.w")].copy(),
                          arrays[("param", "head.b")].copy())
    state = AdamState(
        m={name: arrays[("adam_m", name)].copy() for name, _ in params.named_arrays()},
        v={name: arrays[("adam_v", name)].copy() for name, _ in params.named_arrays()},
        t=int(header["adam_t"]))

    scaler = ChannelMinMaxScaler()
    scaler.min_ = np.asarray(header["scaler"]["min"], dtype=np.float64)
    scaler.max_ = np.asarray(header["scaler"]["max"], dtype=np.float64)
    scaler.n_features_in_ = len(scaler.min_)

    decompositions = {}
    for channel in header["channels"]:
        parts = {f: arrays[("aux", f"decomp.{channel}.{f}")].copy() for f in _DECOMP_FIELDS}
        decompositions[channel] = Decomposition(
            trend=parts["trend"], seasonal=parts["seasonal"], residual=parts["residual"],
            denoised_residual=parts["denoised_residual"],
            period=int(header["decomposition_periods"][channel]))

    return FittedPipeline(params=params, adam_state=state, config=config,
                          channels=list(header["channels"]), scaler=scaler,
                          decompositions=decompositions,
                          train_rows=int(header["train_rows"]),
                          n_train_windows=int(header["n_train_windows"]),
                          n_test_windows=int(header["n_test_windows"]))
