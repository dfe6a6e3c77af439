"""Command-line surface: synth, clean, decompose, train, predict, evaluate,
export-plot.

Config precedence is flag > config file (--config, JSON) > built-in
defaults. Every random choice flows from --seed (or the FALNET_SEED
environment variable); all file outputs are byte-identical across reruns
with the same inputs and seed. The effective configuration is embedded in
the checkpoint and echoed to stderr, never into the pinned CSV/JSON output
schemas.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .checkpoint import load_checkpoint, save_checkpoint
from .decomposition import stl_decompose
from .exceptions import FalnetError
from .frame import parse_csv, render_csv
from .model import TrainConfig, falnet_forward
from .pipeline import (PipelineConfig, clean_frame, evaluate_pipeline,
                       extended_residuals, fit_pipeline, model_window,
                       predict_series)
from .spectral import denoise_residual
from .synth import synth_generate

_CONFIG_KEYS = {
    "learning_rate": float, "batch_size": int, "epochs": int, "dropout": float,
    "window": int, "adam_beta1": float, "adam_beta2": float, "adam_eps": float,
    "seed": int, "hidden_units": int, "lstm_layers": int, "attention_heads": int,
    "readout": str, "forget_bias": float, "clip_norm": float,
    "validation_fraction": float, "period": int, "cutoff": float,
    "train_fraction": float, "horizon": int, "target_channel": str, "iqr_k": float,
}
_PIPELINE_KEYS = {"period", "cutoff", "train_fraction", "horizon",
                  "target_channel", "iqr_k"}


def _default_seed() -> int:
    env = os.environ.get("FALNET_SEED")
    return int(env) if env else 0


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise FalnetError("config file must hold a JSON object")
    unknown = set(data) - set(_CONFIG_KEYS)
    if unknown:
        raise FalnetError(f"unknown config keys: {sorted(unknown)}")
    out = {}
    for key, value in data.items():
        if value is None and key == "clip_norm":
            out[key] = None
        else:
            out[key] = _CONFIG_KEYS[key](value)
    return out


def _build_pipeline_config(args) -> PipelineConfig:
    settings = _load_config_file(getattr(args, "config", None))
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    settings.setdefault("seed", _default_seed())
    train_kwargs = {k: v for k, v in settings.items() if k not in _PIPELINE_KEYS}
    pipe_kwargs = {k: v for k, v in settings.items() if k in _PIPELINE_KEYS}
    return PipelineConfig(train=TrainConfig(**train_kwargs), **pipe_kwargs).validate()


def _read_frame(path: str):
    return parse_csv(Path(path).read_text(encoding="utf-8"))


def _echo_config(config: PipelineConfig, path: str | None) -> None:
    payload = dataclasses.asdict(config)
    encoded = json.dumps(payload, sort_keys=True)
    print(f"effective config: {encoded}", file=sys.stderr)
    if path:
        Path(path).write_text(encoded + "\n", encoding="utf-8")


def _cmd_synth(args) -> int:
    frame = synth_generate(args.n, args.seed if args.seed is not None else _default_seed(),
                           spike_count=args.spikes)
    Path(args.out).write_text(render_csv(frame), encoding="utf-8")
    return 0


def _cmd_clean(args) -> int:
    frame = clean_frame(_read_frame(args.input), args.iqr_k if args.iqr_k is not None else 1.5)
    Path(args.out).write_text(render_csv(frame), encoding="utf-8")
    return 0


def _cmd_decompose(args) -> int:
    frame = clean_frame(_read_frame(args.input))
    period = args.period if args.period is not None else 24
    cutoff = args.cutoff if args.cutoff is not None else 0.1
    for c, name in enumerate(frame.channels):
        decomp = stl_decompose(frame.values[:, c], period)
        decomp.denoised_residual = denoise_residual(decomp.residual, cutoff)
        # 12 decimals so the additive identity survives the round trip
        lines = ["t,y,trend,seasonal,residual,denoised_residual"]
        for t in range(frame.n_rows):
            lines.append(f"{t},{frame.values[t, c]:.12f},{decomp.trend[t]:.12f},"
                         f"{decomp.seasonal[t]:.12f},{decomp.residual[t]:.12f},"
                         f"{decomp.denoised_residual[t]:.12f}")
        out = Path(f"{args.out_prefix}_{name.replace('.', '_')}.csv")
        out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def _cmd_train(args) -> int:
    config = _build_pipeline_config(args)
    _echo_config(config, args.echo_config)
    fitted, history = fit_pipeline(_read_frame(args.input), config)
    save_checkpoint(fitted, args.checkpoint)
    history_path = args.history or f"{args.checkpoint}.history.csv"
    Path(history_path).write_text(history.to_csv(), encoding="utf-8")
    return 0


def _cmd_predict(args) -> int:
    fitted = load_checkpoint(args.checkpoint)
    frame = _read_frame(args.input)
    cleaned = clean_frame(frame, fitted.config.iqr_k)
    predictions, target_rows = predict_series(fitted, frame, cleaned=cleaned)
    truth = cleaned.column(fitted.config.target_channel)[target_rows]
    lines = ["t,truth,prediction"]
    for row, y, y_hat in zip(target_rows, truth, predictions):
        lines.append(f"{row},{y:.6f},{y_hat:.6f}")
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def _cmd_evaluate(args) -> int:
    fitted = load_checkpoint(args.checkpoint)
    report = evaluate_pipeline(fitted, _read_frame(args.input),
                               baseline=args.baseline, normalized=args.normalized)
    text = report.to_json() + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_export_plot(args) -> int:
    fitted = load_checkpoint(args.checkpoint)
    frame = _read_frame(args.input)
    if args.attention:
        cleaned = clean_frame(frame, fitted.config.iqr_k)
        index = args.window_index if args.window_index is not None \
            else fitted.n_train_windows
        residual = extended_residuals(fitted, cleaned)
        _, cache = falnet_forward(fitted.params, model_window(fitted, residual, index),
                                  readout=fitted.config.train.readout)
        weights = cache.attention.head_weights_mean()
        lines = [",".join(f"{w:.6f}" for w in row) for row in weights]
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
        return 0
    return _cmd_predict(args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="falnet",
        description="Frequency-aware LSTM forecasting pipeline for hourly air quality")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic hourly dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--spikes", type=int, default=0,
                   help="number of injected pollution episodes")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("clean", help="interpolate gaps and replace IQR outliers")
    p.add_argument("--input", required=True)
    p.add_argument("--iqr-k", dest="iqr_k", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_clean)

    p = sub.add_parser("decompose", help="per-channel trend/seasonal/residual CSVs")
    p.add_argument("--input", required=True)
    p.add_argument("--period", type=int, default=None)
    p.add_argument("--tau", dest="cutoff", type=float, default=None)
    p.add_argument("--out-prefix", default="decomposition")
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("train", help="fit the full pipeline and write a checkpoint")
    p.add_argument("--input", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--history", default=None)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--echo-config", dest="echo_config", default=None,
                   help="also write the effective config JSON here")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--lr", dest="learning_rate", type=float, default=None)
    p.add_argument("--dropout", type=float, default=None)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--hidden", dest="hidden_units", type=int, default=None)
    p.add_argument("--layers", dest="lstm_layers", type=int, default=None)
    p.add_argument("--heads", dest="attention_heads", type=int, default=None)
    p.add_argument("--readout", choices=["last", "mean"], default=None)
    p.add_argument("--forget-bias", dest="forget_bias", type=float, default=None)
    p.add_argument("--clip-norm", dest="clip_norm", type=float, default=None)
    p.add_argument("--validation-fraction", dest="validation_fraction",
                   type=float, default=None)
    p.add_argument("--period", type=int, default=None)
    p.add_argument("--tau", dest="cutoff", type=float, default=None)
    p.add_argument("--train-fraction", dest="train_fraction", type=float, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--target-channel", dest="target_channel", default=None)
    p.add_argument("--iqr-k", dest="iqr_k", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="recomposed test-split predictions")
    p.add_argument("--input", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="metrics JSON on the test split")
    p.add_argument("--input", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--baseline", choices=["persistence"], default=None)
    p.add_argument("--normalized", action="store_true",
                   help="report on the scaled axis instead of original units")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("export-plot", help="time/truth/prediction CSV, or the "
                                           "head-averaged attention weight matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--attention", action="store_true")
    p.add_argument("--window-index", dest="window_index", type=int, default=None)
    p.set_defaults(func=_cmd_export_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FalnetError, OSError, json.JSONDecodeError) as exc:
        print(f"falnet: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
