import numpy as np
import pytest

from falnet.checkpoint import MAGIC, load_checkpoint, save_checkpoint
from falnet.exceptions import CheckpointError
from falnet.model import TrainConfig
from falnet.pipeline import PipelineConfig, fit_pipeline, predict_series
from falnet.synth import synth_generate


@pytest.fixture(scope="module")
def fitted():
    frame = synth_generate(300, seed=21)
    config = PipelineConfig(
        train=TrainConfig(learning_rate=0.01, batch_size=32, epochs=1, dropout=0.2,
                          window=10, hidden_units=8, lstm_layers=2,
                          attention_heads=2, seed=4))
    result, _ = fit_pipeline(frame, config)
    return frame, result


class TestRoundTrip:
    def test_parameters_survive(self, fitted, tmp_path):
        frame, model = fitted
        path = tmp_path / "model.ckpt"
        save_checkpoint(model, path)
        loaded = load_checkpoint(path)
        for (name, a), (_, b) in zip(model.params.named_arrays(),
                                     loaded.params.named_arrays()):
            assert np.array_equal(a, b), name
        assert loaded.adam_state.t == model.adam_state.t
        for name in model.adam_state.m:
            assert np.array_equal(model.adam_state.m[name], loaded.adam_state.m[name])
            assert np.array_equal(model.adam_state.v[name], loaded.adam_state.v[name])

    def test_pipeline_metadata_survives(self, fitted, tmp_path):
        frame, model = fitted
        path = tmp_path / "model.ckpt"
        save_checkpoint(model, path)
        loaded = load_checkpoint(path)
        assert loaded.channels == model.channels
        assert loaded.train_rows == model.train_rows
        assert loaded.config.cutoff == model.config.cutoff
        assert loaded.config.train.epochs == model.config.train.epochs
        assert np.array_equal(loaded.scaler.min_, model.scaler.min_)
        for channel in model.channels:
            a, b = model.decompositions[channel], loaded.decompositions[channel]
            assert np.array_equal(a.trend, b.trend)
            assert np.array_equal(a.denoised_residual, b.denoised_residual)
            assert a.period == b.period

    def test_predictions_identical_after_reload(self, fitted, tmp_path):
        frame, model = fitted
        path = tmp_path / "model.ckpt"
        save_checkpoint(model, path)
        loaded = load_checkpoint(path)
        before, _ = predict_series(model, frame)
        after, _ = predict_series(loaded, frame)
        assert np.array_equal(before, after)

    def test_double_save_byte_identical(self, fitted, tmp_path):
        frame, model = fitted
        p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        save_checkpoint(model, p1)
        save_checkpoint(model, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_save_load_save_byte_identical(self, fitted, tmp_path):
        frame, model = fitted
        p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        save_checkpoint(model, p1)
        save_checkpoint(load_checkpoint(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestFormat:
    def test_magic_at_start(self, fitted, tmp_path):
        frame, model = fitted
        path = tmp_path / "model.ckpt"
        save_checkpoint(model, path)
        assert path.read_bytes()[:6] == MAGIC

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "noise.bin"
        path.write_bytes(b"PNG....not a checkpoint")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_rejects_truncation(self, fitted, tmp_path):
        frame, model = fitted
        path = tmp_path / "model.ckpt"
        save_checkpoint(model, path)
        clipped = tmp_path / "clipped.ckpt"
        clipped.write_bytes(path.read_bytes()[:-16])
        with pytest.raises(CheckpointError):
            load_checkpoint(clipped)

    def test_rejects_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "absent.ckpt")

    def test_rejects_unknown_version(self, fitted, tmp_path):
        frame, model = fitted
        path = tmp_path / "model.ckpt"
        save_checkpoint(model, path)
        raw = bytearray(path.read_bytes())
        raw[6] = 99
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError):
            load_checkpoint(bad)
