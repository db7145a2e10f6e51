# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Tests for the training loop."""

from __future__ import annotations

import csv

import numpy as np
import pytest

from visforce.errors import ContractViolation, NumericalError, ShapeError
from visforce.models.network import ForceEstimator
from visforce.tensor import Tensor, load_checkpoint
from visforce.training.optim import adam_step
from visforce.training.sampler import sample_minibatch
from visforce.training.trainer import Trainer, loss, train


def _weights(model):
    return [p.numpy() for p in model.parameters()]


class TestLoss:
    def test_mean_squared_error(self):
        assert loss(Tensor([0.0, 3.0]), [1.0, 1.0]).item() == pytest.approx(2.5)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            loss(Tensor([0.0, 3.0]), [1.0])


class TestTrain:
    def test_outputs_written(self, tmp_path, tiny_sets, tiny_cfg):
        result = train(tiny_cfg, tiny_sets, output_dir=tmp_path, steps_per_epoch=2)
        assert result.steps == 2
        assert len(result.losses) == 2
        with result.loss_log_path.open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["epoch", "step", "lr", "loss"]
        assert [r[1] for r in rows[1:]] == ["1", "2"]
        assert float(rows[1][3]) == result.losses[0]

    def test_checkpoint_restores_trained_model(self, tmp_path, tiny_sets, tiny_cfg):
        result = train(tiny_cfg, tiny_sets, output_dir=tmp_path, steps_per_epoch=2)
        ckpt = load_checkpoint(result.checkpoint_path)
        assert ckpt.metadata["epoch"] == 1
        assert ckpt.metadata["step"] == 2
        restored = ForceEstimator.from_checkpoint(ckpt)
        for a, b in zip(_weights(restored), _weights(result.model)):
            np.testing.assert_array_equal(a, b)

    def test_default_steps_cover_every_frame(self, tiny_sets, tiny_cfg):
        trainer = Trainer(tiny_cfg, tiny_sets)
        assert trainer.steps_per_epoch == 6

    def test_bitwise_reproducible(self, tiny_sets, tiny_cfg):
        a = train(tiny_cfg, tiny_sets, steps_per_epoch=3)
        b = train(tiny_cfg, tiny_sets, steps_per_epoch=3)
        assert a.losses == b.losses
        for x, y in zip(_weights(a.model), _weights(b.model)):
            np.testing.assert_array_equal(x, y)

    def test_same_seed_writes_identical_files(self, tmp_path, tiny_sets, tiny_cfg):
        a = train(tiny_cfg, tiny_sets, output_dir=tmp_path / "a", steps_per_epoch=2)
        b = train(tiny_cfg, tiny_sets, output_dir=tmp_path / "b", steps_per_epoch=2)
        assert a.checkpoint_path.read_bytes() == b.checkpoint_path.read_bytes()
        assert a.loss_log_path.read_bytes() == b.loss_log_path.read_bytes()

    def test_worker_count_does_not_change_weights(self, tiny_sets, tiny_cfg):
        serial = train(tiny_cfg, tiny_sets, steps_per_epoch=2)
        threaded = train(tiny_cfg.overridden(workers=3), tiny_sets, steps_per_epoch=2)
        for x, y in zip(_weights(serial.model), _weights(threaded.model)):
            np.testing.assert_array_equal(x, y)

    def test_completion_order_sum_stays_close(self, tiny_sets, tiny_cfg):
        serial = train(tiny_cfg, tiny_sets, steps_per_epoch=2)
        relaxed = train(tiny_cfg.overridden(workers=2, deterministic=False), tiny_sets, steps_per_epoch=2)
        for x, y in zip(_weights(serial.model), _weights(relaxed.model)):
            np.testing.assert_allclose(x, y, rtol=1e-6, atol=1e-9)

    def test_micro_batching_matches_full_batch(self, tiny_sets, tiny_cfg):
        split = train(tiny_cfg, tiny_sets, steps_per_epoch=1)
        whole = train(tiny_cfg.overridden(micro_batch=4), tiny_sets, steps_per_epoch=1)
        assert split.losses[0] == pytest.approx(whole.losses[0], rel=1e-10)
        for x, y in zip(_weights(split.model), _weights(whole.model)):
            np.testing.assert_allclose(x, y, rtol=1e-7, atol=1e-12)

    def test_training_changes_weights(self, tiny_sets, tiny_cfg):
        initial = _weights(Trainer(tiny_cfg, tiny_sets).model)
        trained = _weights(train(tiny_cfg, tiny_sets, steps_per_epoch=1).model)
        assert any(not np.array_equal(a, b) for a, b in zip(initial, trained))

    def test_zero_epochs_saves_initial_model(self, tmp_path, tiny_sets, tiny_cfg):
        result = train(tiny_cfg.overridden(epochs=0), tiny_sets, output_dir=tmp_path)
        assert result.steps == 0
        assert load_checkpoint(result.checkpoint_path).metadata["epoch"] == 0

    def test_attention_variant_trains(self, tiny_sets, tiny_cfg):
        result = train(tiny_cfg.overridden(model_variant="ssam"), tiny_sets, steps_per_epoch=1)
        assert np.isfinite(result.losses[0])

    def test_empty_dataset(self, tiny_cfg):
        with pytest.raises(ContractViolation):
            train(tiny_cfg, [])

    def test_non_finite_loss_aborts(self, tmp_path, tiny_sets, tiny_cfg):
        trainer = Trainer(tiny_cfg, tiny_sets, output_dir=tmp_path, steps_per_epoch=1)
        trainer.model.named_parameters()["head/regressor/bias"].assign([np.nan])
        with pytest.raises(NumericalError):
            trainer.run()
        assert load_checkpoint(trainer.checkpoint_path).metadata["epoch"] == 0


class TestTrainingSpans:
    def test_run_and_epoch_spans(self, memory_exporter, tiny_sets, tiny_cfg):
        train(tiny_cfg.overridden(epochs=2), tiny_sets, steps_per_epoch=1)
        spans = {s.name: s for s in memory_exporter.get_finished_spans()}
        run = spans["visforce.train.baseline"]
        assert run.attributes["visforce.variant"] == "baseline"
        assert run.attributes["visforce.train.steps"] == 2
        epochs = [s for s in memory_exporter.get_finished_spans() if s.name == "visforce.epoch"]
        assert [s.attributes["visforce.epoch"] for s in epochs] == [0, 1]
        assert all(s.parent.span_id == run.context.span_id for s in epochs)

    def test_failed_run_marks_span(self, memory_exporter, tiny_sets, tiny_cfg):
        trainer = Trainer(tiny_cfg, tiny_sets, steps_per_epoch=1)
        trainer.model.named_parameters()["head/regressor/bias"].assign([np.nan])
        with pytest.raises(NumericalError):
            trainer.run()
        run = next(s for s in memory_exporter.get_finished_spans() if s.name == "visforce.train.baseline")
        assert run.attributes["visforce.error"] == "NumericalError"


class TestFrozenBatchDescent:
    def test_loss_mostly_decreases_over_first_steps(self, tiny_sets, tiny_cfg):
        cfg = tiny_cfg.overridden(batch_size=8, base_lr=1e-4)
        trainer = Trainer(cfg, tiny_sets)
        batch = sample_minibatch(tiny_sets, cfg, np.random.default_rng(0))
        values = []
        for _ in range(11):
            value, grads = trainer.compute_gradients(batch)
            values.append(value)
            adam_step(trainer.model.parameters(), grads, trainer.state, cfg.base_lr)
        non_increasing = sum(b <= a for a, b in zip(values, values[1:]))
        assert non_increasing >= 8
