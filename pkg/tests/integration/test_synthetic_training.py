# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""End-to-end training runs on synthetic corpora.

These take minutes rather than seconds; run them with ``pytest -m integration``.
The model is a reduced-width, reduced-resolution version of the full
architecture so the runs fit on a laptop CPU.
"""

from __future__ import annotations

import numpy as np
import pytest

from visforce.config import TrainConfig
from visforce.data import SynthConfig, split_protocol, synth_generate
from visforce.evaluation import evaluate, predict_trace
from visforce.models.network import ForceEstimator
from visforce.tensor import load_checkpoint
from visforce.training import train

pytestmark = pytest.mark.integration


def _reduced(variant: str, seed: int, **overrides) -> TrainConfig:
    values = dict(
        model_variant=variant,
        k=2,
        r=4,
        image_size=16,
        backbone_channels=(4, 8),
        hidden_size=8,
        fc_size=16,
        batch_size=16,
        window=5,
        micro_batch=16,
        base_lr=1e-3,
        lr_step_epochs=80,
        seed=seed,
    )
    values.update(overrides)
    return TrainConfig(**values).validate()


def test_baseline_overfits_small_corpus(tmp_path):
    sets = synth_generate(SynthConfig(seed=0, n_sets=2, frames_per_set=200, image_size=16))
    cfg = _reduced("baseline", seed=0, epochs=200)
    result = train(cfg, sets, output_dir=tmp_path)
    report = evaluate(result.model, sets, window=cfg.window)
    assert report.mae_normalized < 0.1
    assert report.mae < 1.2


def test_trace_is_reproducible_from_checkpoint(tmp_path):
    sets = synth_generate(SynthConfig(seed=1, n_sets=2, frames_per_set=60, image_size=16))
    cfg = _reduced("ssam", seed=3, epochs=2)
    result = train(cfg, sets, output_dir=tmp_path)
    first = predict_trace(ForceEstimator.from_checkpoint(load_checkpoint(result.checkpoint_path)), sets[0], window=5)
    second = predict_trace(ForceEstimator.from_checkpoint(load_checkpoint(result.checkpoint_path)), sets[0], window=5)
    np.testing.assert_array_equal(first.predicted_newtons, second.predicted_newtons)


def test_spatial_attention_does_not_hurt_held_out_error():
    sets = synth_generate(SynthConfig(seed=7, n_sets=10, frames_per_set=120, image_size=16, noise=0.02))
    train_sets, test_sets = split_protocol(sets, seed=0)
    assert (len(train_sets), len(test_sets)) == (8, 2)

    errors = {"baseline": [], "ssam": []}
    for seed in range(3):
        for variant in errors:
            cfg = _reduced(variant, seed=seed, epochs=40, lr_step_epochs=30)
            model = train(cfg, train_sets).model
            errors[variant].append(evaluate(model, test_sets, window=cfg.window).mae)
    assert np.mean(errors["ssam"]) <= np.mean(errors["baseline"])
