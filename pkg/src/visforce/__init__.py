# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Visforce - interaction-force estimation from image sequences.

Quick Start::

    from visforce import TrainConfig, SynthConfig, synth_generate, split_protocol, train, evaluate

    sets = synth_generate(SynthConfig(n_sets=10, frames_per_set=200, image_size=32))
    train_sets, test_sets = split_protocol(sets, seed=0)

    cfg = TrainConfig(model_variant="ssam", image_size=32, epochs=10)
    result = train(cfg, train_sets, output_dir="runs/ssam")
    report = evaluate(result.model, test_sets)
    print(report.mae, report.rmse)
"""

from __future__ import annotations

from visforce._version import __version__

# Configuration
from visforce.config import TrainConfig

# Data
from visforce.data import RecordingSet, SynthConfig, load_dataset, split_protocol, synth_generate, write_corpus

# Errors
from visforce.errors import (
    CheckpointError,
    ConfigurationError,
    ContractViolation,
    DatasetError,
    NumericalError,
    ShapeError,
    UnsupportedOperationError,
    VisforceError,
)

# Evaluation
from visforce.evaluation import MetricsReport, compare_reports, evaluate, predict_trace

# Models
from visforce.models import ForceEstimator, ModelSpec

# Training
from visforce.training import train

__all__ = [
    "__version__",
    "TrainConfig",
    # Data
    "RecordingSet",
    "SynthConfig",
    "load_dataset",
    "split_protocol",
    "synth_generate",
    "write_corpus",
    # Models
    "ForceEstimator",
    "ModelSpec",
    # Training / evaluation
    "train",
    "evaluate",
    "predict_trace",
    "MetricsReport",
    "compare_reports",
    # Errors
    "VisforceError",
    "ShapeError",
    "ContractViolation",
    "ConfigurationError",
    "NumericalError",
    "CheckpointError",
    "DatasetError",
    "UnsupportedOperationError",
]
