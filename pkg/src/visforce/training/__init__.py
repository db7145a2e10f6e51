# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Optimization: Adam, minibatch sampling and the training loop."""

from visforce.training.optim import AdamState, adam_step, lr_at
from visforce.training.sampler import Batch, sample_minibatch
from visforce.training.trainer import Trainer, TrainResult, loss, train

__all__ = [
    "AdamState",
    "adam_step",
    "lr_at",
    "Batch",
    "sample_minibatch",
    "loss",
    "train",
    "Trainer",
    "TrainResult",
]
