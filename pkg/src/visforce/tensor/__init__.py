# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Minimal float64 tensor engine with a reverse-mode tape."""

from visforce.tensor.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from visforce.tensor.core import Parameter, Tape, Tensor, backward, current_tape, gradients
from visforce.tensor.gradcheck import grad_check, relative_error

__all__ = [
    "Tensor",
    "Parameter",
    "Tape",
    "backward",
    "gradients",
    "current_tape",
    "grad_check",
    "relative_error",
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
]
