# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Adam with a step-decay learning-rate schedule."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, Sequence

import numpy as np

from visforce.config import TrainConfig
from visforce.errors import ContractViolation, NumericalError, ShapeError
from visforce.tensor import Parameter

logger = logging.getLogger(__name__)


def lr_at(epoch: int, cfg: TrainConfig) -> float:
    """``base_lr × lr_decay^⌊epoch / lr_step_epochs⌋``."""
    if not 0 <= epoch < max(cfg.epochs, 1):
        raise ContractViolation(f"epoch {epoch} outside [0, {cfg.epochs})")
    return cfg.base_lr * cfg.lr_decay ** (epoch // cfg.lr_step_epochs)


@dataclass
class AdamState:
    """First/second moments per parameter id and the shared step counter."""

    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_parameters(cls, params: Sequence[Parameter]) -> AdamState:
        return cls(
            m={p.name: np.zeros(p.shape) for p in params},
            v={p.name: np.zeros(p.shape) for p in params},
        )


def adam_step(
    params: Sequence[Parameter], grads: Mapping[str, np.ndarray], state: AdamState, lr: float
) -> AdamState:
    """Apply one bias-corrected Adam update in place.

    Every gradient is checked before any parameter changes, so a
    non-finite gradient leaves the model untouched.
    """
    for p in params:
        g = grads.get(p.name)
        if g is None:
            raise ContractViolation(f"no gradient for parameter {p.name!r}")
        if g.shape != p.shape:
            raise ShapeError(f"gradient for {p.name!r} has shape {g.shape}, parameter has {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient for parameter {p.name!r}", parameter=p.name)

    state.step += 1
    t = state.step
    correction1 = 1.0 - state.beta1**t
    correction2 = 1.0 - state.beta2**t
    for p in params:
        g = grads[p.name]
        m = state.m.setdefault(p.name, np.zeros(p.shape))
        v = state.v.setdefault(p.name, np.zeros(p.shape))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        p.assign(p.data - lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return state
