# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Central-difference verification of reverse-mode gradients."""

from __future__ import annotations

import logging
from typing import Callable, Sequence

import numpy as np

from visforce.errors import ContractViolation, GradientCheckError
from visforce.tensor.core import Parameter, Tape, Tensor, gradients

logger = logging.getLogger(__name__)

MIN_EPS = 1e-7
MAX_EPS = 1e-3


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))


def _scalar(loss: Tensor, where: str) -> float:
    if loss.size != 1:
        raise ContractViolation(f"forward_fn must return a scalar, got shape {loss.shape}")
    value = loss.item()
    if not np.isfinite(value):
        raise GradientCheckError(f"non-finite loss {value!r} while perturbing {where}", parameter=where)
    return value


def grad_check(forward_fn: Callable[[], Tensor], params: Sequence[Parameter], eps: float = 1e-5) -> float:
    """Compare analytic gradients with central differences.

    ``forward_fn`` must be deterministic and rebuild the loss from the
    current parameter values on every call. Returns the maximum over all
    scalar parameter entries of
    ``|analytic - numeric| / max(1e-8, |analytic| + |numeric|)``.
    """
    if not MIN_EPS <= eps <= MAX_EPS:
        raise ContractViolation(f"eps must lie in [{MIN_EPS}, {MAX_EPS}], got {eps}")

    with Tape() as tape:
        loss = forward_fn()
    _scalar(loss, "<forward>")
    by_name, _ = gradients(tape, loss)
    # Parameters the loss never reached have a zero gradient.
    analytic = {p.name: by_name.get(p.name, np.zeros(p.shape)) for p in params}

    worst = 0.0
    for param in params:
        grad = analytic[param.name]
        if not np.all(np.isfinite(grad)):
            raise GradientCheckError(f"non-finite analytic gradient for {param.name!r}", parameter=param.name)
        base = param.numpy()
        flat = base.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            param.assign(base)
            f_plus = _scalar(forward_fn(), param.name)
            flat[i] = original - eps
            param.assign(base)
            f_minus = _scalar(forward_fn(), param.name)
            flat[i] = original
            numeric = (f_plus - f_minus) / (2.0 * eps)
            worst = max(worst, relative_error(float(grad.reshape(-1)[i]), numeric))
        param.assign(base)

    logger.debug("grad_check over %d parameters: max relative error %.3e", len(params), worst)
    return worst
