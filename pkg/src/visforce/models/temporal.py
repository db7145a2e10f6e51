# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Bidirectional LSTM over per-frame features and the regression head.

Gate pre-activations are packed in the order input, forget, output, cell
candidate. The forward pass reads the window oldest→newest, the backward
pass newest→oldest; their final hidden states are concatenated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from visforce.errors import ContractViolation, ShapeError
from visforce.models.base import ParameterGroup, he_uniform, recurrent_uniform
from visforce.tensor import Parameter, Tensor
from visforce.tensor import ops

SequenceInput = Union[Tensor, Sequence[Tensor]]


@dataclass
class LstmParams(ParameterGroup):
    w_x: Parameter
    w_h: Parameter
    b: Parameter

    @classmethod
    def init(cls, input_size: int, hidden_size: int, rng: np.random.Generator, prefix: str) -> LstmParams:
        gates = 4 * hidden_size
        return cls(
            w_x=Parameter(f"{prefix}/w_x", recurrent_uniform(rng, (input_size, gates), hidden_size)),
            w_h=Parameter(f"{prefix}/w_h", recurrent_uniform(rng, (hidden_size, gates), hidden_size)),
            b=Parameter(f"{prefix}/b", np.zeros(gates)),
        )

    @property
    def input_size(self) -> int:
        return self.w_x.shape[0]

    @property
    def hidden_size(self) -> int:
        return self.w_h.shape[0]


@dataclass
class BlstmParams(ParameterGroup):
    forward: LstmParams
    backward: LstmParams

    @classmethod
    def init(cls, input_size: int, hidden_size: int, rng: np.random.Generator, prefix: str = "blstm") -> BlstmParams:
        return cls(
            forward=LstmParams.init(input_size, hidden_size, rng, f"{prefix}/forward"),
            backward=LstmParams.init(input_size, hidden_size, rng, f"{prefix}/backward"),
        )

    @property
    def output_size(self) -> int:
        return 2 * self.forward.hidden_size


@dataclass
class HeadParams(ParameterGroup):
    """Dense ``2H → F`` with ReLU, then a linear ``F → 1`` regressor."""

    fc_w: Parameter
    fc_b: Parameter
    reg_w: Parameter
    reg_b: Parameter

    @classmethod
    def init(cls, input_size: int, fc_size: int, rng: np.random.Generator, prefix: str = "head") -> HeadParams:
        return cls(
            fc_w=Parameter(f"{prefix}/fc/weight", he_uniform(rng, (input_size, fc_size), input_size)),
            fc_b=Parameter(f"{prefix}/fc/bias", np.zeros(fc_size)),
            reg_w=Parameter(f"{prefix}/regressor/weight", he_uniform(rng, (fc_size, 1), fc_size)),
            reg_b=Parameter(f"{prefix}/regressor/bias", np.zeros(1)),
        )


def _rows(x: Tensor) -> Tensor:
    return x if x.ndim >= 2 else ops.reshape(x, (1, x.shape[0]))


def lstm_step(x_t: Tensor, h: Tensor, c: Tensor, params: LstmParams) -> Tuple[Tensor, Tensor]:
    """One LSTM update; ``x_t`` is ``…×D``, ``h`` and ``c`` are ``…×H``."""
    d, hidden = params.input_size, params.hidden_size
    if x_t.shape[-1] != d:
        raise ShapeError(f"lstm input has {x_t.shape[-1]} features, expected {d}")
    if h.shape[-1] != hidden or c.shape != h.shape:
        raise ShapeError(f"lstm state shapes {h.shape}/{c.shape} do not match hidden size {hidden}")
    squeeze = x_t.ndim == 1
    xr, hr, cr = _rows(x_t), _rows(h), _rows(c)
    z = ops.bias_add(ops.add(ops.matmul(xr, params.w_x), ops.matmul(hr, params.w_h)), params.b)
    i = ops.sigmoid(ops.slice_axis(z, 0, hidden))
    f = ops.sigmoid(ops.slice_axis(z, hidden, 2 * hidden))
    o = ops.sigmoid(ops.slice_axis(z, 2 * hidden, 3 * hidden))
    g = ops.tanh(ops.slice_axis(z, 3 * hidden, 4 * hidden))
    c_next = ops.add(ops.mul(f, cr), ops.mul(i, g))
    h_next = ops.mul(o, ops.tanh(c_next))
    if squeeze:
        return ops.reshape(h_next, (hidden,)), ops.reshape(c_next, (hidden,))
    return h_next, c_next


def _steps(sequence: SequenceInput) -> List[Tensor]:
    if isinstance(sequence, Tensor):
        if sequence.ndim < 2:
            raise ShapeError(f"sequence tensor needs a time axis, got {sequence.shape}")
        return [ops.take(sequence, t, axis=-2) for t in range(sequence.shape[-2])]
    steps = list(sequence)
    if not steps:
        raise ContractViolation("cannot run an LSTM over an empty sequence")
    return steps


def _run(steps: Sequence[Tensor], params: LstmParams) -> Tensor:
    lead = steps[0].shape[:-1]
    h = Tensor(np.zeros((*lead, params.hidden_size)))
    c = h
    for x_t in steps:
        h, c = lstm_step(x_t, h, c, params)
    return h


def blstm_forward(sequence: SequenceInput, params: BlstmParams) -> Tensor:
    """Concatenated final hidden states, ``…×2H``.

    ``sequence`` is either a list of ``…×D`` step tensors or one tensor
    with time on axis ``-2``.
    """
    steps = _steps(sequence)
    h_fwd = _run(steps, params.forward)
    h_bwd = _run(steps[::-1], params.backward)
    return ops.concat([h_fwd, h_bwd], axis=-1)


def predict_force(fused: Tensor, head: HeadParams) -> Tensor:
    """Normalized force for ``2H`` (scalar result) or ``…×2H`` (``…``) input."""
    if fused.shape[-1] != head.fc_w.shape[0]:
        raise ShapeError(f"head expects {head.fc_w.shape[0]} features, got {fused.shape[-1]}")
    hidden = ops.relu(ops.bias_add(ops.matmul(_rows(fused), head.fc_w), head.fc_b))
    out = ops.bias_add(ops.matmul(hidden, head.reg_w), head.reg_b)
    return ops.reshape(out, fused.shape[:-1] or (1,))
