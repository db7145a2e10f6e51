# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Finite-difference gradient checks over every differentiable block.

Each block is built at a reduced shape from a fixed seed. Inputs are
wrapped as parameters so their gradients are checked alongside the
weights, and block outputs are contracted with a fixed random projection
into a scalar loss.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from visforce.errors import ConfigurationError, GradientCheckError
from visforce.models.attention import (
    CBAMParams,
    ChannelAttentionParams,
    FeatureMap,
    FrameStack,
    SpatialAttentionParams,
    SqueezeExcitationParams,
    cbam_block,
    scam_forward,
    se_block,
    ssam_forward,
    wap_over_channels,
    wap_over_positions,
)
from visforce.models.network import ForceEstimator, ModelSpec
from visforce.models.temporal import BlstmParams, HeadParams, LstmParams, blstm_forward, lstm_step, predict_force
from visforce.tensor import Parameter, Tensor, grad_check
from visforce.tensor import ops
from visforce.training.trainer import loss

logger = logging.getLogger(__name__)

THRESHOLD = 1e-4
DEFAULT_EPS = 1e-5

# Reduced shapes: 4×4 maps, 4 channels, 2-frame stacks, r=2.
_S = 4
_C = 4
_K = 2
_R = 2

# Two backbone stages on 16×16 frames, with a max pool between them.
NETWORK_SPEC = ModelSpec(variant="ssam", k=2, image_size=16, backbone_channels=(2, 2), hidden_size=2, fc_size=3)

Case = Tuple[Callable[[], Tensor], List[Parameter]]


@dataclass(frozen=True)
class BlockResult:
    block: str
    max_rel_error: float
    entries: int
    threshold: float = THRESHOLD

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.threshold


def _projected(out: Tensor, rng: np.random.Generator) -> Callable[[Tensor], Tensor]:
    weights = Tensor(rng.standard_normal(out.shape))
    return lambda y: ops.sum(ops.mul(y, weights))


def _case(build: Callable[[], Tensor], params: List[Parameter], rng: np.random.Generator) -> Case:
    project = _projected(build(), rng)
    return (lambda: project(build())), params


def _input(rng: np.random.Generator, name: str, shape: Tuple[int, ...], low: float = -1.0) -> Parameter:
    return Parameter(name, rng.uniform(low, 1.0, size=shape))


def _conv(rng: np.random.Generator) -> Case:
    x = _input(rng, "x", (2, _S, _S, 2))
    kernel = Parameter("kernel", rng.standard_normal((3, 3, 2, 3)))
    return _case(lambda: ops.conv2d(x, kernel), [x, kernel], rng)


def _maxpool(rng: np.random.Generator) -> Case:
    # A permutation keeps every pooling window free of ties.
    values = rng.permutation(2 * _S * _S * _C).reshape(2, _S, _S, _C) / 10.0
    x = Parameter("x", values)
    return _case(lambda: ops.maxpool2(x), [x], rng)


def _gap(rng: np.random.Generator) -> Case:
    x = _input(rng, "x", (2, _S, _S, _C))
    return _case(lambda: ops.global_average_pool(x), [x], rng)


def _stack_input(rng: np.random.Generator) -> Parameter:
    return _input(rng, "x_concat", (_S, _S, _K * _C), low=0.0)


def _wap_channels(rng: np.random.Generator) -> Case:
    x = _stack_input(rng)
    w_s = Parameter("w_s", rng.standard_normal(_K * _C))
    return _case(lambda: wap_over_channels(FrameStack(x, _K), w_s), [x, w_s], rng)


def _wap_positions(rng: np.random.Generator) -> Case:
    x = _stack_input(rng)
    w_c = Parameter("w_c", rng.standard_normal(_S * _S))
    return _case(lambda: wap_over_positions(FrameStack(x, _K), w_c), [x, w_c], rng)


def _ssam(rng: np.random.Generator) -> Case:
    x = _stack_input(rng)
    params = SpatialAttentionParams.init(_C, _K)
    params.w_s.assign(rng.standard_normal(_K * _C))
    params.b.assign(rng.standard_normal(1))
    return _case(lambda: ssam_forward(FrameStack(x, _K), params).x, [x, *params.parameters()], rng)


def _scam(rng: np.random.Generator) -> Case:
    x = _stack_input(rng)
    params = ChannelAttentionParams.init(_C, _K, (_S, _S), _R, rng)
    params.w_c.assign(rng.standard_normal(_S * _S))
    return _case(lambda: scam_forward(FrameStack(x, _K), params).x, [x, *params.parameters()], rng)


def _se(rng: np.random.Generator) -> Case:
    x = _input(rng, "x", (_S, _S, _C), low=0.0)
    params = SqueezeExcitationParams.init(_C, _R, rng)
    return _case(lambda: se_block(FeatureMap(x), params).x, [x, *params.parameters()], rng)


def _cbam(rng: np.random.Generator) -> Case:
    x = _input(rng, "x", (_S, _S, _C), low=0.0)
    params = CBAMParams.init(_C, _R, rng, kernel_size=3)
    return _case(lambda: cbam_block(FeatureMap(x), params).x, [x, *params.parameters()], rng)


def _lstm_step(rng: np.random.Generator) -> Case:
    params = LstmParams.init(3, 2, rng, "lstm")
    x = _input(rng, "x", (3,))
    h = _input(rng, "h", (2,))
    c = _input(rng, "c", (2,))

    def build() -> Tensor:
        h_next, c_next = lstm_step(x, h, c, params)
        return ops.concat([h_next, c_next], axis=-1)

    return _case(build, [x, h, c, *params.parameters()], rng)


def _blstm(rng: np.random.Generator) -> Case:
    params = BlstmParams.init(3, 2, rng)
    seq = _input(rng, "sequence", (3, 3))
    return _case(lambda: blstm_forward(seq, params), [seq, *params.parameters()], rng)


def _head(rng: np.random.Generator) -> Case:
    head = HeadParams.init(4, 5, rng)
    fused = _input(rng, "fused", (3, 4))
    return _case(lambda: predict_force(fused, head), [fused, *head.parameters()], rng)


def _loss(rng: np.random.Generator) -> Case:
    pred = _input(rng, "pred", (5,))
    target = rng.uniform(0.0, 1.0, size=5)
    return (lambda: loss(pred, target)), [pred]


def _network(rng: np.random.Generator) -> Case:
    model = ForceEstimator.init(NETWORK_SPEC, seed=int(rng.integers(1 << 31)))
    s = NETWORK_SPEC.image_size
    frames = Tensor(rng.uniform(0.0, 1.0, size=(1, 3, s, s, 1)))
    target = rng.uniform(0.0, 1.0, size=1)
    return (lambda: loss(model(frames), target)), model.parameters()


BLOCKS: Dict[str, Callable[[np.random.Generator], Case]] = {
    "conv": _conv,
    "maxpool": _maxpool,
    "gap": _gap,
    "wap_channels": _wap_channels,
    "wap_positions": _wap_positions,
    "ssam": _ssam,
    "scam": _scam,
    "se": _se,
    "cbam": _cbam,
    "lstm_step": _lstm_step,
    "blstm": _blstm,
    "head": _head,
    "loss": _loss,
    "network": _network,
}


def check_blocks(
    blocks: Optional[Sequence[str]] = None, eps: float = DEFAULT_EPS, seed: int = 0, threshold: float = THRESHOLD
) -> List[BlockResult]:
    names = list(blocks) if blocks else list(BLOCKS)
    unknown = [n for n in names if n not in BLOCKS]
    if unknown:
        raise ConfigurationError(f"unknown gradient-check blocks {unknown}; choose from {sorted(BLOCKS)}")
    results = []
    order = list(BLOCKS)
    for name in names:
        fn, params = BLOCKS[name](np.random.default_rng([seed, order.index(name)]))
        worst = grad_check(fn, params, eps=eps)
        result = BlockResult(name, worst, sum(p.size for p in params), threshold)
        logger.info("gradcheck %-14s max rel err %.3e (%s)", name, worst, "ok" if result.passed else "FAIL")
        results.append(result)
    return results


def format_table(results: Sequence[BlockResult]) -> str:
    lines = [f"{'block':<16}{'entries':>9}{'max_rel_err':>14}  status"]
    for r in results:
        lines.append(f"{r.block:<16}{r.entries:>9}{r.max_rel_error:>14.3e}  {'ok' if r.passed else 'FAIL'}")
    return "\n".join(lines)


def raise_on_failure(results: Sequence[BlockResult]) -> None:
    failed = [r for r in results if not r.passed]
    if failed:
        worst = max(failed, key=lambda r: r.max_rel_error)
        raise GradientCheckError(
            f"{len(failed)} block(s) exceed the {worst.threshold:g} threshold; worst {worst.block} at {worst.max_rel_error:.3e}",
            parameter=worst.block,
        )
