# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Sequential spatial and channel attention over concatenated frame features.

Both modules gate the *current* frame's feature map ``X_t`` (``H×W×C``)
using a map computed from the stack of the last ``k`` frames
(``H×W×kC``, oldest first, current frame last):

- spatial: ``M_s = σ(WAP_channels(stack) + b)`` of shape ``H×W×1``
- channel: ``M_c = σ(F1·relu(F0·WAP_positions(stack)))`` of length ``kC``;
  only its last ``C`` entries gate ``X_t``

and both return ``X'_t = M ⊗ X_t + X_t``. Weighted average pooling (WAP)
is a learned linear combination; ``pooling="gap"`` swaps it for a fixed
uniform average. SE and CBAM are single-frame comparison blocks without
the residual path.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from visforce.errors import ConfigurationError, ShapeError
from visforce.models.base import ParameterGroup, he_uniform
from visforce.tensor import Parameter, Tensor
from visforce.tensor import ops

logger = logging.getLogger(__name__)

POOLING_MODES = ("wap", "gap")

# =========================================================================
# Feature containers
# =========================================================================


@dataclass(frozen=True)
class FeatureMap:
    """One frame's convolutional features ``H×W×C`` (optionally batched)."""

    x: Tensor
    frame_index: int = 0


@dataclass(frozen=True)
class FrameStack:
    """Channel-concatenation of ``k`` frames' features, current frame last."""

    x_concat: Tensor
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ShapeError(f"frame stack needs k >= 1, got {self.k}")
        if self.x_concat.ndim < 3 or self.x_concat.shape[-1] % self.k:
            raise ShapeError(f"stack of shape {self.x_concat.shape} does not hold {self.k} equal channel blocks")

    @property
    def channels(self) -> int:
        """Channels per frame (``C``)."""
        return self.x_concat.shape[-1] // self.k

    @property
    def spatial(self) -> Tuple[int, int]:
        return self.x_concat.shape[-3], self.x_concat.shape[-2]

    @property
    def current(self) -> Tensor:
        """The last ``C`` channels: the current frame's ``X_t``."""
        total = self.x_concat.shape[-1]
        if self.k == 1:
            return self.x_concat
        return ops.slice_axis(self.x_concat, total - self.channels, total, axis=-1)

    @classmethod
    def from_history(cls, history: Sequence[Tensor], k: int) -> FrameStack:
        """Stack the newest ``k`` entries of ``history`` (oldest first).

        Shorter histories are padded by repeating their first frame.
        """
        if not history:
            raise ShapeError("frame history is empty")
        recent = list(history[-k:])
        frames = [recent[0]] * (k - len(recent)) + recent
        shape = frames[-1].shape
        if any(f.shape != shape for f in frames):
            raise ShapeError(f"frame features disagree in shape: {[f.shape for f in frames]}")
        stacked = frames[0] if k == 1 else ops.concat(frames, axis=-1)
        return cls(x_concat=stacked, k=k)


def stack_sequence(features: Tensor, k: int, time_axis: int = 1) -> Tensor:
    """Per-timestep frame stacks for a whole sequence.

    ``features`` holds one feature map per step along ``time_axis``; the
    result has ``k×C`` channels where step ``t`` sees steps ``t-k+1 … t``,
    with indices before the first step clamped to it.
    """
    if k == 1:
        return features
    steps = features.shape[time_axis]
    blocks = []
    for lag in range(k - 1, -1, -1):
        idx = np.clip(np.arange(steps) - lag, 0, None)
        blocks.append(ops.take(features, idx, axis=time_axis))
    return ops.concat(blocks, axis=-1)


# =========================================================================
# Weighted average pooling
# =========================================================================


def _channel_pool_map(x: Tensor, w_s: Tensor) -> Tensor:
    channels = x.shape[-1]
    if w_s.shape != (channels,):
        raise ShapeError(f"w_s has shape {w_s.shape}, stack has {channels} channels")
    return ops.matmul(x, ops.reshape(w_s, (channels, 1)))


def wap_over_channels(stack: FrameStack, w_s: Tensor) -> Tensor:
    """``Y_s[i,j] = Σ_c w_s[c] · x[i,j,c]``, shape ``H×W``."""
    y = _channel_pool_map(stack.x_concat, w_s)
    return ops.reshape(y, y.shape[:-1])


def wap_over_positions(stack: FrameStack, w_c: Tensor) -> Tensor:
    """``Y_c[c] = Σ_p w_c[p] · x[p,c]`` over flattened positions, length ``kC``."""
    x = stack.x_concat
    h, w = stack.spatial
    channels = x.shape[-1]
    if w_c.shape != (h * w,):
        raise ShapeError(f"w_c has shape {w_c.shape}, stack has {h * w} positions")
    lead = x.shape[:-3]
    flat = ops.reshape(x, (*lead, h * w, channels))
    by_channel = ops.transpose(flat, (*range(len(lead)), len(lead) + 1, len(lead)))
    y = ops.matmul(by_channel, ops.reshape(w_c, (h * w, 1)))
    return ops.reshape(y, (*lead, channels))


# =========================================================================
# Parameters
# =========================================================================


@dataclass
class SpatialAttentionParams(ParameterGroup):
    """``w_s`` (length ``kC``) and the scalar bias ``b`` (stored as shape ``(1,)``)."""

    w_s: Parameter
    b: Parameter

    @classmethod
    def init(cls, channels: int, k: int, prefix: str = "attention") -> SpatialAttentionParams:
        # Uniform weights start WAP out as plain channel averaging.
        total = k * channels
        return cls(
            w_s=Parameter(f"{prefix}/w_s", np.full(total, 1.0 / total)),
            b=Parameter(f"{prefix}/b", np.zeros(1)),
        )

    @classmethod
    def zeros(cls, channels: int, k: int, prefix: str = "attention") -> SpatialAttentionParams:
        return cls(
            w_s=Parameter(f"{prefix}/w_s", np.zeros(k * channels)),
            b=Parameter(f"{prefix}/b", np.zeros(1)),
        )


@dataclass
class GateMLP(ParameterGroup):
    """Two dense layers ``n → n/r → n`` with a ReLU between them.

    Weights are stored for row vectors: ``w0`` is ``n×(n/r)`` (the
    transpose of ``F_0``) and ``w1`` is ``(n/r)×n``.
    """

    w0: Parameter
    b0: Parameter
    w1: Parameter
    b1: Parameter

    @classmethod
    def build(cls, n: int, r: int, prefix: str, rng: Optional[np.random.Generator]) -> GateMLP:
        if r < 1 or n % r:
            raise ConfigurationError(f"reduction ratio r={r} must divide the channel count {n}")
        m = n // r
        if rng is None:
            w0, w1 = np.zeros((n, m)), np.zeros((m, n))
        else:
            w0, w1 = he_uniform(rng, (n, m), n), he_uniform(rng, (m, n), m)
        return cls(
            w0=Parameter(f"{prefix}/f0/weight", w0),
            b0=Parameter(f"{prefix}/f0/bias", np.zeros(m)),
            w1=Parameter(f"{prefix}/f1/weight", w1),
            b1=Parameter(f"{prefix}/f1/bias", np.zeros(n)),
        )

    @property
    def reduction(self) -> int:
        return self.w0.shape[0] // self.w0.shape[1]

    def __call__(self, y: Tensor) -> Tensor:
        """Apply to ``…×n`` and return the pre-sigmoid logits, same shape."""
        n = y.shape[-1]
        rows = ops.reshape(y, (-1, n))
        hidden = ops.relu(ops.bias_add(ops.matmul(rows, self.w0), self.b0))
        logits = ops.bias_add(ops.matmul(hidden, self.w1), self.b1)
        return ops.reshape(logits, y.shape)


@dataclass
class ChannelAttentionParams(ParameterGroup):
    """``w_c`` (length ``H·W``) and the gating MLP over ``kC`` channels."""

    w_c: Parameter
    mlp: GateMLP

    @property
    def r(self) -> int:
        return self.mlp.reduction

    @classmethod
    def init(
        cls, channels: int, k: int, spatial: Tuple[int, int], r: int, rng: np.random.Generator, prefix: str = "attention"
    ) -> ChannelAttentionParams:
        positions = spatial[0] * spatial[1]
        return cls(
            w_c=Parameter(f"{prefix}/w_c", np.full(positions, 1.0 / positions)),
            mlp=GateMLP.build(k * channels, r, prefix, rng),
        )

    @classmethod
    def zeros(
        cls, channels: int, k: int, spatial: Tuple[int, int], r: int, prefix: str = "attention"
    ) -> ChannelAttentionParams:
        return cls(
            w_c=Parameter(f"{prefix}/w_c", np.zeros(spatial[0] * spatial[1])),
            mlp=GateMLP.build(k * channels, r, prefix, None),
        )


@dataclass
class SqueezeExcitationParams(ParameterGroup):
    mlp: GateMLP

    @classmethod
    def init(
        cls, channels: int, r: int, rng: Optional[np.random.Generator], prefix: str = "attention"
    ) -> SqueezeExcitationParams:
        return cls(mlp=GateMLP.build(channels, r, prefix, rng))


@dataclass
class CBAMParams(ParameterGroup):
    """Shared channel MLP plus the spatial gate's ``ks×ks×2×1`` conv."""

    mlp: GateMLP
    conv_w: Parameter
    conv_b: Parameter

    @classmethod
    def init(
        cls, channels: int, r: int, rng: Optional[np.random.Generator], kernel_size: int = 7, prefix: str = "attention"
    ) -> CBAMParams:
        shape = (kernel_size, kernel_size, 2, 1)
        conv = np.zeros(shape) if rng is None else he_uniform(rng, shape, kernel_size * kernel_size * 2)
        return cls(
            mlp=GateMLP.build(channels, r, prefix, rng),
            conv_w=Parameter(f"{prefix}/spatial/kernel", conv),
            conv_b=Parameter(f"{prefix}/spatial/bias", np.zeros(1)),
        )


# =========================================================================
# Blocks (functional form)
# =========================================================================


def _check_pooling(pooling: str) -> None:
    if pooling not in POOLING_MODES:
        raise ConfigurationError(f"pooling must be one of {POOLING_MODES}, got {pooling!r}")


def spatial_attention_map(stack: FrameStack, params: SpatialAttentionParams, pooling: str = "wap") -> Tensor:
    """``M_s`` with shape ``…×H×W×1``."""
    _check_pooling(pooling)
    if params.w_s.shape != (stack.x_concat.shape[-1],):
        raise ShapeError(f"w_s has shape {params.w_s.shape}, stack has {stack.x_concat.shape[-1]} channels")
    if pooling == "wap":
        pooled = _channel_pool_map(stack.x_concat, params.w_s)
    else:
        pooled = ops.channel_mean(stack.x_concat)
    return ops.sigmoid(ops.bias_add(pooled, params.b))


def channel_attention_map(stack: FrameStack, params: ChannelAttentionParams, pooling: str = "wap") -> Tensor:
    """``M_c`` with shape ``…×kC``."""
    _check_pooling(pooling)
    if stack.x_concat.shape[-1] % params.r:
        raise ConfigurationError(f"r={params.r} does not divide {stack.x_concat.shape[-1]} channels")
    if pooling == "wap":
        squeezed = wap_over_positions(stack, params.w_c)
    else:
        squeezed = ops.global_average_pool(stack.x_concat)
    return ops.sigmoid(params.mlp(squeezed))


def ssam_forward(stack: FrameStack, params: SpatialAttentionParams, pooling: str = "wap") -> FeatureMap:
    m_s = spatial_attention_map(stack, params, pooling)
    x_t = stack.current
    return FeatureMap(ops.add(ops.mul(m_s, x_t), x_t))


def scam_forward(stack: FrameStack, params: ChannelAttentionParams, pooling: str = "wap") -> FeatureMap:
    m_c = channel_attention_map(stack, params, pooling)
    x_t = stack.current
    c = stack.channels
    total = m_c.shape[-1]
    gate = m_c if stack.k == 1 else ops.slice_axis(m_c, total - c, total, axis=-1)
    gate = ops.reshape(gate, (*gate.shape[:-1], 1, 1, c))
    return FeatureMap(ops.add(ops.mul(gate, x_t), x_t))


def _as_channel_gate(v: Tensor) -> Tensor:
    return ops.reshape(v, (*v.shape[:-1], 1, 1, v.shape[-1]))


def se_block(x: FeatureMap, params: SqueezeExcitationParams) -> FeatureMap:
    """Squeeze-and-excitation: GAP → MLP → sigmoid → channel gating."""
    gate = ops.sigmoid(params.mlp(ops.global_average_pool(x.x)))
    return FeatureMap(ops.mul(_as_channel_gate(gate), x.x), x.frame_index)


def cbam_block(x: FeatureMap, params: CBAMParams) -> FeatureMap:
    """Channel gate (avg+max squeezes, shared MLP) followed by a spatial gate."""
    feats = x.x
    logits = ops.add(params.mlp(ops.global_average_pool(feats)), params.mlp(ops.global_max_pool(feats)))
    refined = ops.mul(_as_channel_gate(ops.sigmoid(logits)), feats)
    descriptor = ops.concat([ops.channel_mean(refined), ops.channel_max(refined)], axis=-1)
    m_s = ops.sigmoid(ops.bias_add(ops.conv2d(descriptor, params.conv_w), params.conv_b))
    return FeatureMap(ops.mul(m_s, refined), x.frame_index)


def ensemble_average(pred_a: Sequence[float], pred_b: Sequence[float]) -> np.ndarray:
    """Late fusion: elementwise mean of two prediction series."""
    a = np.asarray(pred_a, dtype=np.float64)
    b = np.asarray(pred_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"cannot average prediction series of shapes {a.shape} and {b.shape}")
    return (a + b) / 2.0


# =========================================================================
# Blocks (object form used by the network)
# =========================================================================


class AttentionBlock(ABC):
    """An attention module that refines the current frame of a stack."""

    k: int = 1

    @abstractmethod
    def __call__(self, stack: FrameStack) -> FeatureMap: ...

    @abstractmethod
    def parameters(self) -> List[Parameter]: ...


@dataclass
class SpatialAttention(AttentionBlock):
    params: SpatialAttentionParams
    k: int = 2
    pooling: str = "wap"

    def __call__(self, stack: FrameStack) -> FeatureMap:
        return ssam_forward(stack, self.params, self.pooling)

    def attention_map(self, stack: FrameStack) -> Tensor:
        return spatial_attention_map(stack, self.params, self.pooling)

    def parameters(self) -> List[Parameter]:
        return self.params.parameters()


@dataclass
class ChannelAttention(AttentionBlock):
    params: ChannelAttentionParams
    k: int = 2
    pooling: str = "wap"

    def __call__(self, stack: FrameStack) -> FeatureMap:
        return scam_forward(stack, self.params, self.pooling)

    def parameters(self) -> List[Parameter]:
        return self.params.parameters()


@dataclass
class SqueezeExcitation(AttentionBlock):
    params: SqueezeExcitationParams
    k: int = 1

    def __call__(self, stack: FrameStack) -> FeatureMap:
        return se_block(FeatureMap(stack.current), self.params)

    def parameters(self) -> List[Parameter]:
        return self.params.parameters()


@dataclass
class CBAM(AttentionBlock):
    params: CBAMParams
    k: int = 1

    def __call__(self, stack: FrameStack) -> FeatureMap:
        return cbam_block(FeatureMap(stack.current), self.params)

    def parameters(self) -> List[Parameter]:
        return self.params.parameters()


def build_attention(
    variant: str,
    *,
    channels: int,
    spatial: Tuple[int, int],
    k: int,
    r: int,
    pooling: str,
    rng: np.random.Generator,
    prefix: str = "attention",
) -> Optional[AttentionBlock]:
    """Attention block for a model variant; ``None`` for the baseline."""
    _check_pooling(pooling)
    if variant == "baseline":
        return None
    if variant == "ssam":
        return SpatialAttention(SpatialAttentionParams.init(channels, k, prefix), k=k, pooling=pooling)
    if variant == "scam":
        return ChannelAttention(ChannelAttentionParams.init(channels, k, spatial, r, rng, prefix), k=k, pooling=pooling)
    if variant == "se":
        return SqueezeExcitation(SqueezeExcitationParams.init(channels, r, rng, prefix))
    if variant == "cbam":
        return CBAM(CBAMParams.init(channels, r, rng, prefix=prefix))
    raise ConfigurationError(f"unknown model variant {variant!r}")
