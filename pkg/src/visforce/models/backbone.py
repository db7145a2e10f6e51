# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""VGG-style convolutional feature extractor.

Each stage applies two 3×3 same-padded convolutions with ReLU. All stages
but the last end in a 2×2 max pool, so a 128×128 frame with five stages
leaves an 8×8 map with as many channels as the final stage.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from visforce.errors import ShapeError
from visforce.models.attention import AttentionBlock, FrameStack
from visforce.models.base import ParameterGroup, he_uniform
from visforce.tensor import Parameter, Tensor
from visforce.tensor import ops

logger = logging.getLogger(__name__)

DEFAULT_CHANNELS: Tuple[int, ...] = (16, 32, 64, 128, 256)
CONVS_PER_STAGE = 2
KERNEL_SIZE = 3


@dataclass(frozen=True)
class Frame:
    """A preprocessed grayscale image, ``S×S×1`` with values in ``[0, 1]``."""

    pixels: np.ndarray
    timestamp_ns: int = 0

    def __post_init__(self) -> None:
        shape = self.pixels.shape
        if len(shape) != 3 or shape[2] != 1 or shape[0] != shape[1]:
            raise ShapeError(f"frame must be S×S×1, got {shape}")
        if self.pixels.size and (self.pixels.min() < 0.0 or self.pixels.max() > 1.0):
            raise ShapeError("frame values must lie in [0, 1]")

    @property
    def size(self) -> int:
        return self.pixels.shape[0]

    def as_tensor(self) -> Tensor:
        return Tensor(self.pixels)


@dataclass
class BackboneParams(ParameterGroup):
    kernels: List[Parameter]
    biases: List[Parameter]
    channels: Tuple[int, ...] = DEFAULT_CHANNELS

    @classmethod
    def init(
        cls,
        rng: Optional[np.random.Generator],
        channels: Sequence[int] = DEFAULT_CHANNELS,
        in_channels: int = 1,
        prefix: str = "backbone",
    ) -> BackboneParams:
        """He-uniform kernels and zero biases; ``rng=None`` gives all zeros."""
        kernels: List[Parameter] = []
        biases: List[Parameter] = []
        cin = in_channels
        for stage, cout in enumerate(channels, start=1):
            for conv in range(1, CONVS_PER_STAGE + 1):
                shape = (KERNEL_SIZE, KERNEL_SIZE, cin, cout)
                values = np.zeros(shape) if rng is None else he_uniform(rng, shape, KERNEL_SIZE * KERNEL_SIZE * cin)
                kernels.append(Parameter(f"{prefix}/conv{stage}_{conv}/kernel", values))
                biases.append(Parameter(f"{prefix}/conv{stage}_{conv}/bias", np.zeros(cout)))
                cin = cout
        return cls(kernels=kernels, biases=biases, channels=tuple(channels))

    @property
    def stages(self) -> int:
        return len(self.channels)

    @property
    def out_channels(self) -> int:
        return self.channels[-1]

    @property
    def downsample(self) -> int:
        """Total spatial reduction factor."""
        return 2 ** (self.stages - 1)

    def output_spatial(self, image_size: int) -> Tuple[int, int]:
        side = image_size // self.downsample
        return side, side


def stage_outputs(x: Tensor, params: BackboneParams) -> Iterator[Tensor]:
    """Yield the activation after each stage (after pooling where it applies)."""
    if x.ndim not in (3, 4) or x.shape[-1] != 1:
        raise ShapeError(f"backbone expects single-channel S×S×1 frames, got {x.shape}")
    h, w = x.shape[-3], x.shape[-2]
    if h % params.downsample or w % params.downsample:
        raise ShapeError(f"frame size {h}×{w} is not divisible by {params.downsample}")
    layer = 0
    for stage in range(params.stages):
        for _ in range(CONVS_PER_STAGE):
            x = ops.relu(ops.bias_add(ops.conv2d(x, params.kernels[layer]), params.biases[layer]))
            layer += 1
        if stage < params.stages - 1:
            x = ops.maxpool2(x)
        yield x


def extract_features(frame: Tensor, params: BackboneParams) -> Tensor:
    """Feature map of one frame (``S×S×1``) or a batch (``N×S×S×1``)."""
    out = frame
    for out in stage_outputs(frame, params):
        pass
    return out


def encode_frame(
    frame: Frame,
    params: BackboneParams,
    attention: Optional[AttentionBlock] = None,
    prev_features: Optional[Sequence[Tensor]] = None,
) -> Tensor:
    """Backbone, optional attention, then global average pooling.

    ``prev_features`` lists earlier frames' feature maps, oldest first. At
    the start of a sequence it may be empty or ``None``; the frame stack is
    then padded with the current frame.
    """
    features = extract_features(frame.as_tensor(), params)
    if attention is None:
        return ops.global_average_pool(features)
    history = list(prev_features or []) + [features]
    stack = FrameStack.from_history(history, attention.k)
    refined = attention(stack)
    return ops.global_average_pool(refined.x)
