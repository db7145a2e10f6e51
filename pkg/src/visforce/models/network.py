# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""The composed force estimator: backbone → attention → GAP → BLSTM → head.

A model consumes windows of ``T + context`` frames, where ``context`` is
``k - 1`` for the multi-frame attention variants and 0 otherwise. The
leading context frames only feed the attention stacks of the first
window steps; the BLSTM sees exactly ``T`` steps.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from visforce.config import ATTENTION_VARIANTS, MODEL_VARIANTS, TrainConfig
from visforce.errors import CheckpointError, ConfigurationError, ShapeError, UnsupportedOperationError
from visforce.models.attention import AttentionBlock, FrameStack, SpatialAttention, build_attention, stack_sequence
from visforce.models.backbone import BackboneParams, extract_features
from visforce.models.temporal import BlstmParams, HeadParams, blstm_forward, predict_force
from visforce.tensor import Checkpoint, Parameter, Tensor
from visforce.tensor import ops

logger = logging.getLogger(__name__)


def frames_for_n(n: int) -> int:
    """Stack size ``k`` for ``n`` previous frames plus the current one."""
    if n < 0:
        raise ConfigurationError(f"number of previous frames must be >= 0, got {n}")
    return n + 1


@dataclass(frozen=True)
class ModelSpec:
    """Architecture knobs; stored in checkpoint metadata."""

    variant: str = "ssam"
    k: int = 2
    r: int = 16
    pooling: str = "wap"
    image_size: int = 128
    backbone_channels: Tuple[int, ...] = (16, 32, 64, 128, 256)
    hidden_size: int = 256
    fc_size: int = 1024

    def __post_init__(self) -> None:
        if self.variant not in MODEL_VARIANTS:
            raise ConfigurationError(f"unknown model variant {self.variant!r}")

    @classmethod
    def from_config(cls, cfg: TrainConfig) -> ModelSpec:
        return cls(
            variant=cfg.model_variant,
            k=cfg.k if cfg.model_variant in ATTENTION_VARIANTS else 1,
            r=cfg.r,
            pooling=cfg.pooling,
            image_size=cfg.image_size,
            backbone_channels=tuple(cfg.backbone_channels),
            hidden_size=cfg.hidden_size,
            fc_size=cfg.fc_size,
        )

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ModelSpec:
        unknown = sorted(set(data) - {f.name for f in fields(cls)})
        if unknown:
            raise CheckpointError(f"unknown model spec keys in checkpoint metadata: {unknown}", parameter=unknown[0])
        values = dict(data)
        values["backbone_channels"] = tuple(values.get("backbone_channels", cls.backbone_channels))
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["backbone_channels"] = list(self.backbone_channels)
        return out

    @property
    def context_frames(self) -> int:
        return self.k - 1 if self.variant in ATTENTION_VARIANTS else 0


@dataclass
class ForceEstimator:
    spec: ModelSpec
    backbone: BackboneParams
    attention: Optional[AttentionBlock]
    blstm: BlstmParams
    head: HeadParams
    _params: List[Parameter] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        params = self.backbone.parameters()
        if self.attention is not None:
            params += self.attention.parameters()
        params += self.blstm.parameters() + self.head.parameters()
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ConfigurationError("duplicate parameter ids in model")
        self._params = params

    @classmethod
    def init(cls, spec: ModelSpec, seed: int) -> ForceEstimator:
        """Fresh parameters, a pure function of ``(spec, seed)``."""
        rng = np.random.default_rng(seed)
        backbone = BackboneParams.init(rng, spec.backbone_channels)
        spatial = backbone.output_spatial(spec.image_size)
        attention = build_attention(
            spec.variant,
            channels=backbone.out_channels,
            spatial=spatial,
            k=spec.k,
            r=spec.r,
            pooling=spec.pooling,
            rng=rng,
        )
        channels = backbone.out_channels
        blstm = BlstmParams.init(channels, spec.hidden_size, rng)
        head = HeadParams.init(blstm.output_size, spec.fc_size, rng)
        model = cls(spec=spec, backbone=backbone, attention=attention, blstm=blstm, head=head)
        logger.debug("Initialized %s model with %d parameters (seed=%d)", spec.variant, model.num_weights, seed)
        return model

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> ForceEstimator:
        spec = ModelSpec.from_dict(checkpoint.metadata.get("model", {}))
        model = cls.init(spec, seed=0)
        checkpoint.restore(model.parameters())
        return model

    def to_checkpoint(self, **metadata: Any) -> Checkpoint:
        return Checkpoint.from_parameters(self._params, {"model": self.spec.to_dict(), **metadata})

    def parameters(self) -> List[Parameter]:
        return list(self._params)

    def named_parameters(self) -> Dict[str, Parameter]:
        return {p.name: p for p in self._params}

    @property
    def num_weights(self) -> int:
        return sum(p.size for p in self._params)

    @property
    def context_frames(self) -> int:
        return self.spec.context_frames

    # ------------------------------------------------------------------
    # Forward pass
    # ------------------------------------------------------------------

    def _check_frames(self, frames: Tensor) -> Tuple[int, int]:
        size = self.spec.image_size
        if frames.ndim != 5 or frames.shape[2:] != (size, size, 1):
            raise ShapeError(f"expected frames of shape B×T×{size}×{size}×1, got {frames.shape}")
        batch, steps = frames.shape[:2]
        if steps <= self.context_frames:
            raise ShapeError(f"window of {steps} frames leaves no steps after {self.context_frames} context frames")
        return batch, steps

    def _feature_sequence(self, frames: Tensor) -> Tensor:
        batch, steps = frames.shape[:2]
        flat = ops.reshape(frames, (batch * steps, *frames.shape[2:]))
        feats = extract_features(flat, self.backbone)
        return ops.reshape(feats, (batch, steps, *feats.shape[1:]))

    def _stacks(self, frames: Tensor) -> Tuple[FrameStack, int, int]:
        batch, steps = self._check_frames(frames)
        feats = self._feature_sequence(frames)
        k = self.attention.k if self.attention is not None else 1
        stacked = stack_sequence(feats, k, time_axis=1)
        ctx = self.context_frames
        if ctx:
            stacked = ops.slice_axis(stacked, ctx, steps, axis=1)
        t = steps - ctx
        flat = ops.reshape(stacked, (batch * t, *stacked.shape[2:]))
        return FrameStack(flat, k), batch, t

    def encode(self, frames: Tensor) -> Tensor:
        """Per-step feature vectors, ``B×T×C``."""
        stack, batch, t = self._stacks(frames)
        refined = stack.current if self.attention is None else self.attention(stack).x
        pooled = ops.global_average_pool(refined)
        return ops.reshape(pooled, (batch, t, pooled.shape[-1]))

    def forward(self, frames: Tensor) -> Tensor:
        """Normalized force at each window's last frame, shape ``(B,)``."""
        encoded = self.encode(frames)
        fused = blstm_forward(encoded, self.blstm)
        return predict_force(fused, self.head)

    __call__ = forward

    def attention_maps(self, frames: Tensor) -> np.ndarray:
        """Spatial attention maps ``B×T×H×W`` for an SSAM model."""
        if not isinstance(self.attention, SpatialAttention):
            raise UnsupportedOperationError(f"{self.spec.variant} model has no spatial attention map")
        stack, batch, t = self._stacks(frames)
        m_s = self.attention.attention_map(stack).numpy()
        return m_s.reshape(batch, t, *m_s.shape[1:3])
