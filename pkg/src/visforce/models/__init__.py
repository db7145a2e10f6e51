# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Network components: attention blocks, backbone, temporal head."""

from visforce.models.attention import (
    CBAM,
    AttentionBlock,
    ChannelAttention,
    FeatureMap,
    FrameStack,
    SpatialAttention,
    SqueezeExcitation,
    build_attention,
    cbam_block,
    ensemble_average,
    scam_forward,
    se_block,
    ssam_forward,
    wap_over_channels,
    wap_over_positions,
)
from visforce.models.backbone import BackboneParams, Frame, encode_frame, extract_features
from visforce.models.network import ForceEstimator, ModelSpec, frames_for_n
from visforce.models.temporal import BlstmParams, HeadParams, LstmParams, blstm_forward, lstm_step, predict_force

__all__ = [
    "FeatureMap",
    "FrameStack",
    "wap_over_channels",
    "wap_over_positions",
    "ssam_forward",
    "scam_forward",
    "se_block",
    "cbam_block",
    "ensemble_average",
    "AttentionBlock",
    "SpatialAttention",
    "ChannelAttention",
    "SqueezeExcitation",
    "CBAM",
    "build_attention",
    "Frame",
    "BackboneParams",
    "extract_features",
    "encode_frame",
    "LstmParams",
    "BlstmParams",
    "HeadParams",
    "lstm_step",
    "blstm_forward",
    "predict_force",
    "ModelSpec",
    "ForceEstimator",
    "frames_for_n",
]
