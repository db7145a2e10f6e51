# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Tests for the attention blocks and weighted average pooling."""

from __future__ import annotations

import numpy as np
import pytest

from visforce.errors import ConfigurationError, ShapeError
from visforce.models.attention import (
    CBAM,
    CBAMParams,
    ChannelAttention,
    ChannelAttentionParams,
    FeatureMap,
    FrameStack,
    GateMLP,
    SpatialAttention,
    SpatialAttentionParams,
    SqueezeExcitation,
    SqueezeExcitationParams,
    build_attention,
    cbam_block,
    channel_attention_map,
    ensemble_average,
    scam_forward,
    se_block,
    spatial_attention_map,
    ssam_forward,
    stack_sequence,
    wap_over_channels,
    wap_over_positions,
)
from visforce.tensor import Tensor
from visforce.tensor import ops

H, W, C, K = 4, 4, 4, 2


def _stack(rng, k=K, channels=C, low=0.0, lead=()):
    return FrameStack(Tensor(rng.uniform(low, 1.0, size=(*lead, H, W, k * channels))), k)


class TestFrameStack:
    def test_current_is_last_block(self, rng):
        stack = _stack(rng)
        np.testing.assert_array_equal(stack.current.data, stack.x_concat.data[..., C:])
        assert stack.channels == C
        assert stack.spatial == (H, W)

    def test_single_frame_current_is_whole_stack(self, rng):
        stack = _stack(rng, k=1)
        assert stack.current is stack.x_concat

    def test_uneven_channel_blocks_rejected(self, rng):
        with pytest.raises(ShapeError):
            FrameStack(Tensor(rng.uniform(size=(H, W, 5))), 2)

    def test_from_history_pads_with_first_frame(self, rng):
        first = Tensor(rng.uniform(size=(H, W, C)))
        stack = FrameStack.from_history([first], 3)
        for block in range(3):
            np.testing.assert_array_equal(stack.x_concat.data[..., block * C : (block + 1) * C], first.data)

    def test_from_history_keeps_newest_frames(self, rng):
        frames = [Tensor(np.full((H, W, C), float(i))) for i in range(4)]
        stack = FrameStack.from_history(frames, 2)
        assert stack.x_concat.data[0, 0, 0] == 2.0
        assert stack.x_concat.data[0, 0, C] == 3.0

    def test_from_history_empty(self):
        with pytest.raises(ShapeError):
            FrameStack.from_history([], 2)

    def test_stack_sequence_clamps_to_first_step(self, rng):
        feats = Tensor(np.arange(3.0).reshape(1, 3, 1, 1, 1) * np.ones((1, 3, 2, 2, 1)))
        stacked = stack_sequence(feats, 3).data
        assert stacked.shape == (1, 3, 2, 2, 3)
        np.testing.assert_array_equal(stacked[0, :, 0, 0, :], [[0, 0, 0], [0, 0, 1], [0, 1, 2]])


class TestWeightedAveragePooling:
    def test_uniform_position_weights_equal_gap(self, rng):
        w_c = Tensor(np.full(H * W, 1.0 / (H * W)))
        for _ in range(100):
            stack = _stack(rng, low=-1.0)
            np.testing.assert_allclose(
                wap_over_positions(stack, w_c).data, ops.global_average_pool(stack.x_concat).data, rtol=0, atol=1e-12
            )

    def test_one_hot_channel_weights_select_channel(self, rng):
        stack = _stack(rng, low=-1.0)
        for c in range(K * C):
            w_s = np.zeros(K * C)
            w_s[c] = 1.0
            np.testing.assert_array_equal(wap_over_channels(stack, Tensor(w_s)).data, stack.x_concat.data[..., c])

    def test_random_channel_weights_match_loop_reference(self, rng):
        stack = _stack(rng, channels=3, low=-1.0)
        w_s = rng.standard_normal(K * 3)
        x = stack.x_concat.data
        expected = np.zeros((H, W))
        for i in range(H):
            for j in range(W):
                expected[i, j] = sum(w_s[c] * x[i, j, c] for c in range(K * 3))
        np.testing.assert_allclose(wap_over_channels(stack, Tensor(w_s)).data, expected, rtol=0, atol=1e-12)

    def test_random_position_weights_match_loop_reference(self, rng):
        stack = _stack(rng, channels=3, low=-1.0)
        w_c = rng.standard_normal(H * W)
        x = stack.x_concat.data
        expected = np.zeros(K * 3)
        for c in range(K * 3):
            expected[c] = sum(w_c[i * W + j] * x[i, j, c] for i in range(H) for j in range(W))
        np.testing.assert_allclose(wap_over_positions(stack, Tensor(w_c)).data, expected, rtol=0, atol=1e-12)

    def test_batched_positions(self, rng):
        stack = _stack(rng, lead=(3,))
        assert wap_over_positions(stack, Tensor(np.ones(H * W))).shape == (3, K * C)

    def test_weight_length_mismatch(self, rng):
        stack = _stack(rng)
        with pytest.raises(ShapeError):
            wap_over_positions(stack, Tensor(np.ones(H * W + 1)))
        with pytest.raises(ShapeError):
            wap_over_channels(stack, Tensor(np.ones(C)))


class TestSpatialAttention:
    def test_map_range_and_residual_bounds(self, rng):
        params = SpatialAttentionParams.init(C, K)
        params.w_s.assign(rng.standard_normal(K * C))
        for _ in range(100):
            stack = _stack(rng)
            m_s = spatial_attention_map(stack, params).data
            assert m_s.shape == (H, W, 1)
            assert np.all((m_s > 0.0) & (m_s < 1.0))
            x = stack.current.data
            out = ssam_forward(stack, params).x.data
            assert out.shape == x.shape
            assert np.all(out >= x) and np.all(out <= 2.0 * x)

    def test_zero_parameters_scale_by_one_and_a_half(self, rng):
        stack = _stack(rng)
        out = ssam_forward(stack, SpatialAttentionParams.zeros(C, K)).x.data
        np.testing.assert_allclose(out, 1.5 * stack.current.data)

    def test_gap_pooling_uses_channel_mean(self, rng):
        stack = _stack(rng)
        params = SpatialAttentionParams.zeros(C, K)
        params.b.assign([0.3])
        expected = 1.0 / (1.0 + np.exp(-(stack.x_concat.data.mean(axis=-1, keepdims=True) + 0.3)))
        np.testing.assert_allclose(spatial_attention_map(stack, params, pooling="gap").data, expected, atol=1e-12)

    def test_wrong_stack_width(self, rng):
        with pytest.raises(ShapeError):
            spatial_attention_map(_stack(rng, k=3), SpatialAttentionParams.init(C, K))

    def test_unknown_pooling(self, rng):
        with pytest.raises(ConfigurationError):
            spatial_attention_map(_stack(rng), SpatialAttentionParams.init(C, K), pooling="max")

    def test_block_exposes_map_and_parameters(self, rng):
        block = SpatialAttention(SpatialAttentionParams.init(C, K), k=K)
        stack = _stack(rng)
        assert block.attention_map(stack).shape == (H, W, 1)
        assert [p.name for p in block.parameters()] == ["attention/w_s", "attention/b"]


class TestChannelAttention:
    def test_map_range_and_residual_bounds(self, rng):
        params = ChannelAttentionParams.init(C, K, (H, W), 2, rng)
        for _ in range(100):
            stack = _stack(rng)
            m_c = channel_attention_map(stack, params).data
            assert m_c.shape == (K * C,)
            assert np.all((m_c > 0.0) & (m_c < 1.0))
            x = stack.current.data
            out = scam_forward(stack, params).x.data
            assert out.shape == x.shape
            assert np.all(out >= x) and np.all(out <= 2.0 * x)

    def test_gate_uses_current_frame_entries(self, rng):
        params = ChannelAttentionParams.init(C, K, (H, W), 2, rng)
        stack = _stack(rng)
        m_c = channel_attention_map(stack, params).data
        out = scam_forward(stack, params).x.data
        np.testing.assert_allclose(out, stack.current.data * (1.0 + m_c[C:]))

    def test_batched_stacks(self, rng):
        params = ChannelAttentionParams.init(C, K, (H, W), 2, rng)
        stack = _stack(rng, lead=(3,))
        assert scam_forward(stack, params).x.shape == (3, H, W, C)

    def test_reduction_must_divide_channels(self, rng):
        with pytest.raises(ConfigurationError):
            ChannelAttentionParams.init(C, K, (H, W), 3, rng)

    def test_gap_pooling_matches_uniform_wap(self, rng):
        params = ChannelAttentionParams.init(C, K, (H, W), 2, rng)
        params.w_c.assign(np.full(H * W, 1.0 / (H * W)))
        stack = _stack(rng)
        np.testing.assert_allclose(
            channel_attention_map(stack, params, "wap").data, channel_attention_map(stack, params, "gap").data, atol=1e-12
        )

    def test_reduction_property(self, rng):
        assert ChannelAttentionParams.init(C, K, (H, W), 4, rng).r == 4


class TestGateMLP:
    def test_zero_weights_give_zero_logits(self):
        mlp = GateMLP.build(8, 2, "g", None)
        assert not np.any(mlp(Tensor(np.ones((3, 8)))).data)
        assert mlp.reduction == 2

    def test_parameter_names(self, rng):
        mlp = GateMLP.build(8, 4, "attention", rng)
        assert [p.name for p in mlp.parameters()] == [
            "attention/f0/weight",
            "attention/f0/bias",
            "attention/f1/weight",
            "attention/f1/bias",
        ]


class TestComparisonBlocks:
    def test_se_with_zero_weights_halves_input(self, rng):
        x = Tensor(rng.uniform(size=(H, W, C)))
        out = se_block(FeatureMap(x), SqueezeExcitationParams.init(C, 2, None)).x.data
        np.testing.assert_allclose(out, 0.5 * x.data)

    def test_cbam_with_zero_weights_quarters_input(self, rng):
        x = Tensor(rng.uniform(size=(H, W, C)))
        out = cbam_block(FeatureMap(x), CBAMParams.init(C, 2, None, kernel_size=3)).x.data
        np.testing.assert_allclose(out, 0.25 * x.data)

    def test_blocks_gate_current_frame_only(self, rng):
        stack = _stack(rng, k=1)
        se = SqueezeExcitation(SqueezeExcitationParams.init(C, 2, rng))
        cbam = CBAM(CBAMParams.init(C, 2, rng))
        assert se(stack).x.shape == (H, W, C)
        assert cbam(stack).x.shape == (H, W, C)
        assert np.all(cbam(stack).x.data <= stack.x_concat.data)


class TestBuildAttention:
    kwargs = dict(channels=C, spatial=(H, W), k=K, r=2, pooling="wap")

    def test_baseline_has_no_block(self, rng):
        assert build_attention("baseline", rng=rng, **self.kwargs) is None

    @pytest.mark.parametrize(
        "variant, cls",
        [("ssam", SpatialAttention), ("scam", ChannelAttention), ("se", SqueezeExcitation), ("cbam", CBAM)],
    )
    def test_variants(self, rng, variant, cls):
        assert isinstance(build_attention(variant, rng=rng, **self.kwargs), cls)

    def test_unknown_variant(self, rng):
        with pytest.raises(ConfigurationError):
            build_attention("transformer", rng=rng, **self.kwargs)

    def test_spatial_init_is_uniform_average(self, rng):
        block = build_attention("ssam", rng=rng, **self.kwargs)
        np.testing.assert_allclose(block.params.w_s.data, 1.0 / (K * C))
        assert block.params.b.data[0] == 0.0


class TestEnsembleAverage:
    def test_mean_of_two_models(self):
        np.testing.assert_allclose(ensemble_average([0.2, 0.4], [0.4, 0.0]), [0.3, 0.2])

    def test_identical_models(self, rng):
        a = rng.uniform(size=10)
        np.testing.assert_array_equal(ensemble_average(a, a), a)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            ensemble_average([0.1, 0.2], [0.1])
