# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Tests for the convolutional backbone and per-frame encoding."""

from __future__ import annotations

import numpy as np
import pytest

from visforce.errors import ShapeError
from visforce.models.attention import SpatialAttention, SpatialAttentionParams
from visforce.models.backbone import BackboneParams, Frame, encode_frame, extract_features, stage_outputs
from visforce.tensor import Tensor


class TestFrame:
    def test_rejects_color_or_non_square(self):
        with pytest.raises(ShapeError):
            Frame(np.zeros((8, 8, 3)))
        with pytest.raises(ShapeError):
            Frame(np.zeros((8, 6, 1)))

    def test_rejects_out_of_range_values(self):
        with pytest.raises(ShapeError):
            Frame(np.full((4, 4, 1), 1.5))


class TestBackboneParams:
    def test_layer_naming_and_count(self, rng):
        params = BackboneParams.init(rng, (2, 4))
        names = [p.name for p in params.parameters()]
        assert names[:2] == ["backbone/conv1_1/kernel", "backbone/conv1_2/kernel"]
        assert "backbone/conv2_2/bias" in names
        assert len(names) == 8

    def test_he_uniform_bounds(self, rng):
        params = BackboneParams.init(rng, (8,))
        bound = np.sqrt(6.0 / 9.0)
        assert np.all(np.abs(params.kernels[0].data) <= bound)
        assert not np.any(params.biases[0].data)

    def test_output_geometry(self):
        params = BackboneParams.init(None)
        assert params.out_channels == 256
        assert params.downsample == 16
        assert params.output_spatial(128) == (8, 8)


class TestFeatureExtraction:
    def test_full_size_shape_chain(self, rng):
        params = BackboneParams.init(rng)
        frame = Tensor(rng.uniform(size=(128, 128, 1)))
        shapes = [out.shape for out in stage_outputs(frame, params)]
        assert shapes == [(64, 64, 16), (32, 32, 32), (16, 16, 64), (8, 8, 128), (8, 8, 256)]

    def test_batched_frames(self, rng):
        params = BackboneParams.init(rng, (2, 4))
        out = extract_features(Tensor(rng.uniform(size=(3, 8, 8, 1))), params)
        assert out.shape == (3, 4, 4, 4)

    def test_batch_matches_single_frames(self, rng):
        params = BackboneParams.init(rng, (2, 4))
        frames = rng.uniform(size=(2, 8, 8, 1))
        batched = extract_features(Tensor(frames), params).data
        for i in range(2):
            np.testing.assert_allclose(batched[i], extract_features(Tensor(frames[i]), params).data, atol=1e-12)

    def test_activations_are_nonnegative(self, rng):
        params = BackboneParams.init(rng, (2, 4))
        out = extract_features(Tensor(rng.uniform(size=(8, 8, 1))), params)
        assert np.all(out.data >= 0.0)

    def test_multichannel_input_rejected(self, rng):
        with pytest.raises(ShapeError):
            extract_features(Tensor(np.zeros((8, 8, 3))), BackboneParams.init(rng, (2, 4)))

    def test_indivisible_size_rejected(self, rng):
        with pytest.raises(ShapeError):
            extract_features(Tensor(np.zeros((10, 10, 1))), BackboneParams.init(rng, (2, 4, 8)))


class TestEncodeFrame:
    def test_full_size_vector_length(self, rng):
        params = BackboneParams.init(rng)
        vec = encode_frame(Frame(rng.uniform(size=(128, 128, 1))), params)
        assert vec.shape == (256,)

    def test_attention_without_history_pads_with_current(self, rng):
        params = BackboneParams.init(rng, (2, 4))
        frame = Frame(rng.uniform(size=(8, 8, 1)))
        attention = SpatialAttention(SpatialAttentionParams.init(4, 2), k=2)
        no_history = encode_frame(frame, params, attention, None).data
        explicit = encode_frame(frame, params, attention, [extract_features(frame.as_tensor(), params)]).data
        np.testing.assert_array_equal(no_history, explicit)

    def test_zero_attention_scales_pooled_vector(self, rng):
        params = BackboneParams.init(rng, (2, 4))
        frame = Frame(rng.uniform(size=(8, 8, 1)))
        plain = encode_frame(frame, params).data
        attention = SpatialAttention(SpatialAttentionParams.zeros(4, 2), k=2)
        np.testing.assert_allclose(encode_frame(frame, params, attention, []).data, 1.5 * plain)
