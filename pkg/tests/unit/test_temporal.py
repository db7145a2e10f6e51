# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Tests for the LSTM cell, the bidirectional scan and the regression head."""

from __future__ import annotations

import numpy as np
import pytest

from visforce.errors import ContractViolation, ShapeError
from visforce.models.temporal import BlstmParams, HeadParams, LstmParams, blstm_forward, lstm_step, predict_force
from visforce.tensor import Parameter, Tensor


def _sigmoid(v):
    return 1.0 / (1.0 + np.exp(-v))


def _saturating_params(rng, prefix):
    # Pre-activations reach about 27: gates near 0 or 1, still below 1.0 in float64.
    params = LstmParams.init(3, 2, rng, prefix)
    params.w_x.assign(rng.uniform(-1.0, 1.0, size=(3, 8)))
    params.w_h.assign(rng.uniform(-1.0, 1.0, size=(2, 8)))
    params.b.assign(rng.uniform(-1.0, 1.0, size=8))
    return params


class TestLstmStep:
    def test_matches_reference_equations(self, rng):
        params = LstmParams.init(3, 2, rng, "lstm")
        params.b.assign(rng.standard_normal(8))
        x, h, c = rng.standard_normal(3), rng.standard_normal(2), rng.standard_normal(2)
        h_next, c_next = lstm_step(Tensor(x), Tensor(h), Tensor(c), params)

        z = x @ params.w_x.data + h @ params.w_h.data + params.b.data
        i, f, o, g = _sigmoid(z[0:2]), _sigmoid(z[2:4]), _sigmoid(z[4:6]), np.tanh(z[6:8])
        c_ref = f * c + i * g
        np.testing.assert_allclose(c_next.data, c_ref, atol=1e-12)
        np.testing.assert_allclose(h_next.data, o * np.tanh(c_ref), atol=1e-12)

    def test_hidden_state_stays_inside_unit_interval(self, rng):
        params = _saturating_params(rng, "lstm")
        h = Tensor(np.zeros((16, 2)))
        c = h
        for _ in range(10):
            h, c = lstm_step(Tensor(rng.uniform(-8.0, 8.0, size=(16, 3))), h, c, params)
            assert np.all(np.abs(h.data) < 1.0)

    def test_batched_rows(self, rng):
        params = LstmParams.init(3, 2, rng, "lstm")
        h, c = lstm_step(Tensor(np.ones((4, 3))), Tensor(np.zeros((4, 2))), Tensor(np.zeros((4, 2))), params)
        assert h.shape == c.shape == (4, 2)

    def test_input_width_checked(self, rng):
        params = LstmParams.init(3, 2, rng, "lstm")
        with pytest.raises(ShapeError):
            lstm_step(Tensor(np.ones(4)), Tensor(np.zeros(2)), Tensor(np.zeros(2)), params)

    def test_recurrent_init_bounds(self, rng):
        params = LstmParams.init(5, 4, rng, "lstm")
        assert np.all(np.abs(params.w_x.data) <= 0.5)
        assert not np.any(params.b.data)


class TestBlstm:
    def test_final_states_inside_unit_interval(self, rng):
        params = BlstmParams(
            forward=_saturating_params(rng, "blstm/forward"), backward=_saturating_params(rng, "blstm/backward")
        )
        out = blstm_forward(Tensor(rng.uniform(-8.0, 8.0, size=(16, 10, 3))), params).data
        assert out.shape == (16, 4)
        assert np.all(np.abs(out) < 1.0)

    def test_output_concatenates_both_directions(self, rng):
        params = BlstmParams.init(3, 2, rng)
        seq = Tensor(rng.standard_normal((5, 3)))
        fused = blstm_forward(seq, params)
        assert fused.shape == (4,)
        assert params.output_size == 4

    def test_full_size_fusion_length(self, rng):
        params = BlstmParams.init(256, 256, rng)
        fused = blstm_forward(Tensor(rng.standard_normal((2, 3, 256))), params)
        assert fused.shape == (2, 512)

    def test_single_step_sequence(self, rng):
        params = BlstmParams.init(3, 2, rng)
        fused = blstm_forward([Tensor(rng.standard_normal(3))], params)
        assert fused.shape == (4,)

    def test_list_and_tensor_inputs_agree(self, rng):
        params = BlstmParams.init(3, 2, rng)
        seq = rng.standard_normal((4, 3))
        from_tensor = blstm_forward(Tensor(seq), params).data
        from_list = blstm_forward([Tensor(row) for row in seq], params).data
        np.testing.assert_allclose(from_tensor, from_list, atol=1e-12)

    def test_backward_direction_sees_reversed_order(self, rng):
        params = BlstmParams.init(3, 2, rng)
        seq = rng.standard_normal((4, 3))
        fused = blstm_forward(Tensor(seq), params).data
        swapped = BlstmParams(forward=params.backward, backward=params.forward)
        reversed_fused = blstm_forward(Tensor(seq[::-1].copy()), swapped).data
        np.testing.assert_allclose(fused[:2], reversed_fused[2:], atol=1e-12)

    def test_empty_sequence(self, rng):
        with pytest.raises(ContractViolation):
            blstm_forward([], BlstmParams.init(3, 2, rng))

    def test_parameter_names(self, rng):
        names = [p.name for p in BlstmParams.init(3, 2, rng).parameters()]
        assert names[0] == "blstm/forward/w_x"
        assert names[-1] == "blstm/backward/b"


class TestHead:
    def test_scalar_output_for_vector(self, rng):
        head = HeadParams.init(4, 6, rng)
        assert predict_force(Tensor(rng.standard_normal(4)), head).shape == (1,)

    def test_batched_output(self, rng):
        head = HeadParams.init(4, 6, rng)
        assert predict_force(Tensor(rng.standard_normal((5, 4))), head).shape == (5,)

    def test_zero_head_predicts_bias(self, rng):
        head = HeadParams(
            fc_w=Parameter("fc_w", np.zeros((4, 3))),
            fc_b=Parameter("fc_b", np.zeros(3)),
            reg_w=Parameter("reg_w", np.zeros((3, 1))),
            reg_b=Parameter("reg_b", [0.25]),
        )
        np.testing.assert_allclose(predict_force(Tensor(np.ones((2, 4))), head).data, [0.25, 0.25])

    def test_width_mismatch(self, rng):
        with pytest.raises(ShapeError):
            predict_force(Tensor(np.ones(5)), HeadParams.init(4, 6, rng))
