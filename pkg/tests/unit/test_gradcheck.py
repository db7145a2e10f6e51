# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Tests for finite-difference gradient checking."""

from __future__ import annotations

import numpy as np
import pytest

from visforce.errors import ConfigurationError, ContractViolation, GradientCheckError
from visforce.evaluation.gradcheck_runner import (
    BLOCKS,
    NETWORK_SPEC,
    THRESHOLD,
    BlockResult,
    check_blocks,
    format_table,
    raise_on_failure,
)
from visforce.tensor import Parameter, Tensor, grad_check, relative_error
from visforce.tensor import ops
from visforce.tensor.core import make_output


class TestRelativeError:
    def test_zero_for_equal_values(self):
        assert relative_error(0.3, 0.3) == 0.0

    def test_floor_on_denominator(self):
        assert relative_error(0.0, 1e-10) == pytest.approx(1e-2)


class TestGradCheck:
    def test_smooth_function_passes(self, rng):
        p = Parameter("p", rng.standard_normal(5))
        w = Tensor(rng.standard_normal(5))
        worst = grad_check(lambda: ops.sum(ops.mul(ops.tanh(p), w)), [p])
        assert worst < THRESHOLD

    def test_parameters_restored(self, rng):
        values = rng.standard_normal(4)
        p = Parameter("p", values)
        grad_check(lambda: ops.sum(ops.square(p)), [p])
        np.testing.assert_array_equal(p.data, values)

    def test_wrong_adjoint_detected(self):
        p = Parameter("p", [0.7, -0.3])

        def broken_square(x):
            # Adjoint off by a factor of two.
            return make_output("broken", x.data**2, (x,), lambda g: (g * x.data,))

        assert grad_check(lambda: ops.sum(broken_square(p)), [p]) > 0.1

    def test_eps_outside_range(self):
        p = Parameter("p", [1.0])
        with pytest.raises(ContractViolation):
            grad_check(lambda: ops.sum(p), [p], eps=1e-2)

    def test_non_scalar_forward(self):
        p = Parameter("p", [1.0, 2.0])
        with pytest.raises(ContractViolation):
            grad_check(lambda: ops.scale(p, 2.0), [p])

    def test_stale_grad_of_unreached_parameter_ignored(self):
        p = Parameter("p", [0.5, -1.5])
        q = Parameter("q", [2.0])
        q.grad = np.array([7.0])
        assert grad_check(lambda: ops.sum(ops.square(p)), [p, q]) < THRESHOLD

    def test_stale_grad_of_reached_parameter_ignored(self):
        p = Parameter("p", [0.5, -1.5])
        p.grad = np.array([100.0, 100.0])
        assert grad_check(lambda: ops.sum(ops.square(p)), [p]) < THRESHOLD

    def test_non_finite_loss(self):
        p = Parameter("p", [np.inf])
        with pytest.raises(GradientCheckError):
            grad_check(lambda: ops.sum(p), [p])


class TestBlockRunner:
    @pytest.mark.parametrize(
        "block",
        ["conv", "maxpool", "gap", "wap_channels", "wap_positions", "ssam", "scam", "se", "lstm_step", "blstm", "head", "loss"],
    )
    def test_block_within_threshold(self, block):
        (result,) = check_blocks([block])
        assert result.passed, format_table([result])

    def test_cbam_and_network(self):
        results = check_blocks(["cbam", "network"])
        assert all(r.passed for r in results), format_table(results)

    def test_network_case_runs_full_backbone_at_16(self):
        assert NETWORK_SPEC.image_size == 16
        assert len(NETWORK_SPEC.backbone_channels) >= 2
        assert NETWORK_SPEC.variant == "ssam"

    def test_every_block_registered(self):
        assert {"conv", "ssam", "scam", "se", "cbam", "blstm", "loss"} <= set(BLOCKS)

    def test_unknown_block(self):
        with pytest.raises(ConfigurationError):
            check_blocks(["attention_everything"])

    def test_selection_does_not_change_seeding(self):
        alone = check_blocks(["gap"])[0].max_rel_error
        together = check_blocks(["conv", "gap"])[1].max_rel_error
        assert alone == together

    def test_table_lists_every_block(self):
        table = format_table([BlockResult("conv", 1e-9, 10), BlockResult("se", 1e-2, 5)])
        lines = table.splitlines()
        assert len(lines) == 3
        assert lines[1].startswith("conv") and lines[1].endswith("ok")
        assert lines[2].endswith("FAIL")

    def test_raise_on_failure_names_worst_block(self):
        results = [BlockResult("conv", 1e-9, 10), BlockResult("se", 1e-2, 5), BlockResult("head", 1e-3, 5)]
        with pytest.raises(GradientCheckError) as excinfo:
            raise_on_failure(results)
        assert excinfo.value.parameter == "se"
        assert excinfo.value.exit_code == 3

    def test_raise_on_failure_quiet_when_passing(self):
        raise_on_failure([BlockResult("conv", 1e-9, 10)])
