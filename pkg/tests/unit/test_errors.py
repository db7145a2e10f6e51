# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Tests for the exception hierarchy."""

from __future__ import annotations

import pytest

from visforce.errors import (
    CheckpointError,
    ConfigurationError,
    ContractViolation,
    DatasetError,
    GradientCheckError,
    NumericalError,
    ShapeError,
    UnsupportedOperationError,
    VisforceError,
)


class TestExitCodes:
    @pytest.mark.parametrize(
        "error, code",
        [
            (ShapeError("x"), 1),
            (ContractViolation("x"), 1),
            (ConfigurationError("x"), 1),
            (UnsupportedOperationError("x"), 1),
            (DatasetError("x"), 2),
            (CheckpointError("x"), 2),
            (NumericalError("x"), 3),
            (GradientCheckError("x"), 3),
        ],
    )
    def test_codes(self, error, code):
        assert isinstance(error, VisforceError)
        assert error.exit_code == code

    def test_builtin_bases(self):
        assert isinstance(ShapeError("x"), ValueError)
        assert isinstance(DatasetError("x"), OSError)
        assert isinstance(NumericalError("x"), ArithmeticError)


class TestDatasetError:
    def test_lists_rejections_sorted(self):
        err = DatasetError("2 sets failed", {"b/set": "no force log", "a/set": "corrupt"})
        assert str(err) == "2 sets failed (a/set: corrupt; b/set: no force log)"

    def test_plain_message(self):
        assert str(DatasetError("manifest missing")) == "manifest missing"
        assert DatasetError("m").errors == {}


def test_numerical_error_names_parameter():
    err = GradientCheckError("too far", parameter="ssam")
    assert err.parameter == "ssam"
