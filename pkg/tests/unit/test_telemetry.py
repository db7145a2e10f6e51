# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Tests for tracing setup."""

from __future__ import annotations

import logging

import pytest

from visforce import telemetry
from visforce.config import TrainConfig


@pytest.fixture
def tracing_off():
    telemetry.disable_tracing()
    yield
    telemetry.disable_tracing()


class TestEnableTracing:
    def test_no_endpoint_is_a_no_op(self, tracing_off):
        assert telemetry.enable_tracing(TrainConfig()) is False
        assert not telemetry.is_enabled()

    def test_endpoint_installs_provider_once(self, tracing_off, caplog):
        cfg = TrainConfig(otlp_endpoint="http://localhost:4318", service_name="lab")
        with caplog.at_level(logging.INFO, logger="visforce.telemetry"):
            assert telemetry.enable_tracing(cfg) is True
        assert telemetry.is_enabled()
        assert "http://localhost:4318/v1/traces" in caplog.text
        assert telemetry.enable_tracing(cfg) is False

    def test_traces_path_not_duplicated(self, tracing_off, caplog):
        cfg = TrainConfig(otlp_endpoint="http://collector:4318/v1/traces")
        with caplog.at_level(logging.INFO, logger="visforce.telemetry"):
            telemetry.enable_tracing(cfg)
        assert "/v1/traces/v1/traces" not in caplog.text

    def test_forked_child_reinitializes(self, tracing_off, monkeypatch):
        cfg = TrainConfig(otlp_endpoint="http://localhost:4318")
        assert telemetry.enable_tracing(cfg) is True
        monkeypatch.setattr(telemetry, "_initialized_pid", -1)
        assert telemetry.enable_tracing(cfg) is True

    def test_disable_resets_state(self, tracing_off):
        telemetry.enable_tracing(TrainConfig(otlp_endpoint="http://localhost:4318"))
        telemetry.disable_tracing()
        assert not telemetry.is_enabled()
        telemetry.disable_tracing()
