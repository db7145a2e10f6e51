# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Shared test fixtures for visforce tests."""

from __future__ import annotations

import os

import numpy as np
import pytest
from opentelemetry import trace
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import SimpleSpanProcessor
from opentelemetry.sdk.trace.export.in_memory_span_exporter import InMemorySpanExporter
from opentelemetry.sdk.trace.sampling import ALWAYS_ON

from visforce.config import TrainConfig
from visforce.data.synth import SynthConfig, synth_generate

# Module-level provider and exporter to avoid "cannot override" warnings
_provider: TracerProvider = None
_exporter: InMemorySpanExporter = None


def _get_or_create_provider() -> tuple[TracerProvider, InMemorySpanExporter]:
    """Get or create the global test provider."""
    global _provider, _exporter

    if _provider is None:
        _provider = TracerProvider(sampler=ALWAYS_ON)
        _exporter = InMemorySpanExporter()
        _provider.add_span_processor(SimpleSpanProcessor(_exporter))
        trace.set_tracer_provider(_provider)

    return _provider, _exporter


@pytest.fixture(autouse=True)
def reset_tracing():
    """Reset tracing state before each test."""
    _, exporter = _get_or_create_provider()
    exporter.clear()
    yield
    exporter.clear()


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Keep VISFORCE_* and OTEL_* settings of the host out of the tests."""
    for key in list(os.environ):
        if key.startswith(("VISFORCE_", "OTEL_")):
            monkeypatch.delenv(key, raising=False)


@pytest.fixture
def memory_exporter():
    """Get the in-memory span exporter for testing."""
    _, exporter = _get_or_create_provider()
    return exporter


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_synth() -> SynthConfig:
    """Two short 8×8 recordings."""
    return SynthConfig(seed=0, n_sets=2, frames_per_set=12, image_size=8)


@pytest.fixture
def tiny_sets(tiny_synth):
    return synth_generate(tiny_synth)


@pytest.fixture
def tiny_cfg() -> TrainConfig:
    """A model small enough to train for a few steps inside a unit test."""
    return TrainConfig(
        model_variant="baseline",
        k=2,
        r=2,
        image_size=8,
        backbone_channels=(2, 4),
        hidden_size=3,
        fc_size=4,
        epochs=1,
        batch_size=4,
        window=3,
        micro_batch=2,
        base_lr=1e-3,
        seed=0,
        workers=1,
    ).validate()
