# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Logging and OpenTelemetry tracing setup for CLI runs.

Library code only creates spans through :mod:`visforce.tracking`; without
a configured provider those are OTel no-ops. :func:`enable_tracing`
installs a provider once per process and exports to OTLP/HTTP when an
endpoint is configured.
"""

from __future__ import annotations

import logging
import os
import threading
from typing import Any, Optional

from visforce._version import __version__
from visforce.config import TrainConfig

logger = logging.getLogger(__name__)

_lock = threading.RLock()
_initialized = False
_initialized_pid: Optional[int] = None
_provider: Any = None


def configure_logging(level: str = "INFO") -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def enable_tracing(cfg: TrainConfig) -> bool:
    """Install a tracer provider for this process.

    Returns ``True`` if a provider was installed, ``False`` if tracing was
    already enabled in this process or no endpoint is configured.
    """
    global _initialized, _initialized_pid, _provider

    with _lock:
        current_pid = os.getpid()
        if _initialized and _initialized_pid == current_pid:
            logger.debug("Tracing already enabled")
            return False
        if _initialized and _initialized_pid != current_pid:
            # Forked child: the parent's export thread did not survive.
            logger.info("Detected fork (parent pid=%s, current pid=%s); re-enabling tracing", _initialized_pid, current_pid)
            _initialized = False

        if not cfg.otlp_endpoint:
            logger.debug("No OTLP endpoint configured; spans stay local no-ops")
            return False

        from opentelemetry import trace
        from opentelemetry.exporter.otlp.proto.http.trace_exporter import OTLPSpanExporter
        from opentelemetry.sdk.resources import Resource
        from opentelemetry.sdk.trace import TracerProvider
        from opentelemetry.sdk.trace.export import BatchSpanProcessor

        endpoint = cfg.otlp_endpoint
        if not endpoint.endswith("/v1/traces"):
            endpoint = f"{endpoint.rstrip('/')}/v1/traces"

        resource = Resource.create(
            {
                "service.name": cfg.service_name,
                "telemetry.sdk.name": "visforce",
                "telemetry.sdk.version": __version__,
            }
        )
        provider = TracerProvider(resource=resource)
        provider.add_span_processor(BatchSpanProcessor(OTLPSpanExporter(endpoint=endpoint)))
        trace.set_tracer_provider(provider)

        _provider = provider
        _initialized = True
        _initialized_pid = current_pid
        logger.info("Tracing enabled: service=%s endpoint=%s", cfg.service_name, endpoint)
        return True


def is_enabled() -> bool:
    return _initialized


def disable_tracing() -> None:
    """Flush and shut down the provider installed by :func:`enable_tracing`."""
    global _initialized, _initialized_pid, _provider

    with _lock:
        if not _initialized:
            return
        try:
            _provider.force_flush(timeout_millis=5000)
            _provider.shutdown()
        except Exception as exc:
            logger.error("Error during tracing shutdown: %s", exc)
        _initialized = False
        _initialized_pid = None
        _provider = None
