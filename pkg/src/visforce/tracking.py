# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Span trackers for training and evaluation runs.

Usage::

    from visforce.tracking import track_training_run, track_epoch

    with track_training_run(cfg) as run:
        for epoch in range(cfg.epochs):
            with track_epoch(epoch, lr) as ep:
                ...
                ep.set_result(loss=mean_loss, steps=n)
        run.set_result(final_loss=mean_loss)
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Generator, Optional

from opentelemetry import trace
from opentelemetry.trace import Span, Status, StatusCode

from visforce.config import TrainConfig

_TRACER_NAME = "visforce"


class _SpanTracker:
    span: Optional[Span]
    start_time: datetime
    prefix: str = "visforce"

    def set_error(self, error: BaseException) -> None:
        if self.span:
            self.span.set_status(Status(StatusCode.ERROR, str(error)))
            self.span.set_attribute("visforce.error", type(error).__name__)
            self.span.record_exception(error)

    def add_metadata(self, **kwargs: Any) -> None:
        if self.span:
            for key, value in kwargs.items():
                attr_key = key if key.startswith("visforce.") else f"{self.prefix}.{key}"
                self.span.set_attribute(attr_key, value)

    def _finalize(self) -> None:
        if not self.span:
            return
        duration_ms = (datetime.now(timezone.utc) - self.start_time).total_seconds() * 1000
        self.span.set_attribute(f"{self.prefix}.duration_ms", duration_ms)


@dataclass
class TrainingRunTracker(_SpanTracker):
    variant: str
    seed: int
    span: Optional[Span] = field(default=None, repr=False)
    start_time: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    prefix: str = "visforce.train"

    steps: int = 0
    final_loss: Optional[float] = None

    def set_result(self, steps: int = 0, final_loss: Optional[float] = None) -> TrainingRunTracker:
        self.steps = steps
        self.final_loss = final_loss
        if self.span:
            self.span.set_attribute("visforce.train.steps", steps)
            if final_loss is not None:
                self.span.set_attribute("visforce.train.final_loss", final_loss)
        return self


@dataclass
class EpochTracker(_SpanTracker):
    epoch: int
    lr: float
    span: Optional[Span] = field(default=None, repr=False)
    start_time: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    prefix: str = "visforce.epoch"

    loss: Optional[float] = None

    def set_result(self, loss: float, steps: int) -> EpochTracker:
        self.loss = loss
        if self.span:
            self.span.set_attribute("visforce.epoch.loss", loss)
            self.span.set_attribute("visforce.epoch.steps", steps)
        return self


@dataclass
class EvaluationTracker(_SpanTracker):
    variant: str
    set_count: int
    span: Optional[Span] = field(default=None, repr=False)
    start_time: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    prefix: str = "visforce.eval"

    mae: Optional[float] = None
    rmse: Optional[float] = None

    def set_result(self, mae: float, rmse: float) -> EvaluationTracker:
        self.mae = mae
        self.rmse = rmse
        if self.span:
            self.span.set_attribute("visforce.eval.mae", mae)
            self.span.set_attribute("visforce.eval.rmse", rmse)
        return self


@contextmanager
def track_training_run(cfg: TrainConfig) -> Generator[TrainingRunTracker, None, None]:
    tracer = trace.get_tracer(_TRACER_NAME)
    with tracer.start_as_current_span(name=f"visforce.train.{cfg.model_variant}") as span:
        span.set_attribute("visforce.variant", cfg.model_variant)
        span.set_attribute("visforce.seed", cfg.seed)
        span.set_attribute("visforce.train.epochs", cfg.epochs)
        span.set_attribute("visforce.train.batch_size", cfg.batch_size)
        tracker = TrainingRunTracker(variant=cfg.model_variant, seed=cfg.seed, span=span)
        try:
            yield tracker
        except Exception as exc:
            tracker.set_error(exc)
            raise
        finally:
            tracker._finalize()


@contextmanager
def track_epoch(epoch: int, lr: float) -> Generator[EpochTracker, None, None]:
    tracer = trace.get_tracer(_TRACER_NAME)
    with tracer.start_as_current_span(name="visforce.epoch") as span:
        span.set_attribute("visforce.epoch", epoch)
        span.set_attribute("visforce.lr", lr)
        tracker = EpochTracker(epoch=epoch, lr=lr, span=span)
        try:
            yield tracker
        except Exception as exc:
            tracker.set_error(exc)
            raise
        finally:
            tracker._finalize()


@contextmanager
def track_evaluation(variant: str, set_count: int) -> Generator[EvaluationTracker, None, None]:
    tracer = trace.get_tracer(_TRACER_NAME)
    with tracer.start_as_current_span(name=f"visforce.eval.{variant}") as span:
        span.set_attribute("visforce.variant", variant)
        span.set_attribute("visforce.eval.set_count", set_count)
        tracker = EvaluationTracker(variant=variant, set_count=set_count, span=span)
        try:
            yield tracker
        except Exception as exc:
            tracker.set_error(exc)
            raise
        finally:
            tracker._finalize()
