# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Sliding-window force traces and set-level evaluation."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from visforce.data.recording import MAX_FORCE_NEWTONS, RecordingSet
from visforce.errors import ContractViolation, ShapeError
from visforce.evaluation.metrics import MetricsReport
from visforce.models.attention import ensemble_average
from visforce.models.network import ForceEstimator
from visforce.tensor import Tensor
from visforce.tracking import track_evaluation

logger = logging.getLogger(__name__)

ModelOrEnsemble = Union[ForceEstimator, Sequence[ForceEstimator]]


@dataclass(frozen=True)
class ForceTrace:
    """Ground truth and prediction in newtons for every frame of one set."""

    set_id: str
    frame_index: np.ndarray = field(repr=False)
    ground_truth_newtons: np.ndarray = field(repr=False)
    predicted_newtons: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        n = len(self.frame_index)
        if len(self.ground_truth_newtons) != n or len(self.predicted_newtons) != n:
            raise ContractViolation(f"{self.set_id}: trace columns have different lengths")

    def __len__(self) -> int:
        return len(self.frame_index)

    def write_csv(self, path: Union[str, Path]) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["frame", "gt_newtons", "pred_newtons"])
            for i, gt, pred in zip(self.frame_index, self.ground_truth_newtons, self.predicted_newtons):
                writer.writerow([int(i), repr(float(gt)), repr(float(pred))])
        return target

    @classmethod
    def read_csv(cls, path: Union[str, Path], set_id: str = "") -> ForceTrace:
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(
            set_id=set_id,
            frame_index=rows[:, 0].astype(np.int64),
            ground_truth_newtons=rows[:, 1],
            predicted_newtons=rows[:, 2],
        )


def _as_ensemble(model: ModelOrEnsemble) -> List[ForceEstimator]:
    models = [model] if isinstance(model, ForceEstimator) else list(model)
    if not models:
        raise ContractViolation("predict_trace needs at least one model")
    return models


def _model_trace(model: ForceEstimator, rec: RecordingSet, window: int, batch_size: int) -> np.ndarray:
    size = model.spec.image_size
    if rec.image_size != size:
        raise ShapeError(f"{rec.set_id}: frames are {rec.image_size} px, model expects {size}")
    length = window + model.context_frames
    out = np.empty(len(rec))
    for start in range(0, len(rec), batch_size):
        ends = range(start, min(start + batch_size, len(rec)))
        frames = np.stack([rec.frames[rec.window_indices(end, length)] for end in ends]).astype(np.float64)
        out[start : start + len(ends)] = model(Tensor(frames)).numpy()
    return out


def predict_trace(
    model: ModelOrEnsemble,
    rec: RecordingSet,
    window: int = 20,
    batch_size: int = 32,
    force_scale: float = MAX_FORCE_NEWTONS,
) -> ForceTrace:
    """Stride-1 windows over ``rec``; each prediction belongs to its window's last frame.

    Windows that reach back before the first frame repeat it. Passing
    several models averages their normalized predictions.
    """
    if window < 1 or batch_size < 1:
        raise ContractViolation(f"window and batch_size must be >= 1, got {window} and {batch_size}")
    normalized = [_model_trace(m, rec, window, batch_size) for m in _as_ensemble(model)]
    if len(normalized) == 2:
        fused = ensemble_average(*normalized)
    else:
        fused = np.mean(np.stack(normalized), axis=0)
    return ForceTrace(
        set_id=rec.set_id,
        frame_index=np.arange(len(rec)),
        ground_truth_newtons=np.asarray(rec.forces, dtype=np.float64),
        predicted_newtons=fused * force_scale,
    )


def evaluate(
    model: ModelOrEnsemble,
    sets: Sequence[RecordingSet],
    window: int = 20,
    force_scale: float = MAX_FORCE_NEWTONS,
    workers: int = 1,
    variant: Optional[str] = None,
    batch_size: int = 32,
) -> MetricsReport:
    """Trace every set and summarize the errors over all frames."""
    if not sets:
        raise ContractViolation("evaluation needs at least one recording set")
    models = _as_ensemble(model)
    name = variant or ("ensemble" if len(models) > 1 else models[0].spec.variant)

    def run(rec: RecordingSet) -> ForceTrace:
        return predict_trace(models, rec, window=window, batch_size=batch_size, force_scale=force_scale)

    with track_evaluation(name, len(sets)) as tracker:
        if workers > 1 and len(sets) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                traces = list(pool.map(run, sets))
        else:
            traces = [run(rec) for rec in sets]

        report = MetricsReport.from_predictions(
            name,
            np.concatenate([t.predicted_newtons for t in traces]),
            np.concatenate([t.ground_truth_newtons for t in traces]),
            [rec.object for rec, t in zip(sets, traces) for _ in range(len(t))],
            force_scale,
        )
        tracker.set_result(mae=report.mae, rmse=report.rmse)
    logger.info("Evaluated %s on %d sets: MAE %.4f N, RMSE %.4f N", name, len(sets), report.mae, report.rmse)
    return report
