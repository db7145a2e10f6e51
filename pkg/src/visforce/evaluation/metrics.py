# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Error metrics and the evaluation report."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from visforce.errors import ContractViolation, ShapeError

N_BINS = 11
BIN_WIDTH_NEWTONS = 1.0


def _pair(pred: Sequence[float], gt: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64).reshape(-1)
    g = np.asarray(gt, dtype=np.float64).reshape(-1)
    if p.size == 0 or g.size == 0:
        raise ContractViolation("metrics need at least one sample")
    if p.shape != g.shape:
        raise ShapeError(f"{p.size} predictions for {g.size} ground-truth values")
    return p, g


def rmse(pred: Sequence[float], gt: Sequence[float]) -> float:
    p, g = _pair(pred, gt)
    return float(np.sqrt(np.mean((p - g) ** 2)))


def mae(pred: Sequence[float], gt: Sequence[float]) -> float:
    p, g = _pair(pred, gt)
    return float(np.mean(np.abs(p - g)))


def improvement_ratio(baseline_mae: float, model_mae: float) -> int:
    """``round(100 × baseline / model)`` in percent."""
    if model_mae <= 0.0 or baseline_mae <= 0.0:
        raise ContractViolation(f"improvement ratio needs positive errors, got {baseline_mae} and {model_mae}")
    return int(round(100.0 * baseline_mae / model_mae))


@dataclass(frozen=True)
class BinnedError:
    """Per-bin MAE (``None`` for empty bins) and member counts."""

    mae: Tuple[Optional[float], ...]
    counts: Tuple[int, ...]
    bin_width: float = BIN_WIDTH_NEWTONS

    def bounds(self, i: int) -> Tuple[float, float]:
        return i * self.bin_width, (i + 1) * self.bin_width

    def recombined(self) -> float:
        """Count-weighted mean of the bin errors (equals the global MAE)."""
        total = sum(self.counts)
        return sum(m * c for m, c in zip(self.mae, self.counts) if m is not None) / total


def binned_mae(
    pred: Sequence[float], gt: Sequence[float], bin_width: float = BIN_WIDTH_NEWTONS, n_bins: int = N_BINS
) -> BinnedError:
    """MAE grouped by ground-truth force bin ``⌊gt / width⌋`` clamped to ``[0, n_bins-1]``."""
    p, g = _pair(pred, gt)
    bins = np.clip(np.floor(g / bin_width).astype(np.int64), 0, n_bins - 1)
    err = np.abs(p - g)
    maes: List[Optional[float]] = []
    counts: List[int] = []
    for b in range(n_bins):
        members = err[bins == b]
        counts.append(int(members.size))
        maes.append(float(members.mean()) if members.size else None)
    return BinnedError(mae=tuple(maes), counts=tuple(counts), bin_width=bin_width)


@dataclass
class MetricsReport:
    """Evaluation summary; newtons unless the field says otherwise."""

    variant: str
    rmse: float
    mae: float
    rmse_normalized: float
    mae_normalized: float
    samples: int
    per_bin_mae: List[Optional[float]] = field(default_factory=list)
    per_bin_count: List[int] = field(default_factory=list)
    per_object_mae: Dict[str, float] = field(default_factory=dict)
    ratio_vs_baseline: Optional[int] = None
    per_object_ratio: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mae < 0.0 or (self.rmse < self.mae and not math.isclose(self.rmse, self.mae, rel_tol=1e-9)):
            raise ContractViolation(f"inconsistent report: rmse={self.rmse} mae={self.mae}")

    @classmethod
    def from_predictions(
        cls,
        variant: str,
        pred_newtons: Sequence[float],
        gt_newtons: Sequence[float],
        objects: Sequence[str],
        force_scale: float,
    ) -> MetricsReport:
        p, g = _pair(pred_newtons, gt_newtons)
        if len(objects) != p.size:
            raise ShapeError(f"{len(objects)} object labels for {p.size} samples")
        labels = np.asarray(objects)
        binned = binned_mae(p, g)
        per_object = {str(o): mae(p[labels == o], g[labels == o]) for o in sorted(set(objects))}
        return cls(
            variant=variant,
            rmse=rmse(p, g),
            mae=mae(p, g),
            rmse_normalized=rmse(p / force_scale, g / force_scale),
            mae_normalized=mae(p / force_scale, g / force_scale),
            samples=int(p.size),
            per_bin_mae=list(binned.mae),
            per_bin_count=list(binned.counts),
            per_object_mae=per_object,
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> MetricsReport:
        return cls(**dict(data))

    def save(self, path: Union[str, Path]) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return target

    @classmethod
    def load(cls, path: Union[str, Path]) -> MetricsReport:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def write_bins_csv(self, path: Union[str, Path]) -> Path:
        """``bin,lower_newtons,upper_newtons,count,mae_newtons``; empty bins leave mae blank."""
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin", "lower_newtons", "upper_newtons", "count", "mae_newtons"])
            for i, (value, count) in enumerate(zip(self.per_bin_mae, self.per_bin_count)):
                lower, upper = i * BIN_WIDTH_NEWTONS, (i + 1) * BIN_WIDTH_NEWTONS
                writer.writerow([i, lower, upper, count, "" if value is None else repr(value)])
        return target


def compare_reports(baseline: MetricsReport, model: MetricsReport) -> MetricsReport:
    """Copy of ``model`` with improvement ratios against ``baseline`` filled in."""
    ratios = {
        obj: improvement_ratio(baseline.per_object_mae[obj], value)
        for obj, value in model.per_object_mae.items()
        if obj in baseline.per_object_mae and value > 0.0 and baseline.per_object_mae[obj] > 0.0
    }
    data = model.to_dict()
    data["ratio_vs_baseline"] = improvement_ratio(baseline.mae, model.mae)
    data["per_object_ratio"] = ratios
    return MetricsReport.from_dict(data)
