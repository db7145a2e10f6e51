# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Windowed minibatch sampling over recording sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from visforce.config import TrainConfig
from visforce.data.recording import RecordingSet
from visforce.errors import ContractViolation, ShapeError


@dataclass(frozen=True)
class Batch:
    """``frames`` is ``B×(T+context)×S×S×1``; ``targets`` are normalized forces."""

    frames: np.ndarray = field(repr=False)
    targets: np.ndarray = field(repr=False)
    set_ids: Tuple[str, ...] = ()
    ends: Tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.targets)

    def chunks(self, size: int) -> Tuple[Batch, ...]:
        """Consecutive sub-batches of at most ``size`` samples."""
        return tuple(
            Batch(self.frames[i : i + size], self.targets[i : i + size], self.set_ids[i : i + size], self.ends[i : i + size])
            for i in range(0, len(self), size)
        )


def sample_minibatch(
    dataset: Sequence[RecordingSet], cfg: TrainConfig, rng: np.random.Generator, context: int = 0
) -> Batch:
    """Draw ``cfg.batch_size`` windows with replacement.

    Each sample picks a set uniformly, then a window end uniformly within
    it; the window spans ``cfg.window + context`` frames ending there and
    is padded with the set's first frame where it crosses the start.
    """
    if not dataset:
        raise ContractViolation("cannot sample from an empty dataset")
    length = cfg.window + context
    frames = []
    targets = np.empty(cfg.batch_size)
    set_ids = []
    ends = []
    for b in range(cfg.batch_size):
        rec = dataset[int(rng.integers(len(dataset)))]
        if rec.image_size != cfg.image_size:
            raise ShapeError(f"{rec.set_id}: frames are {rec.image_size} px, model expects {cfg.image_size}")
        end = int(rng.integers(len(rec)))
        frames.append(rec.frames[rec.window_indices(end, length)])
        targets[b] = rec.forces[end] / cfg.force_scale_newtons
        set_ids.append(rec.set_id)
        ends.append(end)
    return Batch(
        frames=np.stack(frames).astype(np.float64),
        targets=targets,
        set_ids=tuple(set_ids),
        ends=tuple(ends),
    )
