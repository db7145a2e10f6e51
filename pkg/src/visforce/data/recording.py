# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Recording sets and the windows sampled from them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from visforce.errors import ContractViolation

MAX_FORCE_NEWTONS = 12.0
OBJECTS = ("sponge", "paper_cup", "tube", "stapler", "synthetic")
ANGLES_DEG = (0, 10, 20, 30)
LUX_LEVELS = (350, 550, 750)


@dataclass(frozen=True)
class RecordingSet:
    """One contiguous capture with per-frame force labels.

    ``frames`` is ``T×S×S×1`` (preprocessed, values in ``[0, 1]``),
    ``forces`` is ``T`` newtons, ``timestamps_ns`` the camera clock.
    """

    set_id: str
    object: str
    angle_deg: int
    lux: int
    frames: np.ndarray = field(repr=False)
    forces: np.ndarray = field(repr=False)
    timestamps_ns: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.object not in OBJECTS:
            raise ContractViolation(f"{self.set_id}: unknown object {self.object!r}")
        if self.angle_deg not in ANGLES_DEG:
            raise ContractViolation(f"{self.set_id}: angle {self.angle_deg} not in {ANGLES_DEG}")
        if self.lux not in LUX_LEVELS:
            raise ContractViolation(f"{self.set_id}: illuminance {self.lux} not in {LUX_LEVELS}")
        n = len(self.frames)
        if n < 1:
            raise ContractViolation(f"{self.set_id}: recording has no frames")
        if len(self.forces) != n or len(self.timestamps_ns) != n:
            raise ContractViolation(
                f"{self.set_id}: {n} frames but {len(self.forces)} forces and {len(self.timestamps_ns)} timestamps"
            )
        if self.frames.ndim != 4 or self.frames.shape[3] != 1 or self.frames.shape[1] != self.frames.shape[2]:
            raise ContractViolation(f"{self.set_id}: frames must be T×S×S×1, got {self.frames.shape}")
        if np.any(self.forces < 0.0) or np.any(self.forces > MAX_FORCE_NEWTONS):
            raise ContractViolation(f"{self.set_id}: forces must lie in [0, {MAX_FORCE_NEWTONS}] N")
        for arr in (self.frames, self.forces, self.timestamps_ns):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def image_size(self) -> int:
        return int(self.frames.shape[1])

    @property
    def condition(self) -> Tuple[int, int]:
        return self.angle_deg, self.lux

    def window_indices(self, end: int, length: int) -> np.ndarray:
        """Frame indices ``end-length+1 … end``, clamped to the first frame."""
        if not 0 <= end < len(self):
            raise ContractViolation(f"{self.set_id}: window end {end} outside [0, {len(self)})")
        if length < 1:
            raise ContractViolation(f"window length must be >= 1, got {length}")
        return np.clip(np.arange(end - length + 1, end + 1), 0, None)

    def window(self, end: int, length: int, force_scale: float = MAX_FORCE_NEWTONS) -> SequenceSample:
        idx = self.window_indices(end, length)
        return SequenceSample(
            frames=self.frames[idx],
            forces=self.forces[idx] / force_scale,
            set_id=self.set_id,
            offset=end - length + 1,
        )


@dataclass(frozen=True)
class SequenceSample:
    """A window of frames paired with normalized forces.

    ``offset`` is the index of the window's first frame in its set and is
    negative when the window was padded at the start of the recording.
    """

    frames: np.ndarray = field(repr=False)
    forces: np.ndarray = field(repr=False)
    set_id: str = ""
    offset: int = 0

    def __post_init__(self) -> None:
        if len(self.frames) < 1 or len(self.frames) != len(self.forces):
            raise ContractViolation(f"sample has {len(self.frames)} frames and {len(self.forces)} forces")

    @property
    def target(self) -> float:
        """Normalized force at the last frame."""
        return float(self.forces[-1])
