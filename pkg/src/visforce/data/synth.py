# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Synthetic recordings with exact ground-truth force.

Each frame shows a bright elastic disk resting on a floor line and a
dimmer probe bar above it. Force ``F`` compresses the disk vertically
(height ``2b`` shrinks, width ``2a`` grows) and, below a small contact
threshold, closes the gap between bar and disk. Vertical pixel coverage
is computed analytically, so the rendered height is strictly decreasing
in ``F`` and ``F = 0`` always reproduces the reference frame.

Each recording holds ``pulses`` half-sine touches with uniformly random
peaks, one per equal segment of the recording.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from PIL import Image

from visforce.config import load_yaml_document
from visforce.data.ingest import FORCE_LOG, FRAME_INDEX
from visforce.data.recording import MAX_FORCE_NEWTONS, RecordingSet
from visforce.errors import ConfigurationError

logger = logging.getLogger(__name__)

DISK_RADIUS = 0.28
FLOOR_LINE = 0.85
BAR_HALF_WIDTH = 0.6
BAR_GAP = 0.08
BAR_LEVEL = 0.6
CONTACT_NEWTONS = 0.5


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_sets: int = 10
    frames_per_set: int = 500
    image_size: int = 128
    pulses: int = 4
    peak_min: float = 2.0
    peak_max: float = 12.0
    # Fraction of each pulse's segment covered by the touch.
    duty: float = 0.6
    # Relative vertical compression at the maximum force.
    deformation_gain: float = 0.5
    noise: float = 0.0
    frame_interval_ns: int = 33_333_333
    object: str = "synthetic"
    angle_deg: int = 0
    lux: int = 550

    def __post_init__(self) -> None:
        if self.n_sets < 1 or self.frames_per_set < 1 or self.pulses < 1 or self.frame_interval_ns < 1:
            raise ConfigurationError("synth counts must be positive")
        if self.image_size < 8:
            raise ConfigurationError(f"image_size must be >= 8, got {self.image_size}")
        if not 0.0 <= self.peak_min <= self.peak_max <= MAX_FORCE_NEWTONS:
            raise ConfigurationError(f"peaks must satisfy 0 <= peak_min <= peak_max <= {MAX_FORCE_NEWTONS}")
        if not 0.0 < self.duty <= 1.0:
            raise ConfigurationError(f"duty must lie in (0, 1], got {self.duty}")
        if not 0.0 < self.deformation_gain < 1.0:
            raise ConfigurationError(f"deformation_gain must lie in (0, 1), got {self.deformation_gain}")
        if self.noise < 0.0:
            raise ConfigurationError(f"noise must be >= 0, got {self.noise}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> SynthConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            logger.warning("Ignoring unknown synth config keys: %s", ", ".join(unknown))
        return cls(**{k: v for k, v in data.items() if k in known})

    @classmethod
    def from_yaml(cls, path: str) -> SynthConfig:
        """Read the ``synth:`` section of a visforce config file."""
        section = load_yaml_document(path).get("synth") or {}
        if not isinstance(section, dict):
            raise ConfigurationError("config section 'synth' must be a mapping")
        return cls.from_dict(section)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def force_trace(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    """Per-frame force in newtons: one half-sine pulse per segment."""
    t = np.arange(cfg.frames_per_set, dtype=np.float64)
    segment = cfg.frames_per_set / cfg.pulses
    duration = cfg.duty * segment
    forces = np.zeros(cfg.frames_per_set)
    for p in range(cfg.pulses):
        start = p * segment + rng.uniform(0.0, segment - duration)
        peak = rng.uniform(cfg.peak_min, cfg.peak_max)
        phase = (t - start) / duration
        inside = (phase > 0.0) & (phase < 1.0)
        forces[inside] = peak * np.sin(np.pi * phase[inside])
    return np.clip(forces, 0.0, MAX_FORCE_NEWTONS)


def _disk_axes(force: float, cfg: SynthConfig) -> Tuple[float, float]:
    radius = DISK_RADIUS * cfg.image_size
    squeeze = cfg.deformation_gain * min(max(force, 0.0), MAX_FORCE_NEWTONS) / MAX_FORCE_NEWTONS
    return radius * (1.0 + 0.5 * squeeze), radius * (1.0 - squeeze)


def disk_height(force: float, cfg: SynthConfig) -> float:
    """Vertical extent ``2b`` of the disk in pixels."""
    return 2.0 * _disk_axes(force, cfg)[1]


def _vertical_coverage(lo: np.ndarray, hi: np.ndarray, size: int) -> np.ndarray:
    """Fraction of each pixel row ``[i, i+1)`` inside ``[lo, hi]`` per column."""
    rows = np.arange(size, dtype=np.float64)[:, None]
    return np.clip(np.minimum(rows + 1.0, hi[None, :]) - np.maximum(rows, lo[None, :]), 0.0, 1.0)


def disk_coverage(force: float, cfg: SynthConfig) -> np.ndarray:
    size = cfg.image_size
    a, b = _disk_axes(force, cfg)
    cx = size / 2.0
    center_y = FLOOR_LINE * size - b
    u = (np.arange(size) + 0.5 - cx) / a
    half = b * np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    inside = half > 0.0
    lo = np.where(inside, center_y - half, 0.0)
    hi = np.where(inside, center_y + half, 0.0)
    return _vertical_coverage(lo, hi, size)


def bar_coverage(force: float, cfg: SynthConfig) -> np.ndarray:
    size = cfg.image_size
    _, b = _disk_axes(force, cfg)
    disk_top = FLOOR_LINE * size - 2.0 * b
    bottom = disk_top - BAR_GAP * size * (1.0 - min(max(force, 0.0), CONTACT_NEWTONS) / CONTACT_NEWTONS)
    x = np.arange(size) + 0.5 - size / 2.0
    in_bar = np.abs(x) < BAR_HALF_WIDTH * DISK_RADIUS * size
    hi = np.where(in_bar, bottom, 0.0)
    return _vertical_coverage(np.zeros(size), hi, size)


def render_frame(force: float, cfg: SynthConfig, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """``S×S`` image in ``[0, 1]`` quantized to 8-bit levels."""
    img = np.maximum(disk_coverage(force, cfg), BAR_LEVEL * bar_coverage(force, cfg))
    if cfg.noise > 0.0 and rng is not None:
        img = img + rng.normal(0.0, cfg.noise, size=img.shape)
    return np.rint(np.clip(img, 0.0, 1.0) * 255.0) / 255.0


def synth_generate(cfg: SynthConfig) -> List[RecordingSet]:
    """Render ``cfg.n_sets`` recordings; bitwise reproducible for a given seed."""
    sets = []
    for i in range(cfg.n_sets):
        rng = np.random.default_rng([cfg.seed, i])
        forces = force_trace(cfg, rng)
        frames = np.stack([render_frame(f, cfg, rng) for f in forces])[..., None].astype(np.float32)
        sets.append(
            RecordingSet(
                set_id=f"{cfg.object}/set_{i:03d}",
                object=cfg.object,
                angle_deg=cfg.angle_deg,
                lux=cfg.lux,
                frames=frames,
                forces=forces,
                timestamps_ns=np.arange(cfg.frames_per_set, dtype=np.int64) * cfg.frame_interval_ns,
            )
        )
    logger.info("Generated %d synthetic sets of %d frames (seed=%d)", cfg.n_sets, cfg.frames_per_set, cfg.seed)
    return sets


def write_corpus(sets: Sequence[RecordingSet], root: Union[str, Path]) -> Path:
    """Write sets as PGM frames plus CSV logs; returns the manifest path."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    manifest = root / "manifest.csv"
    with manifest.open("w", newline="", encoding="utf-8") as mf:
        index_writer = csv.writer(mf)
        index_writer.writerow(["path", "object", "angle_deg", "lux"])
        for rec in sets:
            set_dir = root / rec.set_id
            set_dir.mkdir(parents=True, exist_ok=True)
            with (set_dir / FRAME_INDEX).open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["filename", "timestamp_ns"])
                for j, (frame, ts) in enumerate(zip(rec.frames, rec.timestamps_ns)):
                    name = f"frame_{j:06d}.pgm"
                    pixels = np.rint(np.asarray(frame[..., 0], dtype=np.float64) * 255.0).astype(np.uint8)
                    Image.fromarray(pixels).save(set_dir / name)
                    writer.writerow([name, int(ts)])
            with (set_dir / FORCE_LOG).open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["timestamp_ns", "force_newtons"])
                for ts, force in zip(rec.timestamps_ns, rec.forces):
                    writer.writerow([int(ts), repr(float(force))])
            index_writer.writerow([rec.set_id, rec.object, rec.angle_deg, rec.lux])
    logger.info("Wrote %d sets to %s", len(sets), root)
    return manifest
