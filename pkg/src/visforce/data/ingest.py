# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Loading recording sets listed in a corpus manifest.

Manifest (CSV, header required)::

    path,object,angle_deg,lux
    sponge/set_000,sponge,0,350

Each set directory holds the camera frames, an optional ``frames.csv``
(``filename,timestamp_ns``) and a load-cell log ``force.csv``
(``timestamp_ns,force_newtons``). Without ``frames.csv`` the frame
timestamps are the numeric stems of the image file names.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from visforce.data.preprocess import DEFAULT_SIZE, preprocess_frame, read_image
from visforce.data.recording import MAX_FORCE_NEWTONS, RecordingSet
from visforce.errors import ContractViolation, DatasetError

logger = logging.getLogger(__name__)

MANIFEST_COLUMNS = ("path", "object", "angle_deg", "lux")
FRAME_INDEX = "frames.csv"
FORCE_LOG = "force.csv"
IMAGE_SUFFIXES = (".pgm", ".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


@dataclass(frozen=True)
class ManifestEntry:
    set_id: str
    set_dir: Path
    object: str
    angle_deg: int
    lux: int


def read_manifest(manifest_path: Union[str, Path]) -> List[ManifestEntry]:
    path = Path(manifest_path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = list(reader.fieldnames or [])
            rows = list(reader)
    except OSError as exc:
        raise DatasetError(f"cannot read manifest {path}: {exc}") from exc
    missing = [c for c in MANIFEST_COLUMNS if c not in header]
    if missing:
        raise DatasetError(f"{path}: manifest lacks columns {missing}")

    entries = []
    for line, row in enumerate(rows, start=2):
        try:
            entries.append(
                ManifestEntry(
                    set_id=row["path"].strip(),
                    set_dir=(path.parent / row["path"]).resolve(),
                    object=row["object"].strip(),
                    angle_deg=int(row["angle_deg"]),
                    lux=int(row["lux"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise DatasetError(f"{path}:{line}: malformed manifest row {row!r}") from exc
    return entries


def read_force_log(path: Path) -> Tuple[np.ndarray, np.ndarray]:
    """``(timestamps_ns, force_newtons)``; timestamps are parsed as exact integers."""
    stamps = np.loadtxt(path, delimiter=",", skiprows=1, usecols=0, ndmin=1, dtype=np.int64)
    values = np.loadtxt(path, delimiter=",", skiprows=1, usecols=1, ndmin=1, dtype=np.float64)
    return stamps, values


def read_frame_index(set_dir: Path) -> List[Tuple[Path, int]]:
    """Image paths with their timestamps, in file order."""
    index = set_dir / FRAME_INDEX
    if index.exists():
        with index.open(newline="", encoding="utf-8") as fh:
            return [(set_dir / row["filename"], int(row["timestamp_ns"])) for row in csv.DictReader(fh)]
    images = sorted(p for p in set_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    try:
        return [(p, int(p.stem)) for p in images]
    except ValueError as exc:
        raise ValueError(f"{set_dir}: no {FRAME_INDEX} and image names are not timestamps") from exc


def _check_monotonic(ts: np.ndarray, what: str) -> None:
    if ts.size > 1 and np.any(np.diff(ts) <= 0):
        raise ContractViolation(f"{what} timestamps are not strictly increasing")


def synchronize(
    frame_ts: Sequence[int], force_ts: Sequence[int], tolerance_ns: Optional[float] = None
) -> np.ndarray:
    """Index of the nearest force sample for every frame (ties go to the earlier sample).

    ``tolerance_ns`` defaults to half the median force sampling interval;
    any frame farther than that from its match rejects the whole set.
    """
    frames = np.asarray(frame_ts, dtype=np.int64)
    forces = np.asarray(force_ts, dtype=np.int64)
    if forces.size == 0 or frames.size == 0:
        raise ContractViolation("cannot synchronize empty timestamp streams")
    _check_monotonic(frames, "frame")
    _check_monotonic(forces, "force")

    right = np.clip(np.searchsorted(forces, frames, side="left"), 0, forces.size - 1)
    left = np.clip(right - 1, 0, forces.size - 1)
    take_left = np.abs(frames - forces[left]) <= np.abs(forces[right] - frames)
    idx = np.where(take_left, left, right)

    if tolerance_ns is None:
        tolerance_ns = float(np.median(np.diff(forces))) / 2.0 if forces.size > 1 else 0.0
    gap = np.abs(frames - forces[idx])
    worst = int(gap.argmax())
    if gap[worst] > tolerance_ns:
        raise ContractViolation(
            f"frame {worst} is {int(gap[worst])} ns from the nearest force sample (tolerance {tolerance_ns:g} ns)"
        )
    return idx


def load_set(entry: ManifestEntry, image_size: int = DEFAULT_SIZE) -> RecordingSet:
    """Read, synchronize and preprocess one set; corrupt frames are skipped."""
    set_dir = entry.set_dir
    if not set_dir.is_dir():
        raise FileNotFoundError(f"set directory {set_dir} does not exist")
    force_path = set_dir / FORCE_LOG
    if not force_path.exists():
        raise FileNotFoundError(f"missing force log {force_path}")

    force_ts, force_values = read_force_log(force_path)
    index = read_frame_index(set_dir)
    if not index:
        raise FileNotFoundError(f"no frames in {set_dir}")
    paired = synchronize([ts for _, ts in index], force_ts)

    frames, forces, stamps = [], [], []
    for (image_path, ts), force_idx in zip(index, paired):
        try:
            frame = preprocess_frame(read_image(image_path), image_size, ts)
        except (OSError, ContractViolation) as exc:
            logger.warning("Skipping frame %s: %s", image_path, exc)
            continue
        frames.append(frame.pixels)
        forces.append(force_values[force_idx])
        stamps.append(ts)
    if not frames:
        raise ContractViolation("every frame failed to decode")

    force_arr = np.asarray(forces, dtype=np.float64)
    if force_arr.min() < 0.0 or force_arr.max() > MAX_FORCE_NEWTONS:
        logger.warning("%s: clipping forces outside [0, %g] N", entry.set_id, MAX_FORCE_NEWTONS)
        force_arr = np.clip(force_arr, 0.0, MAX_FORCE_NEWTONS)
    return RecordingSet(
        set_id=entry.set_id,
        object=entry.object,
        angle_deg=entry.angle_deg,
        lux=entry.lux,
        frames=np.stack(frames).astype(np.float32),
        forces=force_arr,
        timestamps_ns=np.asarray(stamps, dtype=np.int64),
    )


def _try_load(entry: ManifestEntry, image_size: int) -> Tuple[Optional[RecordingSet], Optional[str]]:
    try:
        return load_set(entry, image_size), None
    except (OSError, ValueError, KeyError) as exc:
        return None, str(exc)


def load_dataset(
    manifest_path: Union[str, Path],
    image_size: int = DEFAULT_SIZE,
    strict: bool = False,
    workers: int = 1,
) -> List[RecordingSet]:
    """Load every set in the manifest, in manifest order.

    Rejected sets are logged and dropped. With ``strict=True`` (or when no
    set survives) a :class:`DatasetError` lists every rejection.
    """
    entries = read_manifest(manifest_path)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda e: _try_load(e, image_size), entries))
    else:
        results = [_try_load(e, image_size) for e in entries]

    sets: List[RecordingSet] = []
    errors: Dict[str, str] = {}
    for entry, (recording, error) in zip(entries, results):
        if error is not None:
            logger.warning("Rejected set %s: %s", entry.set_id, error)
            errors[entry.set_id] = error
        else:
            sets.append(recording)

    if errors and (strict or not sets):
        raise DatasetError(f"{len(errors)} of {len(entries)} sets could not be loaded", errors)
    logger.info("Loaded %d sets (%d frames) from %s", len(sets), sum(len(s) for s in sets), manifest_path)
    return sets
