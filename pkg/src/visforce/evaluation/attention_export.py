# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Dump spatial attention maps of an SSAM model as CSV matrices."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Union

import numpy as np

from visforce.data.recording import RecordingSet, SequenceSample
from visforce.models.network import ForceEstimator
from visforce.tensor import Tensor

logger = logging.getLogger(__name__)


def attention_sample(model: ForceEstimator, rec: RecordingSet, end: int, window: int = 20) -> SequenceSample:
    """Window ending at ``end`` including the model's context frames."""
    return rec.window(end, window + model.context_frames)


def export_attention_maps(
    model: ForceEstimator, sample: SequenceSample, output_dir: Union[str, Path]
) -> List[Path]:
    """Write ``attention_<frame>.csv`` for every non-context frame of ``sample``.

    ``<frame>`` is the index within the recording set (negative for
    padding before the first frame). Raises
    :class:`~visforce.errors.UnsupportedOperationError` for models
    without a spatial attention map.
    """
    maps = model.attention_maps(Tensor(np.asarray(sample.frames, dtype=np.float64)[None]))[0]
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    first = sample.offset + model.context_frames
    paths = []
    for t, m_s in enumerate(maps):
        path = out / f"attention_{first + t}.csv"
        np.savetxt(path, m_s, delimiter=",", fmt="%.17g")
        paths.append(path)
    logger.info("Wrote %d attention maps (%dx%d) to %s", len(paths), maps.shape[1], maps.shape[2], out)
    return paths
