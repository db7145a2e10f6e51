# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Tests for windowed minibatch sampling."""

from __future__ import annotations

import numpy as np
import pytest

from visforce.data.recording import RecordingSet
from visforce.errors import ContractViolation, ShapeError
from visforce.training.sampler import sample_minibatch


def _recording(index: int, n: int) -> RecordingSet:
    return RecordingSet(
        set_id=f"sponge/set_{index:03d}",
        object="sponge",
        angle_deg=0,
        lux=550,
        frames=np.zeros((n, 4, 4, 1)),
        forces=np.full(n, 3.0),
        timestamps_ns=np.arange(n, dtype=np.int64) * 100,
    )


class TestSampleMinibatch:
    def test_shapes(self, tiny_sets, tiny_cfg):
        batch = sample_minibatch(tiny_sets, tiny_cfg, np.random.default_rng(0))
        assert batch.frames.shape == (4, 3, 8, 8, 1)
        assert batch.targets.shape == (4,)
        assert len(batch) == 4
        assert batch.frames.dtype == np.float64

    def test_context_frames_extend_window(self, tiny_sets, tiny_cfg):
        batch = sample_minibatch(tiny_sets, tiny_cfg, np.random.default_rng(0), context=1)
        assert batch.frames.shape[1] == 4

    def test_targets_are_last_frame_forces(self, tiny_sets, tiny_cfg):
        batch = sample_minibatch(tiny_sets, tiny_cfg, np.random.default_rng(3))
        by_id = {s.set_id: s for s in tiny_sets}
        for set_id, end, target, frames in zip(batch.set_ids, batch.ends, batch.targets, batch.frames):
            rec = by_id[set_id]
            assert target == pytest.approx(rec.forces[end] / 12.0)
            np.testing.assert_array_equal(frames[-1], rec.frames[end])

    def test_same_rng_state_same_batch(self, tiny_sets, tiny_cfg):
        a = sample_minibatch(tiny_sets, tiny_cfg, np.random.default_rng(5))
        b = sample_minibatch(tiny_sets, tiny_cfg, np.random.default_rng(5))
        np.testing.assert_array_equal(a.frames, b.frames)
        assert a.ends == b.ends

    def test_sets_drawn_uniformly_regardless_of_length(self, tiny_cfg):
        lengths = (1, 3, 7, 20, 60)
        dataset = [_recording(i, n) for i, n in enumerate(lengths)]
        cfg = tiny_cfg.overridden(image_size=4, window=1, batch_size=5000)
        rng = np.random.default_rng(2024)
        counts = dict.fromkeys((s.set_id for s in dataset), 0)
        for _ in range(20):
            for set_id in sample_minibatch(dataset, cfg, rng).set_ids:
                counts[set_id] += 1
        draws = 20 * cfg.batch_size
        p = 1.0 / len(dataset)
        sigma = np.sqrt(draws * p * (1.0 - p))
        for set_id, count in counts.items():
            assert abs(count - draws * p) < 3.0 * sigma, (set_id, count)

    def test_image_size_mismatch(self, tiny_sets, tiny_cfg):
        cfg = tiny_cfg.overridden(image_size=16)
        with pytest.raises(ShapeError):
            sample_minibatch(tiny_sets, cfg, np.random.default_rng(0))

    def test_empty_dataset(self, tiny_cfg):
        with pytest.raises(ContractViolation):
            sample_minibatch([], tiny_cfg, np.random.default_rng(0))


class TestBatchChunks:
    def test_chunk_sizes_and_order(self, tiny_sets, tiny_cfg):
        batch = sample_minibatch(tiny_sets, tiny_cfg.overridden(batch_size=5), np.random.default_rng(0))
        chunks = batch.chunks(2)
        assert [len(c) for c in chunks] == [2, 2, 1]
        np.testing.assert_array_equal(np.concatenate([c.targets for c in chunks]), batch.targets)
        assert sum((c.ends for c in chunks), ()) == batch.ends
