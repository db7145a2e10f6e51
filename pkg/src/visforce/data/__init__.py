# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Recording sets: ingestion, preprocessing, splits and synthetic corpora."""

from visforce.data.ingest import load_dataset, read_manifest, synchronize
from visforce.data.preprocess import preprocess_frame, read_image
from visforce.data.recording import MAX_FORCE_NEWTONS, RecordingSet, SequenceSample
from visforce.data.split import split_protocol
from visforce.data.synth import SynthConfig, synth_generate, write_corpus

__all__ = [
    "RecordingSet",
    "SequenceSample",
    "MAX_FORCE_NEWTONS",
    "load_dataset",
    "read_manifest",
    "synchronize",
    "preprocess_frame",
    "read_image",
    "split_protocol",
    "SynthConfig",
    "synth_generate",
    "write_corpus",
]
