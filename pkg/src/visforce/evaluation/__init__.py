# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Metrics, force traces, attention-map export and gradient checks."""

from visforce.evaluation.attention_export import attention_sample, export_attention_maps
from visforce.evaluation.gradcheck_runner import BLOCKS, BlockResult, check_blocks, format_table, raise_on_failure
from visforce.evaluation.metrics import (
    BinnedError,
    MetricsReport,
    binned_mae,
    compare_reports,
    improvement_ratio,
    mae,
    rmse,
)
from visforce.evaluation.trace import ForceTrace, evaluate, predict_trace

__all__ = [
    "rmse",
    "mae",
    "improvement_ratio",
    "binned_mae",
    "BinnedError",
    "MetricsReport",
    "compare_reports",
    "ForceTrace",
    "predict_trace",
    "evaluate",
    "attention_sample",
    "export_attention_maps",
    "BLOCKS",
    "BlockResult",
    "check_blocks",
    "format_table",
    "raise_on_failure",
]
