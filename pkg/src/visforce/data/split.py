# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Train/test protocol split.

Sets are grouped by object and by (angle, illuminance) condition; each
cell contributes ``⌊0.2·n + 0.5⌋`` test sets, so a full cell of 15 sets
gives 3 and a 12-condition object gives 144 train / 36 test.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from typing import Dict, List, Sequence, Tuple

import numpy as np

from visforce.data.recording import RecordingSet
from visforce.errors import ContractViolation

logger = logging.getLogger(__name__)

TEST_FRACTION = 0.2


def holdout_count(n: int) -> int:
    return int(np.floor(TEST_FRACTION * n + 0.5))


def split_protocol(
    sets: Sequence[RecordingSet], seed: int
) -> Tuple[List[RecordingSet], List[RecordingSet]]:
    """Deterministic per-condition 80/20 split; both lists keep input order."""
    ids = [s.set_id for s in sets]
    if len(set(ids)) != len(ids):
        raise ContractViolation("recording set ids must be unique")

    cells: Dict[Tuple[str, int, int], List[int]] = defaultdict(list)
    for i, s in enumerate(sets):
        cells[(s.object, s.angle_deg, s.lux)].append(i)

    conditions = sorted({s.condition for s in sets})
    for obj in sorted({s.object for s in sets}):
        for angle, lux in conditions:
            if (obj, angle, lux) not in cells:
                logger.warning("No %s sets recorded at %d deg / %d lux; cell skipped", obj, angle, lux)

    rng = np.random.default_rng(seed)
    test_idx = set()
    for key in sorted(cells):
        members = cells[key]
        chosen = rng.permutation(len(members))[: holdout_count(len(members))]
        test_idx.update(members[j] for j in chosen)

    train = [s for i, s in enumerate(sets) if i not in test_idx]
    test = [s for i, s in enumerate(sets) if i in test_idx]
    logger.info("Split %d sets into %d train / %d test (seed=%d)", len(sets), len(train), len(test), seed)
    return train, test
