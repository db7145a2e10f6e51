# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Shared plumbing for parameter containers and initialization."""

from __future__ import annotations

import math
from dataclasses import fields, is_dataclass
from typing import Iterator, List, Tuple

import numpy as np

from visforce.tensor import Parameter


class ParameterGroup:
    """Mixin for dataclasses that hold :class:`Parameter` fields.

    ``parameters()`` walks fields in declaration order, descending into
    nested groups and lists, so the order is stable across runs.
    """

    def parameters(self) -> List[Parameter]:
        return list(_walk(self))


def _walk(obj: object) -> Iterator[Parameter]:
    if isinstance(obj, Parameter):
        yield obj
    elif isinstance(obj, (list, tuple)):
        for item in obj:
            yield from _walk(item)
    elif is_dataclass(obj) and not isinstance(obj, type):
        for f in fields(obj):
            yield from _walk(getattr(obj, f.name))


def he_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    """``U(-√(6/fan_in), √(6/fan_in))`` for conv and dense weights."""
    bound = math.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def recurrent_uniform(rng: np.random.Generator, shape: Tuple[int, ...], hidden: int) -> np.ndarray:
    """``U(-1/√hidden, 1/√hidden)`` for LSTM matrices."""
    bound = 1.0 / math.sqrt(hidden)
    return rng.uniform(-bound, bound, size=shape)
