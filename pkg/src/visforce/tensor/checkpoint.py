# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Parameter checkpoint files.

Layout (all integers little-endian)::

    b"VFCKPT\\n"                      magic
    uint32 version                    FORMAT_VERSION
    uint32 n, n bytes                 JSON metadata, sorted keys
    uint32 count                      number of entries, sorted by id
    per entry:
        uint32 n, n bytes             parameter id (utf-8)
        uint32 rank, rank × uint64    shape
        prod(shape) × float64         row-major values

The encoding is a pure function of (metadata, values), so
save → load → save reproduces the file byte for byte.
"""

from __future__ import annotations

import io
import json
import logging
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, BinaryIO, Dict, Iterable, Mapping, Optional, Union

import numpy as np

from visforce.errors import CheckpointError
from visforce.tensor.core import Parameter

logger = logging.getLogger(__name__)

MAGIC = b"VFCKPT\n"
FORMAT_VERSION = 1

PathLike = Union[str, "os.PathLike[str]"]


@dataclass
class Checkpoint:
    """Parameter values by id plus free-form metadata."""

    tensors: Dict[str, np.ndarray]
    metadata: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_parameters(cls, params: Iterable[Parameter], metadata: Optional[Mapping[str, Any]] = None) -> Checkpoint:
        return cls(tensors={p.name: p.numpy() for p in params}, metadata=dict(metadata or {}))

    def restore(self, params: Iterable[Parameter]) -> None:
        """Copy values into ``params``; every id and shape must match."""
        params = list(params)
        expected = {p.name for p in params}
        missing = sorted(expected - set(self.tensors))
        if missing:
            raise CheckpointError(f"checkpoint lacks parameter {missing[0]!r}", parameter=missing[0])
        extra = sorted(set(self.tensors) - expected)
        if extra:
            raise CheckpointError(f"checkpoint has unexpected parameter {extra[0]!r}", parameter=extra[0])
        for param in params:
            values = self.tensors[param.name]
            if values.shape != param.shape:
                raise CheckpointError(
                    f"parameter {param.name!r}: checkpoint shape {values.shape} != model shape {param.shape}",
                    parameter=param.name,
                )
            param.assign(values)


def _write_u32(fh: BinaryIO, value: int) -> None:
    fh.write(struct.pack("<I", value))


def _read_exact(fh: BinaryIO, n: int) -> bytes:
    chunk = fh.read(n)
    if len(chunk) != n:
        raise CheckpointError("truncated checkpoint file")
    return chunk


def _read_u32(fh: BinaryIO) -> int:
    return int(struct.unpack("<I", _read_exact(fh, 4))[0])


def encode(checkpoint: Checkpoint) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    _write_u32(buf, FORMAT_VERSION)
    meta = json.dumps(checkpoint.metadata, sort_keys=True, separators=(",", ":")).encode("utf-8")
    _write_u32(buf, len(meta))
    buf.write(meta)
    _write_u32(buf, len(checkpoint.tensors))
    for name in sorted(checkpoint.tensors):
        values = np.ascontiguousarray(checkpoint.tensors[name], dtype="<f8")
        encoded = name.encode("utf-8")
        _write_u32(buf, len(encoded))
        buf.write(encoded)
        _write_u32(buf, values.ndim)
        for dim in values.shape:
            buf.write(struct.pack("<Q", dim))
        buf.write(values.tobytes(order="C"))
    return buf.getvalue()


def save_checkpoint(path: PathLike, checkpoint: Checkpoint) -> Path:
    """Write ``checkpoint`` atomically; the previous file survives a crash."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_name(target.name + ".tmp")
    tmp.write_bytes(encode(checkpoint))
    os.replace(tmp, target)
    logger.debug("Wrote checkpoint %s (%d tensors)", target, len(checkpoint.tensors))
    return target


def load_checkpoint(path: PathLike) -> Checkpoint:
    source = Path(path)
    try:
        fh = source.open("rb")
    except OSError as exc:
        raise CheckpointError(f"cannot open checkpoint {source}: {exc}") from exc
    with fh:
        if _read_exact(fh, len(MAGIC)) != MAGIC:
            raise CheckpointError(f"{source} is not a visforce checkpoint")
        version = _read_u32(fh)
        if version != FORMAT_VERSION:
            raise CheckpointError(f"{source}: unsupported checkpoint format version {version}")
        try:
            metadata = json.loads(_read_exact(fh, _read_u32(fh)).decode("utf-8"))
        except (UnicodeDecodeError, ValueError) as exc:
            raise CheckpointError(f"{source}: corrupt metadata block") from exc
        if not isinstance(metadata, dict):
            raise CheckpointError(f"{source}: metadata block is not an object")
        tensors: Dict[str, np.ndarray] = {}
        for _ in range(_read_u32(fh)):
            try:
                name = _read_exact(fh, _read_u32(fh)).decode("utf-8")
            except UnicodeDecodeError as exc:
                raise CheckpointError(f"{source}: parameter id is not valid utf-8") from exc
            rank = _read_u32(fh)
            shape = tuple(int(struct.unpack("<Q", _read_exact(fh, 8))[0]) for _ in range(rank))
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(_read_exact(fh, 8 * count), dtype="<f8").astype(np.float64)
            tensors[name] = data.reshape(shape)
        if fh.read(1):
            raise CheckpointError(f"{source}: trailing bytes after last entry")
    return Checkpoint(tensors=tensors, metadata=metadata)
