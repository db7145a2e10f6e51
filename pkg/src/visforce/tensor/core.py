# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Tensor values, learnable parameters and the reverse-mode tape.

A :class:`Tensor` wraps a float64 :class:`numpy.ndarray`. Operations in
:mod:`visforce.tensor.ops` record themselves on the active :class:`Tape`
when one is open and at least one input requires a gradient; outside a tape
they only compute values.

Usage::

    with Tape() as tape:
        loss = ops.sum(ops.mul(p, p))
    backward(tape, loss)
    p.grad  # == 2 * p.data
"""

from __future__ import annotations

import contextvars
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from visforce.errors import ContractViolation, ShapeError

ArrayLike = Union[np.ndarray, Sequence[float], float, int]

# Gradient of the output -> gradients of each input (None where not needed).
VJP = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_active_tape: contextvars.ContextVar[Optional[Tape]] = contextvars.ContextVar("visforce_active_tape", default=None)


class Tensor:
    """Dense float64 array with optional gradient tracking.

    Values are immutable once constructed; only :class:`Parameter` exposes a
    way to replace its contents.
    """

    __slots__ = ("_data", "requires_grad")

    def __init__(self, data: ArrayLike, requires_grad: bool = False) -> None:
        arr = np.array(data, dtype=np.float64)
        if any(dim < 1 for dim in arr.shape):
            raise ShapeError(f"all dimension sizes must be >= 1, got {arr.shape}")
        arr.setflags(write=False)
        self._data = arr
        self.requires_grad = requires_grad

    @classmethod
    def _wrap(cls, arr: np.ndarray, requires_grad: bool) -> Tensor:
        """Adopt an op result without copying."""
        if any(dim < 1 for dim in arr.shape):
            raise ShapeError(f"all dimension sizes must be >= 1, got {arr.shape}")
        arr.setflags(write=False)
        out = cls.__new__(cls)
        out._data = arr
        out.requires_grad = requires_grad
        return out

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> Tuple[int, ...]:
        return self._data.shape

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return int(self._data.size)

    def item(self) -> float:
        if self._data.size != 1:
            raise ContractViolation(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self._data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """Return a writable copy of the values."""
        return np.array(self._data)

    # Operator sugar; the implementations live in ops.

    def __add__(self, other: Tensor) -> Tensor:
        from visforce.tensor import ops

        return ops.add(self, other)

    def __sub__(self, other: Tensor) -> Tensor:
        from visforce.tensor import ops

        return ops.sub(self, other)

    def __mul__(self, other: Tensor) -> Tensor:
        from visforce.tensor import ops

        return ops.mul(self, other)

    def __matmul__(self, other: Tensor) -> Tensor:
        from visforce.tensor import ops

        return ops.matmul(self, other)

    def __neg__(self) -> Tensor:
        from visforce.tensor import ops

        return ops.scale(self, -1.0)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


class Parameter(Tensor):
    """A learnable tensor with a stable identifier and a same-shaped gradient."""

    __slots__ = ("name", "grad")

    def __init__(self, name: str, data: ArrayLike) -> None:
        super().__init__(data, requires_grad=True)
        if not name:
            raise ContractViolation("parameter id must be a non-empty string")
        self.name = name
        self.grad = np.zeros(self.shape, dtype=np.float64)

    def assign(self, values: ArrayLike) -> None:
        """Replace the parameter values; the shape must not change."""
        arr = np.array(values, dtype=np.float64)
        if arr.shape != self.shape:
            raise ShapeError(f"parameter {self.name!r}: cannot assign shape {arr.shape} to {self.shape}")
        arr.setflags(write=False)
        self._data = arr

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape})"


@dataclass
class OpRecord:
    """One primitive application: enough to replay its adjoint."""

    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    vjp: VJP


@dataclass
class Tape:
    """Ordered log of the primitive operations of one forward pass.

    Opening a tape (``with Tape() as tape``) makes it the recording target
    for the current context; tapes on different threads are independent.
    """

    records: List[OpRecord] = field(default_factory=list)
    _token: Optional[contextvars.Token] = field(default=None, repr=False)  # type: ignore[type-arg]

    def __enter__(self) -> Tape:
        if self._token is not None:
            raise ContractViolation("a tape cannot be entered twice")
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc: object) -> None:
        if self._token is not None:
            _active_tape.reset(self._token)
            self._token = None

    def __len__(self) -> int:
        return len(self.records)

    def record(self, op: str, inputs: Tuple[Tensor, ...], output: Tensor, vjp: VJP) -> None:
        self.records.append(OpRecord(op=op, inputs=inputs, output=output, vjp=vjp))

    def parameters(self) -> List[Parameter]:
        """Parameters that feed any recorded op, in first-use order."""
        seen: Dict[int, Parameter] = {}
        for rec in self.records:
            for tensor in rec.inputs:
                if isinstance(tensor, Parameter) and id(tensor) not in seen:
                    seen[id(tensor)] = tensor
        return list(seen.values())


def current_tape() -> Optional[Tape]:
    return _active_tape.get()


def make_output(op: str, value: np.ndarray, inputs: Tuple[Tensor, ...], vjp: VJP) -> Tensor:
    """Wrap ``value`` as the result of ``op`` and record it when tracking."""
    needs_grad = any(t.requires_grad for t in inputs)
    out = Tensor._wrap(np.asarray(value, dtype=np.float64), needs_grad)
    tape = _active_tape.get()
    if tape is not None and needs_grad:
        tape.record(op, inputs, out, vjp)
    return out


def gradients(tape: Tape, loss: Tensor) -> Tuple[Dict[str, np.ndarray], int]:
    """Replay the adjoints of ``tape`` without touching any parameter.

    Returns ``(grads by parameter id, records visited)``. Each record is
    visited exactly once, newest first. Safe to call from several threads
    on distinct tapes.
    """
    if loss.size != 1:
        raise ContractViolation(f"backward() needs a scalar loss, got shape {loss.shape}")

    grads: Dict[int, np.ndarray] = {id(loss): np.ones(loss.shape, dtype=np.float64)}
    visited = 0
    for rec in reversed(tape.records):
        visited += 1
        g_out = grads.pop(id(rec.output), None)
        if g_out is None:
            continue
        input_grads = rec.vjp(g_out)
        for tensor, g in zip(rec.inputs, input_grads):
            if g is None or not tensor.requires_grad:
                continue
            if g.shape != tensor.shape:
                raise ShapeError(f"adjoint of {rec.op} produced shape {g.shape} for input of shape {tensor.shape}")
            key = id(tensor)
            grads[key] = grads[key] + g if key in grads else g

    by_name: Dict[str, np.ndarray] = {}
    for param in tape.parameters():
        g = grads.get(id(param))
        by_name[param.name] = np.array(g, dtype=np.float64) if g is not None else np.zeros(param.shape)
    return by_name, visited


def backward(tape: Tape, loss: Tensor) -> int:
    """Populate ``grad`` on every parameter recorded on ``tape``.

    Returns the number of op records whose adjoint was replayed.
    """
    by_name, visited = gradients(tape, loss)
    for param in tape.parameters():
        param.grad = by_name[param.name]
    return visited
